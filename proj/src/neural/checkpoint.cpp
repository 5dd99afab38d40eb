#include "povmnet/neural/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "povmnet/errors.hpp"
#include "povmnet/util/kvfile.hpp"

namespace povmnet::neural {

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  for (double d : parse_double_list(s, ',')) out.push_back(static_cast<int>(d));
  return out;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const ModelConfig& c = ckpt.params.config;
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(ckpt.params.values.size()) * 8);
  for (double v : ckpt.params.values) append_le(bytes, v);

  KeyValueFile kv;
  kv.set("format", std::string("povmnet-checkpoint"));
  kv.set("version", 1);
  kv.set("input_features", c.input_features);
  kv.set("rnn_features", join(c.rnn_features));
  kv.set("gat_features", join(c.gat_features));
  kv.set("dfnn_features", join(c.dfnn_features));
  kv.set("learning_rate", c.learning_rate);
  kv.set("seed", c.seed);
  kv.set("epoch", ckpt.epoch);
  kv.set("val_loss", ckpt.val_loss);
  kv.set("n_sites", ckpt.n_sites);
  kv.set("label", to_string(ckpt.label));
  kv.set("n_params", static_cast<std::int64_t>(ckpt.params.values.size()));
  kv.set("params_checksum", std::to_string(fnv1a64(bytes.data(), bytes.size())));
  write_file_bytes(dir / "params.f64", bytes);
  kv.save(dir / "manifest.txt");
}

Checkpoint read_checkpoint(const std::filesystem::path& dir) {
  const auto kv = KeyValueFile::load(dir / "manifest.txt");
  if (kv.get("format") != "povmnet-checkpoint") throw DataError("not a checkpoint: " + dir.string());
  if (kv.get_int("version") != 1) throw DataError("unsupported checkpoint version");
  Checkpoint ckpt;
  ModelConfig& c = ckpt.params.config;
  c.input_features = static_cast<int>(kv.get_int("input_features"));
  c.rnn_features = split_ints(kv.get("rnn_features"));
  c.gat_features = split_ints(kv.get("gat_features"));
  c.dfnn_features = split_ints(kv.get("dfnn_features"));
  c.learning_rate = kv.get_double("learning_rate");
  c.seed = kv.get_uint("seed");
  ckpt.epoch = static_cast<int>(kv.get_int("epoch"));
  ckpt.val_loss = kv.get_double("val_loss");
  ckpt.n_sites = static_cast<int>(kv.get_int("n_sites"));
  ckpt.label = parse_label_kind(kv.get("label"));
  const ParameterLayout layout(c);
  const auto n = kv.get_int("n_params");
  if (n != layout.size()) throw DataError("checkpoint parameter count does not match its model config");
  const auto bytes = read_file_bytes(dir / "params.f64");
  if (bytes.size() != static_cast<std::size_t>(n) * 8) throw DataError("params.f64 truncated");
  if (std::to_string(fnv1a64(bytes.data(), bytes.size())) != kv.get("params_checksum"))
    throw DataError("params.f64 checksum mismatch");
  ckpt.params.values.resize(n);
  for (std::int64_t i = 0; i < n; ++i) ckpt.params.values(i) = read_le_double(&bytes[static_cast<std::size_t>(i) * 8]);
  return ckpt;
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << '\n';
}

std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss") throw DataError("unexpected history header");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = parse_double_list(line, ',');
    if (f.size() != 3) throw DataError("malformed history row");
    out.push_back({static_cast<int>(f[0]), f[1], f[2]});
  }
  return out;
}

}  // namespace povmnet::neural
