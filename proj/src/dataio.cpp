#include "povmnet/dataio.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "povmnet/rng.hpp"
#include "povmnet/util/kvfile.hpp"
#include "povmnet/util/parallel.hpp"

namespace povmnet {

namespace {

constexpr const char* kFormatName = "povmnet-dataset";
constexpr int kFormatVersion = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 16);
  if (s.empty() || *end != '\0') throw DataError("manifest: bad checksum '" + s + "'");
  return v;
}

std::size_t record_bytes(const Dataset& d) {
  return static_cast<std::size_t>(d.n_batches) * static_cast<std::size_t>(d.n_samples) *
         static_cast<std::size_t>(d.system.n_sites);
}

std::string join_labels(const std::vector<LabelKind>& kinds) {
  std::string s;
  for (std::size_t i = 0; i < kinds.size(); ++i) s += (i ? "," : "") + to_string(kinds[i]);
  return s;
}

}  // namespace

std::string to_string(DatasetKind k) { return k == DatasetKind::kUnitary ? "unitary" : "dissipative"; }
std::string to_string(LabelKind k) { return k == LabelKind::kHce ? "hce" : "mi"; }
std::string to_string(SamplerKind k) { return k == SamplerKind::kExact ? "exact" : "mcmc"; }

DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "unitary") return DatasetKind::kUnitary;
  if (s == "dissipative") return DatasetKind::kDissipative;
  throw DataError("unknown dataset kind '" + s + "'");
}

LabelKind parse_label_kind(const std::string& s) {
  if (s == "hce") return LabelKind::kHce;
  if (s == "mi") return LabelKind::kMi;
  throw DataError("unknown label kind '" + s + "'");
}

SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "exact") return SamplerKind::kExact;
  if (s == "mcmc") return SamplerKind::kMcmc;
  throw DataError("unknown sampler '" + s + "'");
}

int worker_count() {
  if (const char* env = std::getenv("POVMNET_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void UnitaryDatasetConfig::validate() const {
  system.validate();
  if (!(t_min < t_max)) throw std::invalid_argument("unitary dataset: t_min must be below t_max");
  if (n_states < 1 || n_batches < 1 || n_samples < 1) throw std::invalid_argument("unitary dataset: counts must be positive");
  if (labels.empty()) throw std::invalid_argument("unitary dataset: no labels requested");
}

std::vector<double> UnitaryDatasetConfig::times() const {
  std::vector<double> t(static_cast<std::size_t>(n_states));
  if (n_states == 1) {
    t[0] = t_min;
    return t;
  }
  for (int k = 0; k < n_states; ++k) t[k] = t_min + (t_max - t_min) * k / (n_states - 1);
  return t;
}

void DissipativeDatasetConfig::validate() const {
  system.validate();
  if (grid.empty()) throw std::invalid_argument("dissipative dataset: empty grid");
  if (!(fixed_time >= 0.0)) throw std::invalid_argument("dissipative dataset: fixed_time must be >= 0");
  if (n_batches < 1 || n_samples < 1) throw std::invalid_argument("dissipative dataset: counts must be positive");
  for (const auto& p : grid)
    if (p.dephasing < 0.0 || p.decay < 0.0 || p.dephasing > rate_max || p.decay > rate_max)
      throw std::invalid_argument("dissipative dataset: noise rate outside [0, " + format_double(rate_max) + "]");
  if (labels.empty()) throw std::invalid_argument("dissipative dataset: no labels requested");
}

std::size_t Dataset::label_index(LabelKind kind) const {
  for (std::size_t i = 0; i < label_kinds.size(); ++i)
    if (label_kinds[i] == kind) return i;
  throw DataError("dataset has no '" + to_string(kind) + "' labels");
}

std::array<std::size_t, 5> Dataset::shape() const {
  return {records.size(), static_cast<std::size_t>(n_batches), static_cast<std::size_t>(n_samples),
          static_cast<std::size_t>(system.n_sites), 4};
}

PovmBatch draw_batch(const PureState& psi, SamplerKind sampler, int n_samples, std::uint64_t base_seed,
                     std::size_t record, std::size_t batch) {
  const std::uint64_t seed = derive_seed(base_seed, {record, batch});
  if (sampler == SamplerKind::kExact) return exact_sampler(psi, static_cast<std::size_t>(n_samples), seed);
  return mcmc_sampler(psi, static_cast<std::size_t>(n_samples), McmcConfig{100, 0, seed});
}

PovmBatch draw_batch(const DensityMatrix& rho, SamplerKind sampler, int n_samples, std::uint64_t base_seed,
                     std::size_t record, std::size_t batch) {
  const std::uint64_t seed = derive_seed(base_seed, {record, batch});
  if (sampler == SamplerKind::kExact) return exact_sampler(rho, static_cast<std::size_t>(n_samples), seed);
  return mcmc_sampler(rho, static_cast<std::size_t>(n_samples), McmcConfig{100, 0, seed});
}

std::vector<double> unitary_labels(const PureState& psi, const std::vector<LabelKind>& kinds) {
  const auto part = Bipartition::half_chain(sites_for_dimension(psi.size()));
  std::vector<double> out;
  for (auto k : kinds)
    out.push_back(k == LabelKind::kHce ? renyi2_entropy(partial_trace(psi, part)) : mutual_information(psi, part));
  return out;
}

std::vector<double> dissipative_labels(const DensityMatrix& rho, const std::vector<LabelKind>& kinds) {
  const auto part = Bipartition::half_chain(sites_for_dimension(rho.rows()));
  std::vector<double> out;
  for (auto k : kinds)
    out.push_back(k == LabelKind::kHce ? renyi2_entropy(partial_trace(rho, part)) : mutual_information(rho, part));
  return out;
}

DensityMatrix dissipative_state(const SystemConfig& system, double fixed_time, const NoisePoint& point,
                                double lindblad_step) {
  const auto h = build_tfim_hamiltonian(system);
  const auto rho0 = pure_to_density(initial_plus_state(system));
  return evolve_lindblad(rho0, h, NoiseRates{point.dephasing, point.decay}, fixed_time, lindblad_step);
}

Dataset generate_unitary_dataset(const UnitaryDatasetConfig& cfg, SamplerKind sampler) {
  cfg.validate();
  Dataset d;
  d.kind = DatasetKind::kUnitary;
  d.system = cfg.system;
  d.n_batches = cfg.n_batches;
  d.n_samples = cfg.n_samples;
  d.seed = cfg.seed;
  d.sampler = sampler;
  d.label_kinds = cfg.labels;

  const SpectralPropagator propagator(build_tfim_hamiltonian(cfg.system));
  const PureState psi0 = initial_plus_state(cfg.system);
  const auto times = cfg.times();
  d.records.resize(times.size());
  parallel_for(times.size(), worker_count(), [&](std::size_t r) {
    const PureState psi = propagator.evolve(psi0, times[r]);
    LabeledRecord& rec = d.records[r];
    rec.params = {times[r]};
    rec.labels = unitary_labels(psi, cfg.labels);
    rec.batches.reserve(static_cast<std::size_t>(cfg.n_batches));
    for (int b = 0; b < cfg.n_batches; ++b)
      rec.batches.push_back(draw_batch(psi, sampler, cfg.n_samples, cfg.seed, r, static_cast<std::size_t>(b)));
  });
  return d;
}

Dataset generate_dissipative_dataset(const DissipativeDatasetConfig& cfg, SamplerKind sampler) {
  cfg.validate();
  Dataset d;
  d.kind = DatasetKind::kDissipative;
  d.system = cfg.system;
  d.n_batches = cfg.n_batches;
  d.n_samples = cfg.n_samples;
  d.seed = cfg.seed;
  d.sampler = sampler;
  d.fixed_time = cfg.fixed_time;
  d.label_kinds = cfg.labels;

  const auto h = build_tfim_hamiltonian(cfg.system);
  const auto rho0 = pure_to_density(initial_plus_state(cfg.system));
  d.records.resize(cfg.grid.size());
  parallel_for(cfg.grid.size(), worker_count(), [&](std::size_t r) {
    const NoisePoint& p = cfg.grid[r];
    const DensityMatrix rho =
        evolve_lindblad(rho0, h, NoiseRates{p.dephasing, p.decay}, cfg.fixed_time, cfg.lindblad_step);
    LabeledRecord& rec = d.records[r];
    rec.params = {p.dephasing, p.decay};
    rec.labels = dissipative_labels(rho, cfg.labels);
    rec.batches.reserve(static_cast<std::size_t>(cfg.n_batches));
    for (int b = 0; b < cfg.n_batches; ++b)
      rec.batches.push_back(draw_batch(rho, sampler, cfg.n_samples, cfg.seed, r, static_cast<std::size_t>(b)));
  });
  return d;
}

std::vector<NoisePoint> equidistant_grid(int k, double lo, double hi) {
  if (k < 1) throw std::invalid_argument("equidistant_grid: k must be >= 1");
  std::vector<NoisePoint> out;
  auto at = [&](int i) { return k == 1 ? lo : lo + (hi - lo) * i / (k - 1); };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out.push_back({at(i), at(j)});
  return out;
}

std::vector<NoisePoint> make_validation_splits(SplitKind kind, int count, Region region, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("make_validation_splits: count must be >= 1");
  if (!(region.lo < region.hi)) throw std::invalid_argument("make_validation_splits: empty region");
  Rng rng(seed);
  std::vector<NoisePoint> out;
  if (kind == SplitKind::kRandom) {
    for (int i = 0; i < count; ++i) {
      const double gz = rng.uniform(region.lo, region.hi);
      const double gm = rng.uniform(region.lo, region.hi);
      out.push_back({gz, gm});
    }
    return out;
  }
  const double side = region.hi - region.lo;
  auto boundary_point = [&] {
    const double u = rng.uniform(0.0, 4.0);
    const int edge = std::min(3, static_cast<int>(u));
    const double f = (u - edge) * side;
    switch (edge) {
      case 0: return NoisePoint{region.lo + f, region.lo};
      case 1: return NoisePoint{region.hi, region.lo + f};
      case 2: return NoisePoint{region.hi - f, region.hi};
      default: return NoisePoint{region.lo, region.hi - f};
    }
  };
  NoisePoint a, b;
  do {
    a = boundary_point();
    b = boundary_point();
  } while (std::hypot(a.dephasing - b.dephasing, a.decay - b.decay) < 1e-6);
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
    out.push_back({a.dephasing + s * (b.dephasing - a.dephasing), a.decay + s * (b.decay - a.decay)});
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t per_record = record_bytes(d);
  std::vector<unsigned char> samples;
  samples.reserve(per_record * d.records.size());
  std::vector<unsigned char> labels;
  KeyValueFile kv;
  kv.set("format", kFormatName);
  kv.set("version", kFormatVersion);
  kv.set("kind", to_string(d.kind));
  kv.set("n_sites", d.system.n_sites);
  kv.set("coupling", d.system.coupling);
  kv.set("field", d.system.field);
  kv.set("fixed_time", d.fixed_time);
  kv.set("n_records", static_cast<std::int64_t>(d.records.size()));
  kv.set("n_batches", d.n_batches);
  kv.set("n_samples", d.n_samples);
  kv.set("seed", d.seed);
  kv.set("sampler", to_string(d.sampler));
  kv.set("label_kinds", join_labels(d.label_kinds));
  kv.set("param_names", d.kind == DatasetKind::kUnitary ? std::string("t") : std::string("gamma_z,gamma_minus"));

  const std::size_t n_params = d.kind == DatasetKind::kUnitary ? 1 : 2;
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    const auto& rec = d.records[r];
    if (rec.params.size() != n_params) throw DataError("record " + std::to_string(r) + ": wrong parameter count");
    if (rec.labels.size() != d.label_kinds.size()) throw DataError("record " + std::to_string(r) + ": wrong label count");
    if (rec.batches.size() != static_cast<std::size_t>(d.n_batches))
      throw DataError("record " + std::to_string(r) + ": wrong batch count");
    std::ostringstream line;
    line << samples.size();
    for (double p : rec.params) line << ' ' << format_double(p);
    kv.set("record." + std::to_string(r), line.str());
    for (double l : rec.labels) {
      if (!std::isfinite(l)) throw DataError("record " + std::to_string(r) + ": non-finite label");
      append_le(labels, l);
    }
    for (const auto& b : rec.batches) {
      if (b.n_sites != d.system.n_sites || b.size() != static_cast<std::size_t>(d.n_samples))
        throw DataError("record " + std::to_string(r) + ": inconsistent batch shape");
      samples.insert(samples.end(), b.symbols.begin(), b.symbols.end());
    }
  }
  kv.set("labels_bytes", static_cast<std::uint64_t>(labels.size()));
  kv.set("samples_bytes", static_cast<std::uint64_t>(samples.size()));
  kv.set("labels_checksum", hex64(fnv1a64(labels.data(), labels.size())));
  kv.set("samples_checksum", hex64(fnv1a64(samples.data(), samples.size())));

  write_file_bytes(dir / "labels.f64", labels);
  write_file_bytes(dir / "samples.u8", samples);
  kv.save(dir / "manifest.txt");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto kv = KeyValueFile::load(dir / "manifest.txt");
  if (kv.get("format") != kFormatName) throw DataError("not a dataset manifest: " + dir.string());
  if (kv.get_int("version") != kFormatVersion)
    throw DataError("unsupported dataset version " + kv.get("version"));

  Dataset d;
  d.kind = parse_dataset_kind(kv.get("kind"));
  d.system.n_sites = static_cast<int>(kv.get_int("n_sites"));
  d.system.coupling = kv.get_double("coupling");
  d.system.field = kv.get_double("field");
  d.system.validate();
  d.fixed_time = kv.get_double("fixed_time");
  d.n_batches = static_cast<int>(kv.get_int("n_batches"));
  d.n_samples = static_cast<int>(kv.get_int("n_samples"));
  d.seed = kv.get_uint("seed");
  d.sampler = parse_sampler_kind(kv.get("sampler"));
  for (const auto& name : [&] {
         std::vector<std::string> v;
         std::stringstream ss(kv.get("label_kinds"));
         std::string item;
         while (std::getline(ss, item, ',')) v.push_back(item);
         return v;
       }())
    d.label_kinds.push_back(parse_label_kind(name));
  if (d.n_batches < 1 || d.n_samples < 1) throw DataError("manifest: non-positive counts");

  const auto n_records = kv.get_int("n_records");
  if (n_records < 0) throw DataError("manifest: negative record count");
  const auto labels = read_file_bytes(dir / "labels.f64");
  const auto samples = read_file_bytes(dir / "samples.u8");
  if (labels.size() != kv.get_uint("labels_bytes") || samples.size() != kv.get_uint("samples_bytes"))
    throw DataError("payload size does not match manifest (truncated file?)");
  if (fnv1a64(labels.data(), labels.size()) != parse_hex64(kv.get("labels_checksum")))
    throw DataError("labels.f64 checksum mismatch");
  if (fnv1a64(samples.data(), samples.size()) != parse_hex64(kv.get("samples_checksum")))
    throw DataError("samples.u8 checksum mismatch");

  const std::size_t per_record = record_bytes(d);
  const std::size_t n_labels = d.label_kinds.size();
  const std::size_t n_params = d.kind == DatasetKind::kUnitary ? 1 : 2;
  if (labels.size() != static_cast<std::size_t>(n_records) * n_labels * 8)
    throw DataError("labels.f64 size inconsistent with record count");
  if (samples.size() != static_cast<std::size_t>(n_records) * per_record)
    throw DataError("samples.u8 size inconsistent with record count");
  if (kv.contains("record." + std::to_string(n_records)))
    throw DataError("manifest lists more records than n_records");

  d.records.resize(static_cast<std::size_t>(n_records));
  const std::size_t per_batch = static_cast<std::size_t>(d.n_samples) * static_cast<std::size_t>(d.system.n_sites);
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    const auto fields = parse_double_list(kv.get("record." + std::to_string(r)));
    if (fields.size() != 1 + n_params) throw DataError("record " + std::to_string(r) + ": malformed entry");
    const auto offset = static_cast<std::size_t>(fields[0]);
    if (offset != r * per_record) throw DataError("record " + std::to_string(r) + ": offset inconsistent with payload");
    auto& rec = d.records[r];
    rec.params.assign(fields.begin() + 1, fields.end());
    for (std::size_t l = 0; l < n_labels; ++l) rec.labels.push_back(read_le_double(&labels[(r * n_labels + l) * 8]));
    for (int b = 0; b < d.n_batches; ++b) {
      const auto* p = samples.data() + offset + static_cast<std::size_t>(b) * per_batch;
      PovmBatch batch{d.system.n_sites, std::vector<std::uint8_t>(p, p + per_batch)};
      for (auto s : batch.symbols)
        if (s < 1 || s > 4) throw DataError("samples.u8: symbol outside {1,2,3,4}");
      rec.batches.push_back(std::move(batch));
    }
  }
  return d;
}

}  // namespace povmnet
