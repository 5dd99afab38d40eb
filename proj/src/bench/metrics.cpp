#include "povmnet/bench/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "povmnet/errors.hpp"
#include "povmnet/util/kvfile.hpp"

namespace povmnet::bench {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const std::vector<std::string> kTrailing = {"batch", "label_nats", "mean_nats", "sigma_nats", "region"};

}  // namespace

RegionMetrics region_metrics(std::span<const EvalPoint> points) {
  RegionMetrics m;
  m.n_points = points.size();
  if (points.empty()) return m;
  double se = 0.0;
  std::size_t c1 = 0, c2 = 0;
  for (const auto& p : points) {
    const double err = std::abs(p.label - p.mean);
    se += err * err;
    if (err <= p.sigma) ++c1;
    if (err <= 2.0 * p.sigma) ++c2;
  }
  const double n = static_cast<double>(points.size());
  m.rmse = std::sqrt(se / n);
  m.coverage_1 = static_cast<double>(c1) / n;
  m.coverage_2 = static_cast<double>(c2) / n;
  return m;
}

MetricsReport compute_metrics(std::span<const EvalPoint> points) {
  if (points.empty()) throw std::invalid_argument("compute_metrics: no points");
  MetricsReport r;
  r.all = region_metrics(points);
  std::vector<EvalPoint> id, ood;
  for (const auto& p : points) (p.in_distribution ? id : ood).push_back(p);
  if (!id.empty()) r.id = region_metrics(id);
  if (!ood.empty()) r.ood = region_metrics(ood);
  return r;
}

void write_points_csv(std::span<const EvalPoint> points, const std::vector<std::string>& param_names,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& n : param_names) out << n << ',';
  for (std::size_t i = 0; i < kTrailing.size(); ++i) out << kTrailing[i] << (i + 1 < kTrailing.size() ? ',' : '\n');
  for (const auto& p : points) {
    if (p.params.size() != param_names.size()) throw std::invalid_argument("write_points_csv: parameter count mismatch");
    for (double v : p.params) out << format_double(v) << ',';
    out << p.batch << ',' << format_double(p.label) << ',' << format_double(p.mean) << ','
        << format_double(p.sigma) << ',' << (p.in_distribution ? "ID" : "OOD") << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<EvalPoint> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty points file");
  const auto header = split_csv(line);
  if (header.size() < kTrailing.size()) throw DataError("points header too short");
  const std::size_t n_params = header.size() - kTrailing.size();
  for (std::size_t i = 0; i < kTrailing.size(); ++i)
    if (header[n_params + i] != kTrailing[i]) throw DataError("unexpected points header column '" + header[n_params + i] + "'");
  std::vector<EvalPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw DataError("malformed points row");
    EvalPoint p;
    for (std::size_t i = 0; i < n_params; ++i) p.params.push_back(parse_double(f[i]));
    p.batch = static_cast<int>(parse_double(f[n_params]));
    p.label = parse_double(f[n_params + 1]);
    p.mean = parse_double(f[n_params + 2]);
    p.sigma = parse_double(f[n_params + 3]);
    if (f[n_params + 4] != "ID" && f[n_params + 4] != "OOD") throw DataError("region must be ID or OOD");
    p.in_distribution = f[n_params + 4] == "ID";
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_metrics(const MetricsReport& r) {
  std::ostringstream s;
  auto line = [&](const char* name, const RegionMetrics& m) {
    s << name << ": n=" << m.n_points << " rmse_nats=" << format_double(m.rmse)
      << " coverage_1sigma=" << format_double(m.coverage_1) << " coverage_2sigma=" << format_double(m.coverage_2) << '\n';
  };
  line("all", r.all);
  if (r.id) line("ID", *r.id);
  if (r.ood) line("OOD", *r.ood);
  return s.str();
}

void write_metrics(const MetricsReport& r, const std::filesystem::path& path) {
  KeyValueFile kv;
  auto put = [&](const std::string& prefix, const RegionMetrics& m) {
    kv.set(prefix + ".n_points", static_cast<std::uint64_t>(m.n_points));
    kv.set(prefix + ".rmse_nats", m.rmse);
    kv.set(prefix + ".coverage_1sigma", m.coverage_1);
    kv.set(prefix + ".coverage_2sigma", m.coverage_2);
  };
  put("all", r.all);
  if (r.id) put("id", *r.id);
  if (r.ood) put("ood", *r.ood);
  kv.save(path);
}

}  // namespace povmnet::bench
