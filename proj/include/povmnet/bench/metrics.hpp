#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace povmnet::bench {

/// One evaluated sample set: physical parameters, exact label and the
/// (ensemble) prediction.
struct EvalPoint {
  std::vector<double> params;
  int batch = 0;
  double label = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  bool in_distribution = true;
};

struct RegionMetrics {
  std::size_t n_points = 0;
  double rmse = 0.0;        // nats
  double coverage_1 = 0.0;  // fraction with |label - mean| <= sigma
  double coverage_2 = 0.0;  // fraction with |label - mean| <= 2 sigma
};

struct MetricsReport {
  RegionMetrics all;
  std::optional<RegionMetrics> id;
  std::optional<RegionMetrics> ood;
};

RegionMetrics region_metrics(std::span<const EvalPoint> points);
/// Throws std::invalid_argument on empty input.
MetricsReport compute_metrics(std::span<const EvalPoint> points);

/// CSV columns: <param names...>,batch,label_nats,mean_nats,sigma_nats,region
void write_points_csv(std::span<const EvalPoint> points, const std::vector<std::string>& param_names,
                      const std::filesystem::path& path);
std::vector<EvalPoint> read_points_csv(const std::filesystem::path& path);

void write_metrics(const MetricsReport& report, const std::filesystem::path& path);
std::string format_metrics(const MetricsReport& report);

}  // namespace povmnet::bench
