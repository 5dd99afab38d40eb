#pragma once

// Labeled POVM datasets: generation for the unitary-quench and dissipative
// experiments, validation/test parameter splits, and the on-disk format.
//
// On disk a dataset is a directory with three files:
//   manifest.txt  UTF-8 "key = value" lines (format, version, system, counts,
//                 seeds, per-record offset and parameters, checksums)
//   labels.f64    little-endian IEEE-754 doubles, n_records x n_label_kinds
//   samples.u8    one byte per site (1..4); record r occupies
//                 n_batches * n_samples * n_sites bytes starting at its offset
// Checksums are FNV-1a 64 over each payload file.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "povmnet/povm.hpp"
#include "povmnet/qsim.hpp"

namespace povmnet {

enum class DatasetKind { kUnitary, kDissipative };
enum class LabelKind { kHce, kMi };

std::string to_string(DatasetKind k);
std::string to_string(LabelKind k);
std::string to_string(SamplerKind k);
DatasetKind parse_dataset_kind(const std::string& s);
LabelKind parse_label_kind(const std::string& s);
SamplerKind parse_sampler_kind(const std::string& s);

struct NoisePoint {
  double dephasing = 0.0;
  double decay = 0.0;
  bool operator==(const NoisePoint&) const = default;
};

struct UnitaryDatasetConfig {
  SystemConfig system;
  int n_states = 100;
  double t_min = 0.0;
  double t_max = 5.0;
  int n_batches = 50;
  int n_samples = 1000;
  std::uint64_t seed = 1;
  std::vector<LabelKind> labels{LabelKind::kHce};

  void validate() const;
  /// n_states equidistant times over [t_min, t_max], endpoints included.
  std::vector<double> times() const;
};

struct DissipativeDatasetConfig {
  SystemConfig system{8, 1.0, 1.0};
  double fixed_time = 0.75;
  std::vector<NoisePoint> grid;
  int n_batches = 50;
  int n_samples = 1000;
  std::uint64_t seed = 1;
  double lindblad_step = kDefaultLindbladStep;
  double rate_max = 0.5;
  std::vector<LabelKind> labels{LabelKind::kMi};

  void validate() const;
};

struct LabeledRecord {
  std::vector<double> params;  // (t) or (gamma_z, gamma_-)
  std::vector<double> labels;  // ordered as Dataset::label_kinds
  std::vector<PovmBatch> batches;
  bool operator==(const LabeledRecord&) const = default;
};

struct Dataset {
  DatasetKind kind = DatasetKind::kUnitary;
  SystemConfig system;
  int n_batches = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::kMcmc;
  double fixed_time = 0.0;  // dissipative only
  std::vector<LabelKind> label_kinds;
  std::vector<LabeledRecord> records;

  /// Column of `kind` in each record's labels; throws DataError if absent.
  std::size_t label_index(LabelKind kind) const;
  /// Logical one-hot shape (N_S, N_B, N_M, N, 4).
  std::array<std::size_t, 5> shape() const;
  bool operator==(const Dataset&) const = default;
};

/// Draws one batch for record `record`, batch `batch` with the derived seed.
PovmBatch draw_batch(const PureState& psi, SamplerKind sampler, int n_samples, std::uint64_t base_seed,
                     std::size_t record, std::size_t batch);
PovmBatch draw_batch(const DensityMatrix& rho, SamplerKind sampler, int n_samples, std::uint64_t base_seed,
                     std::size_t record, std::size_t batch);

/// Labels for one time point of the unitary quench.
std::vector<double> unitary_labels(const PureState& psi, const std::vector<LabelKind>& kinds);
std::vector<double> dissipative_labels(const DensityMatrix& rho, const std::vector<LabelKind>& kinds);

/// rho(t*) for one noise point, starting from |+><+|.
DensityMatrix dissipative_state(const SystemConfig& system, double fixed_time, const NoisePoint& point,
                                double lindblad_step = kDefaultLindbladStep);

/// Records are produced in parallel over parameter points; the worker count
/// comes from POVMNET_WORKERS (default 1). Output does not depend on it.
Dataset generate_unitary_dataset(const UnitaryDatasetConfig& cfg, SamplerKind sampler);
Dataset generate_dissipative_dataset(const DissipativeDatasetConfig& cfg, SamplerKind sampler);

/// k x k equidistant grid over [lo, hi]^2, gamma_z varying slowest.
std::vector<NoisePoint> equidistant_grid(int k, double lo, double hi);

enum class SplitKind { kRandom, kCrossSection };

struct Region {
  double lo = 0.0;
  double hi = 0.5;
};

/// kRandom: i.i.d. uniform points in the square. kCrossSection: two endpoints
/// uniform on the square's boundary, `count` equidistant points between them
/// (endpoints included).
std::vector<NoisePoint> make_validation_splits(SplitKind kind, int count, Region region, std::uint64_t seed);

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL);

/// Worker count from POVMNET_WORKERS, at least 1.
int worker_count();

}  // namespace povmnet
