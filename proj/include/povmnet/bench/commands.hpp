#pragma once

// Library side of the povmnet command-line tool. Each command writes its
// outputs plus a config.txt echo into an output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "povmnet/bench/metrics.hpp"
#include "povmnet/bench/presets.hpp"
#include "povmnet/dataio.hpp"
#include "povmnet/neural/checkpoint.hpp"

namespace povmnet::bench {

namespace fs = std::filesystem;

struct SimulateOptions {
  SystemConfig system{6, 1.0, 1.0};
  NoiseRates rates;
  double t_min = 0.0;
  double t_max = 5.0;
  int n_points = 51;
  fs::path out;
};

/// Writes observables.csv: t_over_h, hce_nats, mi_nats, purity_half.
void cmd_simulate(const SimulateOptions& opt);

struct SampleOptions {
  SystemConfig system{6, 1.0, 1.0};
  NoiseRates rates;
  double time = 0.0;
  int n_samples = 1000;
  SamplerKind sampler = SamplerKind::kMcmc;
  std::uint64_t seed = kDefaultSeed;
  fs::path out;
};

/// Writes samples.csv with one row per measurement (site_0..site_{N-1}, symbols 1..4).
void cmd_sample(const SampleOptions& opt);

struct DatasetOptions {
  std::string preset = "fig1";
  Scale scale = Scale::kPaper;
  std::uint64_t seed = kDefaultSeed;
  SamplerKind sampler = SamplerKind::kMcmc;
  std::optional<int> n_sites;
  std::optional<int> n_records;  // unitary: N_S; dissipative: truncates the grid
  std::optional<int> n_batches;
  std::optional<int> n_samples;
  fs::path out;
};

Dataset cmd_make_dataset(const DatasetOptions& opt);

struct TrainOptions {
  std::string preset = "fig1";
  Scale scale = Scale::kPaper;
  std::uint64_t seed = kDefaultSeed;
  fs::path train_data;
  fs::path val_data;
  std::optional<int> epochs;
  std::optional<int> ensemble;
  bool verbose = false;
  fs::path out;
};

struct MemberStatus {
  int member = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::string message;
};

/// Trains each member into out/member_<k>/ (checkpoint + history.csv) and
/// writes out/ensemble.txt with member statuses and the training domain.
/// A diverged member does not stop the others.
std::vector<MemberStatus> cmd_train(const TrainOptions& opt);

/// Parameter box spanned by the training set; points inside it are ID.
struct TrainingDomain {
  std::vector<double> lo;
  std::vector<double> hi;
  bool contains(const std::vector<double>& params) const;
};

struct Ensemble {
  std::vector<neural::Checkpoint> members;
  TrainingDomain domain;
  LabelKind label = LabelKind::kHce;
  int n_sites = 0;
};

/// Loads the non-diverged members listed in ensemble.txt.
Ensemble load_ensemble(const fs::path& dir);

struct EvaluateOptions {
  fs::path model;
  fs::path data;
  fs::path out;
};

/// One point per (record, batch). Writes points.csv and metrics.txt.
/// Throws DimensionError when chain lengths differ.
std::vector<EvalPoint> evaluate_ensemble(const Ensemble& ensemble, const Dataset& data);
MetricsReport cmd_evaluate(const EvaluateOptions& opt);

struct BaselineOptions {
  std::string preset = "fig2-a";
  Scale scale = Scale::kPaper;
  std::uint64_t seed = kDefaultSeed;
  std::optional<int> n_unitaries;
  std::optional<int> n_measurements;
  std::optional<int> n_sites;
  std::optional<int> n_states;
  std::optional<double> t_max;
  fs::path out;
};

struct BaselineRow {
  double time = 0.0;
  double label = 0.0;
  PurityEstimate estimate;
  std::optional<double> hce;
  double hce_std_error = 0.0;
};

/// Randomized-measurement HCE estimates on the fig2-eval time grid.
/// Writes baseline.csv; non-physical estimates have physical = 0 and empty hce.
std::vector<BaselineRow> cmd_baseline(const BaselineOptions& opt);

struct MetricsOptions {
  fs::path points;
  std::optional<fs::path> out;
};

MetricsReport cmd_metrics(const MetricsOptions& opt);

}  // namespace povmnet::bench
