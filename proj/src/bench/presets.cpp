#include "povmnet/bench/presets.hpp"

#include <algorithm>
#include <stdexcept>

#include "povmnet/rng.hpp"

namespace povmnet::bench {

namespace {

std::uint64_t preset_seed(std::uint64_t seed, const std::string& name) {
  return derive_seed(seed, {fnv1a64(name.data(), name.size())});
}

std::vector<NoisePoint> concat(std::vector<NoisePoint> a, const std::vector<NoisePoint>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

Scale parse_scale(const std::string& s) {
  if (s == "paper") return Scale::kPaper;
  if (s == "desk") return Scale::kDesk;
  throw std::invalid_argument("unknown scale '" + s + "' (expected paper or desk)");
}

std::string to_string(Scale s) { return s == Scale::kPaper ? "paper" : "desk"; }

const std::vector<std::string>& dataset_preset_names() {
  static const std::vector<std::string> names = {"fig1", "fig1-val", "fig2-eval", "fig3-train", "fig3-val", "fig3-test"};
  return names;
}

bool is_unitary_preset(const std::string& name) {
  if (name == "fig1" || name == "fig1-val" || name == "fig2-eval") return true;
  if (name == "fig3-train" || name == "fig3-val" || name == "fig3-test") return false;
  throw std::invalid_argument("unknown dataset preset '" + name + "'");
}

UnitaryDatasetConfig unitary_preset(const std::string& name, Scale scale, std::uint64_t seed) {
  if (!is_unitary_preset(name)) throw std::invalid_argument("'" + name + "' is not a unitary preset");
  const bool paper = scale == Scale::kPaper;
  UnitaryDatasetConfig c;
  c.system = SystemConfig{paper ? 10 : 6, 1.0, 1.0};
  c.labels = {LabelKind::kHce};
  c.seed = preset_seed(seed, name);
  if (name == "fig2-eval") {
    // Ten-fold longer window; 1000 measurements per state in total.
    c.t_min = 0.0;
    c.t_max = 10.0;
    c.n_states = paper ? 100 : 50;
    c.n_batches = paper ? 1 : 10;
    c.n_samples = paper ? 1000 : 100;
    return c;
  }
  c.t_min = 0.0;
  c.t_max = 5.0;
  c.n_states = paper ? 100 : 50;
  c.n_batches = paper ? 50 : 20;
  c.n_samples = paper ? 1000 : 100;
  return c;
}

DissipativeDatasetConfig dissipative_preset(const std::string& name, Scale scale, std::uint64_t seed) {
  if (is_unitary_preset(name)) throw std::invalid_argument("'" + name + "' is not a dissipative preset");
  const bool paper = scale == Scale::kPaper;
  const Region region{0.0, 0.5};
  const std::uint64_t s = preset_seed(seed, name);
  DissipativeDatasetConfig c;
  c.system = SystemConfig{paper ? 8 : 6, 1.0, 1.0};
  c.fixed_time = 0.75;
  c.labels = {LabelKind::kMi};
  c.seed = s;
  c.n_samples = paper ? 1000 : 100;
  if (name == "fig3-train") {
    c.grid = equidistant_grid(paper ? 5 : 3, region.lo, region.hi);
    c.n_batches = paper ? 50 : 20;
  } else if (name == "fig3-val") {
    c.grid = concat(make_validation_splits(SplitKind::kRandom, paper ? 20 : 5, region, derive_seed(s, {1})),
                    make_validation_splits(SplitKind::kCrossSection, paper ? 40 : 5, region, derive_seed(s, {2})));
    c.n_batches = paper ? 50 : 10;
  } else {
    c.grid = make_validation_splits(SplitKind::kRandom, paper ? 30 : 10, region, derive_seed(s, {1}));
    if (paper) c.grid = concat(c.grid, make_validation_splits(SplitKind::kCrossSection, 30, region, derive_seed(s, {2})));
    c.n_batches = 1;
  }
  return c;
}

TrainPreset train_preset(const std::string& name, Scale scale) {
  const bool paper = scale == Scale::kPaper;
  TrainPreset t;
  t.epochs = paper ? 4000 : kDeskEpochs;
  if (name == "fig1") return t;
  if (name == "fig2") {
    t.ensemble = paper ? 8 : 2;
    return t;
  }
  if (name == "fig3") {
    t.label = LabelKind::kMi;
    return t;
  }
  throw std::invalid_argument("unknown training preset '" + name + "' (expected fig1, fig2 or fig3)");
}

BaselineConfig baseline_preset(const std::string& name, std::uint64_t seed) {
  if (name == "fig2-a") return BaselineConfig{2, 500, seed};
  if (name == "fig2-b") return BaselineConfig{300, 5000, seed};
  throw std::invalid_argument("unknown baseline preset '" + name + "' (expected fig2-a or fig2-b)");
}

}  // namespace povmnet::bench
