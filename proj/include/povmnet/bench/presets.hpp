#pragma once

// Experiment presets. Scale::kPaper reproduces the published parameters;
// Scale::kDesk shrinks chain length, state count, batches, samples and epochs
// to sizes that run on a desktop CPU in minutes.

#include <cstdint>
#include <string>
#include <vector>

#include "povmnet/baseline.hpp"
#include "povmnet/dataio.hpp"

namespace povmnet::bench {

enum class Scale { kPaper, kDesk };

Scale parse_scale(const std::string& s);
std::string to_string(Scale s);

inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// Dataset presets: fig1 (training set, ht in [0,5]), fig1-val (independent
/// sampling at the same times), fig2-eval (ht in [0,10]), fig3-train (5x5 noise
/// grid), fig3-val (20 random + 40 cross-section), fig3-test (30 random + 30
/// cross-section).
const std::vector<std::string>& dataset_preset_names();
bool is_unitary_preset(const std::string& name);
UnitaryDatasetConfig unitary_preset(const std::string& name, Scale scale, std::uint64_t seed);
DissipativeDatasetConfig dissipative_preset(const std::string& name, Scale scale, std::uint64_t seed);

struct TrainPreset {
  int epochs = 4000;
  int ensemble = 1;
  LabelKind label = LabelKind::kHce;
};

/// fig1: one network; fig2: ensemble of 8; fig3: one network on MI labels.
TrainPreset train_preset(const std::string& name, Scale scale);

/// fig2-a: N_U = 2, N_M = 500; fig2-b: N_U = 300, N_M = 5000.
BaselineConfig baseline_preset(const std::string& name, std::uint64_t seed);

/// Desk-scale training epochs used by all desk presets.
inline constexpr int kDeskEpochs = 200;

}  // namespace povmnet::bench
