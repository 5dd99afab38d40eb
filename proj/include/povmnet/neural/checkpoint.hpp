#pragma once

// Checkpoint directory:
//   manifest.txt  model config, seed, epoch, validation loss, chain length,
//                 label kind, parameter count and checksum
//   params.f64    ModelParams::values as little-endian doubles, in the block
//                 order of ParameterLayout
// Loss history is a CSV with header "epoch,train_loss,val_loss".

#include <filesystem>
#include <vector>

#include "povmnet/dataio.hpp"
#include "povmnet/neural/train.hpp"

namespace povmnet::neural {

struct Checkpoint {
  ModelParams params;
  int epoch = 0;
  double val_loss = 0.0;
  int n_sites = 0;
  LabelKind label = LabelKind::kHce;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint read_checkpoint(const std::filesystem::path& dir);

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
std::vector<EpochRecord> read_history_csv(const std::filesystem::path& path);

}  // namespace povmnet::neural
