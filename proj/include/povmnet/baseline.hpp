#pragma once

// Randomized-measurement purity estimation: apply independent Haar-random
// single-qubit unitaries, measure the subsystem in the computational basis,
// and combine coincidence statistics as
//
//   X = 2^{N_A} sum_{s,s'} (-2)^{-D(s,s')} P2(s, s')
//
// with D the Hamming distance and P2 the unbiased two-shot coincidence
// estimator. The purity estimate is the mean of X over unitaries.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "povmnet/qsim.hpp"

namespace povmnet {

struct BaselineConfig {
  int n_unitaries = 2;      // N_U
  int n_measurements = 500; // N_M per unitary
  std::uint64_t seed = 0;

  void validate() const;
  std::int64_t total_measurements() const { return static_cast<std::int64_t>(n_unitaries) * n_measurements; }
};

using LocalUnitaries = std::vector<Eigen::Matrix2cd>;

/// One Haar-random 2x2 unitary per site (QR of a complex Gaussian matrix,
/// R's diagonal phases folded into Q).
LocalUnitaries random_local_unitaries(int n_sites, std::uint64_t seed);

struct MeasurementRecord {
  int n_sub_sites = 0;
  std::int64_t n_measurements = 0;
  std::vector<std::int64_t> counts;  // indexed by subsystem bitstring
};

/// Computational-basis outcome probabilities of subsystem A after rotating
/// every site of A by its unitary (`unitaries` is indexed by global site).
Eigen::VectorXd rotated_probabilities(const DensityMatrix& rho_a, const Bipartition& part,
                                      const LocalUnitaries& unitaries);

MeasurementRecord simulate_randomized_measurements(const PureState& psi, const Bipartition& part,
                                                   const LocalUnitaries& unitaries, std::int64_t n_meas,
                                                   std::uint64_t seed);
MeasurementRecord simulate_randomized_measurements(const DensityMatrix& rho, const Bipartition& part,
                                                   const LocalUnitaries& unitaries, std::int64_t n_meas,
                                                   std::uint64_t seed);

/// Single-unitary estimator X from one record.
double purity_estimator(const MeasurementRecord& record);

struct PurityEstimate {
  double purity = 0.0;
  double std_error = 0.0;          // of the per-unitary estimates
  std::vector<double> per_unitary;
};

PurityEstimate estimate_purity(std::span<const MeasurementRecord> records);

/// -ln(purity); std::nullopt marks a non-physical (non-positive) estimate.
std::optional<double> hce_from_purity(double purity);

/// Full protocol for one state: n_unitaries draws with seeds derived from cfg.seed.
PurityEstimate run_randomized_protocol(const PureState& psi, const Bipartition& part, const BaselineConfig& cfg);

}  // namespace povmnet
