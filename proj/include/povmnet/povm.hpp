#pragma once

// Pauli-4 POVM: single-site operators, Born probabilities of outcome strings,
// exact and Metropolis samplers, and the one-hot view fed to the network.
//
// Outcome symbols are 1..4 and index M_1..M_4.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "povmnet/qsim.hpp"

namespace povmnet {

using Povm2x2 = Eigen::Matrix2cd;
using Pauli4Set = std::array<Povm2x2, 4>;

/// M1 = |+><+|/3, M2 = |L><L|/3, M3 = |0><0|/3, M4 = 1 - M1 - M2 - M3.
const Pauli4Set& pauli4_operators();

using Outcome = std::vector<std::uint8_t>;

/// N_M outcome strings stored row-major as bytes in {1,2,3,4}.
struct PovmBatch {
  int n_sites = 0;
  std::vector<std::uint8_t> symbols;

  std::size_t size() const { return n_sites == 0 ? 0 : symbols.size() / static_cast<std::size_t>(n_sites); }
  std::span<const std::uint8_t> sample(std::size_t s) const {
    return {symbols.data() + s * static_cast<std::size_t>(n_sites), static_cast<std::size_t>(n_sites)};
  }
  bool operator==(const PovmBatch&) const = default;
};

/// Dense (N_M, N, 4) one-hot tensor, last index fastest.
class OneHotTensor {
 public:
  OneHotTensor(std::size_t n_samples, int n_sites)
      : n_samples_(n_samples), n_sites_(n_sites), data_(n_samples * static_cast<std::size_t>(n_sites) * 4, 0.0) {}

  std::array<std::size_t, 3> shape() const { return {n_samples_, static_cast<std::size_t>(n_sites_), 4}; }
  double& operator()(std::size_t s, int site, int k) { return data_[index(s, site, k)]; }
  double operator()(std::size_t s, int site, int k) const { return data_[index(s, site, k)]; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t index(std::size_t s, int site, int k) const {
    return (s * static_cast<std::size_t>(n_sites_) + static_cast<std::size_t>(site)) * 4 + static_cast<std::size_t>(k);
  }
  std::size_t n_samples_;
  int n_sites_;
  std::vector<double> data_;
};

OneHotTensor encode_one_hot(const PovmBatch& batch);
/// Throws std::invalid_argument unless every (sample, site) row has exactly one 1.
PovmBatch decode_one_hot(const OneHotTensor& tensor);

/// P(a) = Tr(rho M_{a_1} x ... x M_{a_N}) by applying one site operator at a time.
double outcome_probability(const PureState& psi, std::span<const std::uint8_t> outcome);
double outcome_probability(const DensityMatrix& rho, std::span<const std::uint8_t> outcome);

/// Reference evaluation that materialises the full tensor-product operator.
double outcome_probability_dense(const DensityMatrix& rho, std::span<const std::uint8_t> outcome);

/// Exact site-by-site sampling of P(a).
PovmBatch exact_sampler(const PureState& psi, std::size_t n_samples, std::uint64_t seed);
PovmBatch exact_sampler(const DensityMatrix& rho, std::size_t n_samples, std::uint64_t seed);

struct McmcConfig {
  int burn_in = 100;  // sweeps
  int thinning = 0;   // sweeps between kept samples; 0 means n_sites
  std::uint64_t seed = 0;
};

/// Metropolis chain with single-site uniform resampling proposals. A sweep is
/// one proposal per site in site order.
PovmBatch mcmc_sampler(const PureState& psi, std::size_t n_samples, const McmcConfig& cfg);
PovmBatch mcmc_sampler(const DensityMatrix& rho, std::size_t n_samples, const McmcConfig& cfg);

enum class SamplerKind { kExact, kMcmc };

}  // namespace povmnet
