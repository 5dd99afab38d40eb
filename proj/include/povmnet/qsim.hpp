#pragma once

// Exact dense simulation of the periodic transverse-field Ising chain and the
// entropy functionals used as labels.
//
// Conventions: a state on N sites lives in C^(2^N); site 0 is the most
// significant bit of the basis index. |0> is the +1 eigenstate of sigma_z.
// All entropies are in nats.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "povmnet/errors.hpp"

namespace povmnet {

using Complex = std::complex<double>;

template <typename Scalar>
using StateVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using Operator = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

using PureState = StateVector<double>;
using DensityMatrix = Operator<double>;
using HermitianOperator = Operator<double>;

inline constexpr int kMaxSites = 12;

struct SystemConfig {
  int n_sites = 10;
  double coupling = 1.0;  // J
  double field = 1.0;     // h

  /// Throws CapacityError above kMaxSites, std::invalid_argument otherwise.
  void validate() const;
  std::size_t dimension() const { return std::size_t{1} << n_sites; }
  bool operator==(const SystemConfig&) const = default;
};

struct NoiseRates {
  double dephasing = 0.0;  // gamma_z
  double decay = 0.0;      // gamma_-
};

/// Subsystem A of a bipartition of an n-site chain; B is the complement.
class Bipartition {
 public:
  Bipartition(int n_sites, std::vector<int> subsystem_a);

  /// Contiguous block {0, ..., ceil(N/2) - 1}.
  static Bipartition half_chain(int n_sites);

  int n_sites() const { return n_sites_; }
  const std::vector<int>& subsystem_a() const { return a_; }
  const std::vector<int>& subsystem_b() const { return b_; }
  Bipartition complement() const { return Bipartition(n_sites_, b_); }

 private:
  int n_sites_;
  std::vector<int> a_;
  std::vector<int> b_;
};

/// Number of sites encoded by a Hilbert-space dimension; throws DimensionError
/// when dim is not a power of two.
int sites_for_dimension(Eigen::Index dim);

/// Bit mask of site `site` in an n-site basis index.
constexpr std::uint64_t site_mask(int n_sites, int site) {
  return std::uint64_t{1} << (n_sites - 1 - site);
}

HermitianOperator build_tfim_hamiltonian(const SystemConfig& cfg);

/// |+>^{\otimes N}.
PureState initial_plus_state(const SystemConfig& cfg);

/// Caches the spectral decomposition of a Hermitian operator so that
/// exp(-iHt)|psi> can be evaluated at many times for the price of two
/// matrix-vector products each.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const HermitianOperator& hamiltonian);

  PureState evolve(const PureState& psi0, double t) const;
  const Eigen::VectorXd& energies() const { return energies_; }
  Eigen::Index dimension() const { return energies_.size(); }

 private:
  Eigen::VectorXd energies_;
  Operator<double> basis_;
};

PureState evolve_unitary(const PureState& psi0, const HermitianOperator& hamiltonian, double t);

/// Right-hand side of the Lindblad equation with per-site sigma_z dephasing and
/// sigma_- = (sigma_x - i sigma_y)/2 decay.
DensityMatrix lindblad_rhs(const DensityMatrix& rho, const HermitianOperator& hamiltonian,
                           const NoiseRates& rates);

inline constexpr double kDefaultLindbladStep = 1e-3;

/// Fixed-step RK4 integration of lindblad_rhs up to time t. The last step is
/// shortened to land on t exactly. Throws IntegrationError if the trace drifts
/// by more than 1e-6.
DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const HermitianOperator& hamiltonian,
                              const NoiseRates& rates, double t, double dt = kDefaultLindbladStep);

DensityMatrix pure_to_density(const PureState& psi);

DensityMatrix partial_trace(const DensityMatrix& rho, const Bipartition& part);
/// Tr_B |psi><psi| without forming the global density matrix.
DensityMatrix partial_trace(const PureState& psi, const Bipartition& part);

/// Tr(rho^2) as the squared Frobenius norm.
template <typename Derived>
typename Derived::RealScalar purity(const Eigen::MatrixBase<Derived>& rho) {
  return rho.squaredNorm();
}

double renyi2_entropy(const DensityMatrix& rho_a);
double von_neumann_entropy(const DensityMatrix& rho);

double mutual_information(const DensityMatrix& rho, const Bipartition& part);
double mutual_information(const PureState& psi, const Bipartition& part);

/// Half-chain second Renyi entropy of a pure state.
double half_chain_entropy(const PureState& psi);

/// max |rho - rho^dagger|.
template <typename Derived>
double hermiticity_error(const Eigen::MatrixBase<Derived>& rho) {
  return (rho - rho.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const DensityMatrix& rho);

}  // namespace povmnet
