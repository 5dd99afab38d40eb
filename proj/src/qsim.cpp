#include "povmnet/qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace povmnet {

namespace {

void check_square(const DensityMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + " is not square");
}

void check_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                         std::to_string(b));
}

// Maps (index within A, index within B) to the global basis index.
struct SplitIndex {
  int dim_a = 0;
  int dim_b = 0;
  std::vector<std::uint32_t> global;  // global[a * dim_b + b]

  explicit SplitIndex(const Bipartition& part) {
    const int n = part.n_sites();
    const auto& sa = part.subsystem_a();
    const auto& sb = part.subsystem_b();
    dim_a = 1 << sa.size();
    dim_b = 1 << sb.size();
    global.resize(static_cast<std::size_t>(dim_a) * dim_b);
    for (int a = 0; a < dim_a; ++a) {
      std::uint32_t ga = 0;
      for (std::size_t k = 0; k < sa.size(); ++k)
        if (a & (1 << (sa.size() - 1 - k))) ga |= site_mask(n, sa[k]);
      for (int b = 0; b < dim_b; ++b) {
        std::uint32_t g = ga;
        for (std::size_t k = 0; k < sb.size(); ++k)
          if (b & (1 << (sb.size() - 1 - k))) g |= site_mask(n, sb[k]);
        global[static_cast<std::size_t>(a) * dim_b + b] = g;
      }
    }
  }

  std::uint32_t operator()(int a, int b) const { return global[static_cast<std::size_t>(a) * dim_b + b]; }
};

}  // namespace

void SystemConfig::validate() const {
  if (n_sites < 2) throw std::invalid_argument("n_sites must be at least 2");
  if (n_sites > kMaxSites)
    throw CapacityError("n_sites = " + std::to_string(n_sites) + " exceeds the dense-storage cap of " +
                        std::to_string(kMaxSites));
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw std::invalid_argument("coupling J must be finite and >= 0");
  if (!std::isfinite(field)) throw std::invalid_argument("field h must be finite");
}

Bipartition::Bipartition(int n_sites, std::vector<int> subsystem_a) : n_sites_(n_sites), a_(std::move(subsystem_a)) {
  if (n_sites < 1 || n_sites > kMaxSites) throw std::invalid_argument("bipartition: bad site count");
  std::sort(a_.begin(), a_.end());
  if (a_.empty() || static_cast<int>(a_.size()) >= n_sites)
    throw std::invalid_argument("bipartition: subsystem must be a non-empty proper subset");
  if (std::adjacent_find(a_.begin(), a_.end()) != a_.end())
    throw std::invalid_argument("bipartition: duplicate site index");
  if (a_.front() < 0 || a_.back() >= n_sites) throw std::invalid_argument("bipartition: site index out of range");
  for (int s = 0; s < n_sites; ++s)
    if (!std::binary_search(a_.begin(), a_.end(), s)) b_.push_back(s);
}

Bipartition Bipartition::half_chain(int n_sites) {
  std::vector<int> a((n_sites + 1) / 2);
  for (int i = 0; i < static_cast<int>(a.size()); ++i) a[i] = i;
  return Bipartition(n_sites, std::move(a));
}

int sites_for_dimension(Eigen::Index dim) {
  if (dim < 2 || !std::has_single_bit(static_cast<std::uint64_t>(dim)))
    throw DimensionError("dimension " + std::to_string(dim) + " is not a power of two");
  const int n = std::countr_zero(static_cast<std::uint64_t>(dim));
  if (n > kMaxSites) throw CapacityError("dimension exceeds the dense-storage cap");
  return n;
}

HermitianOperator build_tfim_hamiltonian(const SystemConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_sites;
  const auto dim = static_cast<Eigen::Index>(cfg.dimension());
  HermitianOperator h = HermitianOperator::Zero(dim, dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    double zz = 0.0;
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      const bool si = x & site_mask(n, i);
      const bool sj = x & site_mask(n, j);
      zz += (si == sj) ? 1.0 : -1.0;
    }
    h(x, x) = -cfg.coupling * zz;
    for (int i = 0; i < n; ++i) h(x ^ static_cast<Eigen::Index>(site_mask(n, i)), x) += cfg.field;
  }
  return h;
}

PureState initial_plus_state(const SystemConfig& cfg) {
  if (cfg.n_sites < 1 || cfg.n_sites > kMaxSites) throw CapacityError("initial_plus_state: bad site count");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << cfg.n_sites);
  return PureState::Constant(dim, Complex(std::pow(2.0, -0.5 * cfg.n_sites), 0.0));
}

SpectralPropagator::SpectralPropagator(const HermitianOperator& hamiltonian) {
  check_square(hamiltonian, "hamiltonian");
  if (hamiltonian.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hamiltonian.real());
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    energies_ = es.eigenvalues();
    basis_ = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<HermitianOperator> es(hamiltonian);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    energies_ = es.eigenvalues();
    basis_ = es.eigenvectors();
  }
}

PureState SpectralPropagator::evolve(const PureState& psi0, double t) const {
  check_same_dim(psi0.size(), dimension(), "evolve_unitary");
  if (t == 0.0) return psi0;
  PureState coeff = basis_.adjoint() * psi0;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -energies_(k) * t);
  return basis_ * coeff;
}

PureState evolve_unitary(const PureState& psi0, const HermitianOperator& hamiltonian, double t) {
  check_same_dim(psi0.size(), hamiltonian.rows(), "evolve_unitary");
  return SpectralPropagator(hamiltonian).evolve(psi0, t);
}

DensityMatrix lindblad_rhs(const DensityMatrix& rho, const HermitianOperator& hamiltonian, const NoiseRates& rates) {
  check_square(rho, "rho");
  check_same_dim(rho.rows(), hamiltonian.rows(), "lindblad_rhs");
  const int n = sites_for_dimension(rho.rows());
  const Eigen::Index dim = rho.rows();
  const Complex minus_i(0.0, -1.0);

  DensityMatrix out(dim, dim);
  out.noalias() = hamiltonian * rho;
  out.noalias() -= rho * hamiltonian;
  out *= minus_i;

  const double gz = rates.dephasing;
  const double gm = rates.decay;
  if (gz == 0.0 && gm == 0.0) return out;

  for (Eigen::Index y = 0; y < dim; ++y) {
    const int zeros_y = n - std::popcount(static_cast<std::uint64_t>(y));
    for (Eigen::Index x = 0; x < dim; ++x) {
      // sum_i (sz rho sz - rho) = -2 * hamming(x, y) * rho
      const int hamming = std::popcount(static_cast<std::uint64_t>(x ^ y));
      const int zeros_x = n - std::popcount(static_cast<std::uint64_t>(x));
      const double diag = -2.0 * gz * hamming - 0.5 * gm * (zeros_x + zeros_y);
      out(x, y) += diag * rho(x, y);
    }
  }
  if (gm != 0.0) {
    for (int i = 0; i < n; ++i) {
      const auto m = static_cast<Eigen::Index>(site_mask(n, i));
      for (Eigen::Index y = 0; y < dim; ++y) {
        if (!(y & m)) continue;
        for (Eigen::Index x = 0; x < dim; ++x)
          if (x & m) out(x, y) += gm * rho(x ^ m, y ^ m);
      }
    }
  }
  return out;
}

DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const HermitianOperator& hamiltonian, const NoiseRates& rates,
                              double t, double dt) {
  check_square(rho0, "rho0");
  check_same_dim(rho0.rows(), hamiltonian.rows(), "evolve_lindblad");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("evolve_lindblad: dt must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("evolve_lindblad: t must be non-negative");
  if (rates.dephasing < 0.0 || rates.decay < 0.0) throw std::invalid_argument("evolve_lindblad: negative rate");

  const double steps_real = std::ceil(t / dt - 1e-9);
  if (steps_real > 1e9) throw IntegrationError("evolve_lindblad: step count overflow");
  const auto n_steps = static_cast<std::int64_t>(std::max(0.0, steps_real));

  DensityMatrix rho = rho0;
  const Complex trace0 = rho0.trace();
  for (std::int64_t k = 0; k < n_steps; ++k) {
    const double h = std::min(dt, t - static_cast<double>(k) * dt);
    if (h <= 0.0) break;
    const DensityMatrix k1 = lindblad_rhs(rho, hamiltonian, rates);
    const DensityMatrix k2 = lindblad_rhs(rho + (0.5 * h) * k1, hamiltonian, rates);
    const DensityMatrix k3 = lindblad_rhs(rho + (0.5 * h) * k2, hamiltonian, rates);
    const DensityMatrix k4 = lindblad_rhs(rho + h * k3, hamiltonian, rates);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = (0.5 * (rho + rho.adjoint())).eval();
    const double drift = std::abs(rho.trace() - trace0);
    if (!(drift <= 1e-6))
      throw IntegrationError("evolve_lindblad: trace drift " + std::to_string(drift) + " at step " + std::to_string(k));
  }
  return rho;
}

DensityMatrix pure_to_density(const PureState& psi) { return psi * psi.adjoint(); }

DensityMatrix partial_trace(const DensityMatrix& rho, const Bipartition& part) {
  check_square(rho, "rho");
  if (sites_for_dimension(rho.rows()) != part.n_sites()) throw DimensionError("partial_trace: site count mismatch");
  const SplitIndex idx(part);
  DensityMatrix out = DensityMatrix::Zero(idx.dim_a, idx.dim_a);
  for (int a2 = 0; a2 < idx.dim_a; ++a2)
    for (int a1 = 0; a1 < idx.dim_a; ++a1) {
      Complex acc = 0.0;
      for (int b = 0; b < idx.dim_b; ++b) acc += rho(idx(a1, b), idx(a2, b));
      out(a1, a2) = acc;
    }
  return out;
}

DensityMatrix partial_trace(const PureState& psi, const Bipartition& part) {
  if (sites_for_dimension(psi.size()) != part.n_sites()) throw DimensionError("partial_trace: site count mismatch");
  const SplitIndex idx(part);
  Operator<double> amp(idx.dim_a, idx.dim_b);
  for (int b = 0; b < idx.dim_b; ++b)
    for (int a = 0; a < idx.dim_a; ++a) amp(a, b) = psi(idx(a, b));
  return amp * amp.adjoint();
}

double renyi2_entropy(const DensityMatrix& rho_a) {
  check_square(rho_a, "rho_a");
  const double p = purity(rho_a);
  if (!(p > 0.0 && p <= 1.0 + 1e-9)) throw NumericalError("renyi2_entropy: purity " + std::to_string(p) + " out of range");
  return -std::log(std::min(p, 1.0));
}

double von_neumann_entropy(const DensityMatrix& rho) {
  check_square(rho, "rho");
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("von_neumann_entropy: eigensolver failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (lambda.minCoeff() < -1e-8) throw NumericalError("von_neumann_entropy: invalid state (negative eigenvalue)");
  double s = 0.0;
  for (double l : lambda) {
    l = std::clamp(l, 0.0, 1.0);
    if (l > 1e-14) s -= l * std::log(l);
  }
  return s;
}

double mutual_information(const DensityMatrix& rho, const Bipartition& part) {
  const double sa = von_neumann_entropy(partial_trace(rho, part));
  const double sb = von_neumann_entropy(partial_trace(rho, part.complement()));
  return sa + sb - von_neumann_entropy(rho);
}

double mutual_information(const PureState& psi, const Bipartition& part) {
  const double sa = von_neumann_entropy(partial_trace(psi, part));
  const double sb = von_neumann_entropy(partial_trace(psi, part.complement()));
  return sa + sb;
}

double half_chain_entropy(const PureState& psi) {
  return renyi2_entropy(partial_trace(psi, Bipartition::half_chain(sites_for_dimension(psi.size()))));
}

double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace povmnet
