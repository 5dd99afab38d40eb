#include "povmnet/povm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "povmnet/rng.hpp"

namespace povmnet {

namespace {

void check_outcome(std::span<const std::uint8_t> outcome, int n_sites) {
  if (static_cast<int>(outcome.size()) != n_sites)
    throw DimensionError("outcome length " + std::to_string(outcome.size()) + " does not match " +
                         std::to_string(n_sites) + " sites");
  for (auto s : outcome)
    if (s < 1 || s > 4) throw std::invalid_argument("outcome symbol outside {1,2,3,4}");
}

// v <- (M acting on `site`) v
void apply_site(Eigen::Ref<PureState> v, int n_sites, int site, const Povm2x2& m) {
  const auto mask = static_cast<Eigen::Index>(site_mask(n_sites, site));
  const Eigen::Index dim = v.size();
  for (Eigen::Index x = 0; x < dim; ++x) {
    if (x & mask) continue;
    const Complex v0 = v(x);
    const Complex v1 = v(x | mask);
    v(x) = m(0, 0) * v0 + m(0, 1) * v1;
    v(x | mask) = m(1, 0) * v0 + m(1, 1) * v1;
  }
}

// Tr_top[(M x 1) sigma] for the most significant remaining site.
DensityMatrix contract_top(const DensityMatrix& sigma, const Povm2x2& m) {
  const Eigen::Index h = sigma.rows() / 2;
  DensityMatrix out = m(0, 0) * sigma.topLeftCorner(h, h);
  out += m(0, 1) * sigma.bottomLeftCorner(h, h);
  out += m(1, 0) * sigma.topRightCorner(h, h);
  out += m(1, 1) * sigma.bottomRightCorner(h, h);
  return out;
}

std::uint8_t draw_symbol(const std::array<double, 4>& p, Rng& rng) {
  const double total = p[0] + p[1] + p[2] + p[3];
  double u = rng.uniform() * total;
  for (std::uint8_t k = 0; k < 3; ++k) {
    if (u < p[k]) return static_cast<std::uint8_t>(k + 1);
    u -= p[k];
  }
  return 4;
}

// +1 eigenvectors of sigma_x, sigma_y, sigma_z followed by the -1 ones.
struct PauliEigenbasis {
  std::array<Eigen::Vector2cd, 3> plus;
  std::array<Eigen::Vector2cd, 3> minus;
  PauliEigenbasis() {
    const double r = 1.0 / std::sqrt(2.0);
    const Complex i(0.0, 1.0);
    plus = {Eigen::Vector2cd(r, r), Eigen::Vector2cd(r, r * i), Eigen::Vector2cd(1.0, 0.0)};
    minus = {Eigen::Vector2cd(r, -r), Eigen::Vector2cd(r, -r * i), Eigen::Vector2cd(0.0, 1.0)};
  }
};

template <typename ProbFn>
PovmBatch run_metropolis(int n_sites, std::size_t n_samples, const McmcConfig& cfg, ProbFn&& prob) {
  if (n_samples < 1) throw std::invalid_argument("mcmc_sampler: n_samples must be >= 1");
  if (cfg.burn_in < 0) throw std::invalid_argument("mcmc_sampler: burn_in must be >= 0");
  if (cfg.thinning < 0) throw std::invalid_argument("mcmc_sampler: thinning must be >= 1");
  const int thinning = cfg.thinning == 0 ? n_sites : cfg.thinning;

  Rng rng(cfg.seed);
  Outcome current(static_cast<std::size_t>(n_sites));
  double p_current = 0.0;
  for (int attempt = 0; attempt < 1000 && !(p_current > 0.0); ++attempt) {
    for (auto& s : current) s = static_cast<std::uint8_t>(1 + rng.below(4));
    p_current = prob(current);
  }
  if (!(p_current > 0.0)) throw SamplingError("mcmc_sampler: no positive-probability initial outcome after 1000 draws");

  auto sweep = [&] {
    for (int site = 0; site < n_sites; ++site) {
      const auto proposal = static_cast<std::uint8_t>(1 + rng.below(4));
      const double u = rng.uniform();
      const std::uint8_t old = current[site];
      if (proposal == old) continue;
      current[site] = proposal;
      const double p_new = prob(current);
      if (p_new >= p_current || u * p_current < p_new) {
        p_current = p_new;
      } else {
        current[site] = old;
      }
    }
  };

  for (int s = 0; s < cfg.burn_in; ++s) sweep();
  PovmBatch batch{n_sites, {}};
  batch.symbols.reserve(n_samples * static_cast<std::size_t>(n_sites));
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (int s = 0; s < thinning; ++s) sweep();
    batch.symbols.insert(batch.symbols.end(), current.begin(), current.end());
  }
  return batch;
}

}  // namespace

const Pauli4Set& pauli4_operators() {
  static const Pauli4Set ops = [] {
    const Complex i(0.0, 1.0);
    Pauli4Set m;
    m[0] << 1.0, 1.0, 1.0, 1.0;
    m[0] /= 6.0;  // |+><+| / 3
    m[1] << 1.0, -i, i, 1.0;
    m[1] /= 6.0;  // |L><L| / 3
    m[2] << 1.0, 0.0, 0.0, 0.0;
    m[2] /= 3.0;  // |0><0| / 3
    m[3] = Povm2x2::Identity() - m[0] - m[1] - m[2];
    return m;
  }();
  return ops;
}

OneHotTensor encode_one_hot(const PovmBatch& batch) {
  OneHotTensor t(batch.size(), batch.n_sites);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto row = batch.sample(s);
    for (int i = 0; i < batch.n_sites; ++i) {
      if (row[i] < 1 || row[i] > 4) throw std::invalid_argument("encode_one_hot: symbol outside {1,2,3,4}");
      t(s, i, row[i] - 1) = 1.0;
    }
  }
  return t;
}

PovmBatch decode_one_hot(const OneHotTensor& tensor) {
  const auto [n_samples, n_sites, depth] = tensor.shape();
  PovmBatch batch{static_cast<int>(n_sites), std::vector<std::uint8_t>(n_samples * n_sites)};
  for (std::size_t s = 0; s < n_samples; ++s)
    for (std::size_t i = 0; i < n_sites; ++i) {
      int hot = -1;
      for (std::size_t k = 0; k < depth; ++k) {
        const double v = tensor(s, static_cast<int>(i), static_cast<int>(k));
        if (v == 1.0) {
          if (hot >= 0) hot = -2;
          else if (hot == -1) hot = static_cast<int>(k);
        } else if (v != 0.0) {
          hot = -2;
        }
      }
      if (hot < 0)
        throw std::invalid_argument("decode_one_hot: malformed row at sample " + std::to_string(s) + ", site " +
                                    std::to_string(i));
      batch.symbols[s * n_sites + i] = static_cast<std::uint8_t>(hot + 1);
    }
  return batch;
}

double outcome_probability(const PureState& psi, std::span<const std::uint8_t> outcome) {
  const int n = sites_for_dimension(psi.size());
  check_outcome(outcome, n);
  const auto& ops = pauli4_operators();
  PureState phi = psi;
  for (int i = 0; i < n; ++i) apply_site(phi, n, i, ops[outcome[i] - 1]);
  return psi.dot(phi).real();
}

double outcome_probability(const DensityMatrix& rho, std::span<const std::uint8_t> outcome) {
  if (rho.rows() != rho.cols()) throw DimensionError("outcome_probability: rho is not square");
  const int n = sites_for_dimension(rho.rows());
  check_outcome(outcome, n);
  const auto& ops = pauli4_operators();
  DensityMatrix sigma = contract_top(rho, ops[outcome[0] - 1]);
  for (int i = 1; i < n; ++i) sigma = contract_top(sigma, ops[outcome[i] - 1]);
  return sigma(0, 0).real();
}

double outcome_probability_dense(const DensityMatrix& rho, std::span<const std::uint8_t> outcome) {
  const int n = sites_for_dimension(rho.rows());
  check_outcome(outcome, n);
  const auto& ops = pauli4_operators();
  Operator<double> m = ops[outcome[0] - 1];
  for (int i = 1; i < n; ++i) {
    const Povm2x2& b = ops[outcome[i] - 1];
    Operator<double> next(m.rows() * 2, m.cols() * 2);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) next.block<2, 2>(2 * r, 2 * c) = m(r, c) * b;
    m = std::move(next);
  }
  return (rho * m).trace().real();
}

PovmBatch exact_sampler(const PureState& psi, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("exact_sampler: n_samples must be >= 1");
  const int n = sites_for_dimension(psi.size());
  static const PauliEigenbasis basis;
  Rng rng(seed);
  PovmBatch batch{n, std::vector<std::uint8_t>(n_samples * static_cast<std::size_t>(n))};

  // The Pauli-4 POVM equals "pick x, y or z uniformly, measure projectively,
  // report 4 on a -1 outcome". Sampling the latent basis alongside each site
  // keeps the conditional state pure, so each site costs O(2^remaining).
  PureState chi(psi.size()), plus(psi.size() / 2), minus(psi.size() / 2);
  for (std::size_t s = 0; s < n_samples; ++s) {
    chi = psi;
    Eigen::Index len = chi.size();
    for (int site = 0; site < n; ++site) {
      const Eigen::Index half = len / 2;
      const auto b = static_cast<std::size_t>(rng.below(3));
      const auto& vp = basis.plus[b];
      const auto& vm = basis.minus[b];
      plus.head(half) = std::conj(vp(0)) * chi.head(half) + std::conj(vp(1)) * chi.segment(half, half);
      minus.head(half) = std::conj(vm(0)) * chi.head(half) + std::conj(vm(1)) * chi.segment(half, half);
      const double pp = plus.head(half).squaredNorm();
      const double pm = minus.head(half).squaredNorm();
      const bool is_plus = rng.uniform() * (pp + pm) < pp;
      batch.symbols[s * n + site] = is_plus ? static_cast<std::uint8_t>(b + 1) : std::uint8_t{4};
      chi.head(half) = is_plus ? plus.head(half) : minus.head(half);
      len = half;
    }
  }
  return batch;
}

PovmBatch exact_sampler(const DensityMatrix& rho, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("exact_sampler: n_samples must be >= 1");
  if (rho.rows() != rho.cols()) throw DimensionError("exact_sampler: rho is not square");
  const int n = sites_for_dimension(rho.rows());
  const auto& ops = pauli4_operators();
  Rng rng(seed);
  PovmBatch batch{n, std::vector<std::uint8_t>(n_samples * static_cast<std::size_t>(n))};

  // Conditional P(a_k | a_<k) from the reduced operator
  // sigma_k = Tr_<k[(M_a1 x ... x M_a(k-1) x 1) rho] / P(a_<k).
  auto conditional = [&](const DensityMatrix& sigma) {
    const Eigen::Index h = sigma.rows() / 2;
    Eigen::Matrix2cd r;
    r(0, 0) = sigma.topLeftCorner(h, h).trace();
    r(0, 1) = sigma.topRightCorner(h, h).trace();
    r(1, 0) = sigma.bottomLeftCorner(h, h).trace();
    r(1, 1) = sigma.bottomRightCorner(h, h).trace();
    std::array<double, 4> p{};
    for (int k = 0; k < 4; ++k) p[k] = std::max(0.0, (ops[k] * r).trace().real());
    return p;
  };

  const auto root = conditional(rho);
  for (std::size_t s = 0; s < n_samples; ++s) {
    std::uint8_t sym = draw_symbol(root, rng);
    batch.symbols[s * n] = sym;
    if (n == 1) continue;
    DensityMatrix sigma = contract_top(rho, ops[sym - 1]);
    for (int site = 1; site < n; ++site) {
      const double norm = sigma.trace().real();
      if (norm > 0.0) sigma /= norm;
      const auto p = conditional(sigma);
      sym = draw_symbol(p, rng);
      batch.symbols[s * n + site] = sym;
      if (site + 1 < n) sigma = contract_top(sigma, ops[sym - 1]);
    }
  }
  return batch;
}

PovmBatch mcmc_sampler(const PureState& psi, std::size_t n_samples, const McmcConfig& cfg) {
  const int n = sites_for_dimension(psi.size());
  const auto& ops = pauli4_operators();
  PureState phi(psi.size());
  return run_metropolis(n, n_samples, cfg, [&](const Outcome& a) {
    phi = psi;
    for (int i = 0; i < n; ++i) apply_site(phi, n, i, ops[a[i] - 1]);
    return psi.dot(phi).real();
  });
}

PovmBatch mcmc_sampler(const DensityMatrix& rho, std::size_t n_samples, const McmcConfig& cfg) {
  if (rho.rows() != rho.cols()) throw DimensionError("mcmc_sampler: rho is not square");
  const int n = sites_for_dimension(rho.rows());
  return run_metropolis(n, n_samples, cfg, [&](const Outcome& a) { return outcome_probability(rho, a); });
}

}  // namespace povmnet
