#include "povmnet/baseline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "povmnet/rng.hpp"

namespace povmnet {

void BaselineConfig::validate() const {
  if (n_unitaries < 2) throw std::invalid_argument("baseline: N_U must be >= 2");
  if (n_measurements < 2) throw std::invalid_argument("baseline: N_M must be >= 2");
}

LocalUnitaries random_local_unitaries(int n_sites, std::uint64_t seed) {
  if (n_sites < 1) throw std::invalid_argument("random_local_unitaries: n_sites must be positive");
  Rng rng(seed);
  LocalUnitaries out;
  out.reserve(static_cast<std::size_t>(n_sites));
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n_sites; ++i) {
    Eigen::Matrix2cd g;
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) g(r, c) = Complex(s * rng.normal(), s * rng.normal());
    Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
    Eigen::Matrix2cd q = qr.householderQ();
    const Eigen::Matrix2cd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < 2; ++k) {
      const double mag = std::abs(r(k, k));
      if (mag > 0.0) q.col(k) *= r(k, k) / mag;
    }
    out.push_back(q);
  }
  return out;
}

Eigen::VectorXd rotated_probabilities(const DensityMatrix& rho_a, const Bipartition& part,
                                      const LocalUnitaries& unitaries) {
  const auto& sites = part.subsystem_a();
  const int na = static_cast<int>(sites.size());
  if (rho_a.rows() != (Eigen::Index{1} << na) || rho_a.cols() != rho_a.rows())
    throw DimensionError("rotated_probabilities: rho_a does not match subsystem size");
  if (static_cast<int>(unitaries.size()) < part.n_sites())
    throw DimensionError("rotated_probabilities: need one unitary per site");
  // rho <- U_k rho U_k^dagger for each subsystem site k, applied as left and
  // right single-site actions.
  DensityMatrix rho = rho_a;
  const Eigen::Index dim = rho.rows();
  for (int k = 0; k < na; ++k) {
    const Eigen::Matrix2cd& u = unitaries[static_cast<std::size_t>(sites[k])];
    const auto mask = static_cast<Eigen::Index>(site_mask(na, k));
    for (Eigen::Index c = 0; c < dim; ++c)
      for (Eigen::Index x = 0; x < dim; ++x) {
        if (x & mask) continue;
        const Complex a0 = rho(x, c), a1 = rho(x | mask, c);
        rho(x, c) = u(0, 0) * a0 + u(0, 1) * a1;
        rho(x | mask, c) = u(1, 0) * a0 + u(1, 1) * a1;
      }
    const Eigen::Matrix2cd ud = u.adjoint();
    for (Eigen::Index y = 0; y < dim; ++y) {
      if (y & mask) continue;
      for (Eigen::Index r = 0; r < dim; ++r) {
        const Complex b0 = rho(r, y), b1 = rho(r, y | mask);
        rho(r, y) = b0 * ud(0, 0) + b1 * ud(1, 0);
        rho(r, y | mask) = b0 * ud(0, 1) + b1 * ud(1, 1);
      }
    }
  }
  Eigen::VectorXd p = rho.diagonal().real().cwiseMax(0.0);
  return p / p.sum();
}

namespace {

MeasurementRecord sample_counts(const Eigen::VectorXd& probs, int n_sub, std::int64_t n_meas, std::uint64_t seed) {
  if (n_meas < 1) throw std::invalid_argument("randomized measurements: n_meas must be positive");
  Rng rng(seed);
  MeasurementRecord rec{n_sub, n_meas, std::vector<std::int64_t>(static_cast<std::size_t>(probs.size()), 0)};
  // Multinomial draw as a chain of conditional binomials.
  std::int64_t remaining = n_meas;
  double mass = 1.0;
  for (Eigen::Index s = 0; s + 1 < probs.size() && remaining > 0; ++s) {
    const double q = mass > 0.0 ? std::clamp(probs(s) / mass, 0.0, 1.0) : 0.0;
    const auto k = static_cast<std::int64_t>(rng.binomial(static_cast<std::uint64_t>(remaining), q));
    rec.counts[static_cast<std::size_t>(s)] = k;
    remaining -= k;
    mass -= probs(s);
  }
  rec.counts.back() += remaining;
  return rec;
}

}  // namespace

MeasurementRecord simulate_randomized_measurements(const PureState& psi, const Bipartition& part,
                                                   const LocalUnitaries& unitaries, std::int64_t n_meas,
                                                   std::uint64_t seed) {
  if (sites_for_dimension(psi.size()) != part.n_sites()) throw DimensionError("randomized measurements: site mismatch");
  const auto p = rotated_probabilities(partial_trace(psi, part), part, unitaries);
  return sample_counts(p, static_cast<int>(part.subsystem_a().size()), n_meas, seed);
}

MeasurementRecord simulate_randomized_measurements(const DensityMatrix& rho, const Bipartition& part,
                                                   const LocalUnitaries& unitaries, std::int64_t n_meas,
                                                   std::uint64_t seed) {
  if (sites_for_dimension(rho.rows()) != part.n_sites()) throw DimensionError("randomized measurements: site mismatch");
  const auto p = rotated_probabilities(partial_trace(rho, part), part, unitaries);
  return sample_counts(p, static_cast<int>(part.subsystem_a().size()), n_meas, seed);
}

double purity_estimator(const MeasurementRecord& rec) {
  if (rec.n_measurements < 2) throw std::invalid_argument("purity_estimator: need at least two shots per unitary");
  const auto dim = rec.counts.size();
  if (dim != (std::size_t{1} << rec.n_sub_sites)) throw DimensionError("purity_estimator: count vector size");
  const double pairs = static_cast<double>(rec.n_measurements) * static_cast<double>(rec.n_measurements - 1);
  double x = 0.0;
  for (std::size_t s = 0; s < dim; ++s) {
    const auto ns = static_cast<double>(rec.counts[s]);
    if (ns == 0.0) continue;
    for (std::size_t s2 = 0; s2 < dim; ++s2) {
      const auto n2 = static_cast<double>(rec.counts[s2]);
      const double coincidences = s == s2 ? ns * (ns - 1.0) : ns * n2;
      if (coincidences == 0.0) continue;
      const int d = std::popcount(s ^ s2);
      x += std::pow(-2.0, -d) * coincidences / pairs;
    }
  }
  return std::ldexp(x, rec.n_sub_sites);
}

PurityEstimate estimate_purity(std::span<const MeasurementRecord> records) {
  if (records.empty()) throw std::invalid_argument("estimate_purity: no records");
  PurityEstimate est;
  for (const auto& r : records) est.per_unitary.push_back(purity_estimator(r));
  const double n = static_cast<double>(est.per_unitary.size());
  double mean = 0.0;
  for (double x : est.per_unitary) mean += x;
  mean /= n;
  est.purity = mean;
  if (est.per_unitary.size() > 1) {
    double ss = 0.0;
    for (double x : est.per_unitary) ss += (x - mean) * (x - mean);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

std::optional<double> hce_from_purity(double purity) {
  if (!(purity > 0.0)) return std::nullopt;
  return -std::log(purity);
}

PurityEstimate run_randomized_protocol(const PureState& psi, const Bipartition& part, const BaselineConfig& cfg) {
  cfg.validate();
  const DensityMatrix rho_a = partial_trace(psi, part);
  std::vector<MeasurementRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_unitaries));
  for (int u = 0; u < cfg.n_unitaries; ++u) {
    const auto us = random_local_unitaries(part.n_sites(), derive_seed(cfg.seed, {static_cast<std::uint64_t>(u), 0}));
    const auto p = rotated_probabilities(rho_a, part, us);
    records.push_back(sample_counts(p, static_cast<int>(part.subsystem_a().size()), cfg.n_measurements,
                                    derive_seed(cfg.seed, {static_cast<std::uint64_t>(u), 1})));
  }
  return estimate_purity(records);
}

}  // namespace povmnet
