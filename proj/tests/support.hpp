#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "povmnet/povm.hpp"
#include "povmnet/qsim.hpp"
#include "povmnet/rng.hpp"

namespace testing {

using namespace povmnet;

inline PureState random_state(int n, std::uint64_t seed) {
  Rng rng(seed);
  PureState psi(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(rng.normal(), rng.normal());
  return psi / psi.norm();
}

/// Random full-rank mixed state: G G^dagger / Tr.
inline DensityMatrix random_density(int n, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index d = Eigen::Index{1} << n;
  DensityMatrix g(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) g(r, c) = Complex(rng.normal(), rng.normal());
  DensityMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Eigen::Matrix2cd pauli_x() { return (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(); }
inline Eigen::Matrix2cd pauli_z() { return (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(); }

/// Kronecker product with the left factor on the more significant bits.
inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Operator `op` placed on `site` of an n-site chain.
inline Eigen::MatrixXcd embed(const Eigen::Matrix2cd& op, int site, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = 0; k < n; ++k) out = kron(out, k == site ? Eigen::MatrixXcd(op) : Eigen::MatrixXcd::Identity(2, 2));
  return out;
}

/// TFIM built from Kronecker products, independent of the library's bit tricks.
inline Eigen::MatrixXcd kron_tfim(int n, double j, double h) {
  const Eigen::Index d = Eigen::Index{1} << n;
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    H -= j * embed(pauli_z(), i, n) * embed(pauli_z(), (i + 1) % n, n);
    H += h * embed(pauli_x(), i, n);
  }
  return H;
}

template <typename T>
double tv_distance(const std::map<T, double>& p, const std::map<T, double>& q) {
  double s = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    s += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) s += std::abs(v);
  return 0.5 * s;
}

inline std::map<Outcome, double> empirical(const PovmBatch& b) {
  std::map<Outcome, double> f;
  for (std::size_t s = 0; s < b.size(); ++s) {
    auto row = b.sample(s);
    f[Outcome(row.begin(), row.end())] += 1.0 / static_cast<double>(b.size());
  }
  return f;
}

/// Every outcome string of length n with its Born probability.
template <typename State>
std::map<Outcome, double> enumerate(const State& state, int n) {
  std::map<Outcome, double> p;
  Outcome a(static_cast<std::size_t>(n), 1);
  const std::size_t total = std::size_t{1} << (2 * n);
  for (std::size_t code = 0; code < total; ++code) {
    for (int k = 0; k < n; ++k) a[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(1 + ((code >> (2 * k)) & 3));
    p[a] = outcome_probability(state, a);
  }
  return p;
}

}  // namespace testing
