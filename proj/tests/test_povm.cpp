#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "povmnet/povm.hpp"
#include "support.hpp"

using namespace povmnet;
using Catch::Matchers::WithinAbs;

namespace {

DensityMatrix ket0() {
  DensityMatrix r = DensityMatrix::Zero(2, 2);
  r(0, 0) = 1.0;
  return r;
}

std::map<Outcome, double> single_site(double a, double b, double c, double d) {
  return {{{1}, a}, {{2}, b}, {{3}, c}, {{4}, d}};
}

std::vector<std::map<int, double>> marginals(const PovmBatch& b) {
  std::vector<std::map<int, double>> out(static_cast<std::size_t>(b.n_sites));
  for (std::size_t s = 0; s < b.size(); ++s)
    for (int k = 0; k < b.n_sites; ++k) out[k][b.sample(s)[k]] += 1.0 / static_cast<double>(b.size());
  return out;
}

}  // namespace

TEST_CASE("pauli-4 operators", "[povm]") {
  const auto& m = pauli4_operators();
  const Eigen::Matrix2cd sum = m[0] + m[1] + m[2] + m[3];
  CHECK((sum - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(m[2](0, 0) - 1.0 / 3.0) < 1e-16);
  CHECK(std::abs(m[2](1, 1)) < 1e-16);
  CHECK(std::abs(m[2](0, 1)) < 1e-16);
  for (const auto& op : m) {
    CHECK(hermiticity_error(op) < 1e-16);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd>(op).eigenvalues().minCoeff() >= -1e-15);
  }
}

TEST_CASE("single-qubit outcome probabilities", "[povm]") {
  const std::vector<double> p0{1 / 6.0, 1 / 6.0, 1 / 3.0, 1 / 3.0};
  const std::vector<double> pm{1 / 6.0, 1 / 6.0, 1 / 6.0, 1 / 2.0};
  for (std::uint8_t a = 1; a <= 4; ++a) {
    const Outcome o{a};
    CHECK_THAT(outcome_probability(ket0(), o), WithinAbs(p0[a - 1], 1e-15));
    CHECK_THAT(outcome_probability(DensityMatrix(DensityMatrix::Identity(2, 2) / 2.0), o), WithinAbs(pm[a - 1], 1e-15));
    PureState k0 = PureState::Zero(2);
    k0(0) = 1.0;
    CHECK_THAT(outcome_probability(k0, o), WithinAbs(p0[a - 1], 1e-15));
  }
}

TEST_CASE("probabilities normalise and match the dense oracle", "[povm]") {
  for (int n = 1; n <= 4; ++n) {
    const auto psi = testing::random_state(n, 40 + n);
    const auto rho = testing::random_density(n, 50 + n);
    double sp = 0.0, sr = 0.0;
    for (const auto& [a, p] : testing::enumerate(psi, n)) {
      sp += p;
      CHECK(p >= 0.0);
    }
    for (const auto& [a, p] : testing::enumerate(rho, n)) {
      sr += p;
      if (n <= 3) CHECK(std::abs(p - outcome_probability_dense(rho, a)) < 1e-14);
    }
    CHECK_THAT(sp, WithinAbs(1.0, 1e-10));
    CHECK_THAT(sr, WithinAbs(1.0, 1e-10));
  }
  const auto psi = testing::random_state(3, 9);
  for (const auto& [a, p] : testing::enumerate(psi, 3)) CHECK(std::abs(p - outcome_probability_dense(pure_to_density(psi), a)) < 1e-14);
  CHECK_THROWS_AS(outcome_probability(psi, Outcome{1, 2}), DimensionError);
  CHECK_THROWS_AS(outcome_probability(psi, Outcome{1, 5, 2}), std::invalid_argument);
}

TEST_CASE("exact sampler, one qubit", "[povm][stat]") {
  const auto b = exact_sampler(ket0(), 100000, 1);
  CHECK(b.size() == 100000);
  CHECK(testing::tv_distance(testing::empirical(b), single_site(1 / 6.0, 1 / 6.0, 1 / 3.0, 1 / 3.0)) < 0.01);
  PureState k0 = PureState::Zero(2);
  k0(0) = 1.0;
  const auto bp = exact_sampler(k0, 100000, 2);
  CHECK(testing::tv_distance(testing::empirical(bp), single_site(1 / 6.0, 1 / 6.0, 1 / 3.0, 1 / 3.0)) < 0.01);
  CHECK(exact_sampler(ket0(), 500, 3) == exact_sampler(ket0(), 500, 3));
  CHECK_FALSE(exact_sampler(ket0(), 500, 3) == exact_sampler(ket0(), 500, 4));
}

TEST_CASE("exact sampler, three qubits", "[povm][stat]") {
  const auto psi = testing::random_state(3, 77);
  const auto exact = testing::enumerate(psi, 3);
  CHECK(testing::tv_distance(testing::empirical(exact_sampler(psi, 100000, 5)), exact) < 0.02);
  const auto rho = testing::random_density(3, 78);
  CHECK(testing::tv_distance(testing::empirical(exact_sampler(rho, 100000, 6)), testing::enumerate(rho, 3)) < 0.02);
  CHECK(exact_sampler(psi, 200, 9) == exact_sampler(psi, 200, 9));
  CHECK_THROWS_AS(exact_sampler(psi, 0, 1), std::invalid_argument);
}

TEST_CASE("mcmc sampler matches exact probabilities", "[povm][stat]") {
  const auto b1 = mcmc_sampler(ket0(), 100000, {100, 0, 8});
  CHECK(testing::tv_distance(testing::empirical(b1), single_site(1 / 6.0, 1 / 6.0, 1 / 3.0, 1 / 3.0)) < 0.01);

  const SystemConfig cfg{4, 1.0, 1.0};
  const auto psi = evolve_unitary(initial_plus_state(cfg), build_tfim_hamiltonian(cfg), 1.0);
  const auto chain = marginals(mcmc_sampler(psi, 100000, {100, 0, 10}));
  const auto ref = marginals(exact_sampler(psi, 100000, 11));
  for (int k = 0; k < 4; ++k) {
    std::map<int, double> a = chain[k], b = ref[k];
    CHECK(testing::tv_distance(a, b) < 0.02);
  }
  const auto small = testing::random_state(3, 12);
  CHECK(testing::tv_distance(testing::empirical(mcmc_sampler(small, 100000, {100, 0, 13})), testing::enumerate(small, 3)) < 0.02);
  const auto rho = testing::random_density(2, 14);
  CHECK(testing::tv_distance(testing::empirical(mcmc_sampler(rho, 100000, {100, 0, 15})), testing::enumerate(rho, 2)) < 0.02);

  CHECK(mcmc_sampler(psi, 300, {100, 0, 3}) == mcmc_sampler(psi, 300, {100, 0, 3}));
}

TEST_CASE("one-hot round trip", "[povm]") {
  PovmBatch b{3, {3, 1, 4, 2, 2, 3}};
  const auto x = encode_one_hot(b);
  CHECK(x.shape() == std::array<std::size_t, 3>{2, 3, 4});
  CHECK(x(0, 0, 0) == 0.0);
  CHECK(x(0, 0, 2) == 1.0);
  CHECK(decode_one_hot(x) == b);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    PovmBatch r{1 + static_cast<int>(rng.below(10)), {}};
    const auto n = 1 + rng.below(50);
    for (std::size_t i = 0; i < n * static_cast<std::size_t>(r.n_sites); ++i) r.symbols.push_back(static_cast<std::uint8_t>(1 + rng.below(4)));
    CHECK(decode_one_hot(encode_one_hot(r)) == r);
  }

  PovmBatch big{10, std::vector<std::uint8_t>(10000, 1)};
  CHECK(encode_one_hot(big).shape() == std::array<std::size_t, 3>{1000, 10, 4});

  auto bad = encode_one_hot(b);
  bad(1, 2, 0) = 1.0;
  CHECK_THROWS_AS(decode_one_hot(bad), std::invalid_argument);
  CHECK_THROWS_AS(encode_one_hot(PovmBatch{2, {1, 7}}), std::invalid_argument);
}
