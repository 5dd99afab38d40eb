#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "povmnet/dataio.hpp"
#include "povmnet/errors.hpp"
#include "povmnet/util/kvfile.hpp"

using namespace povmnet;
namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("povmnet_test_dataio_" + name);
  fs::remove_all(dir);
  return dir;
}

UnitaryDatasetConfig small_unitary() {
  UnitaryDatasetConfig c;
  c.system = {4, 1.0, 1.0};
  c.n_states = 10;
  c.n_batches = 2;
  c.n_samples = 50;
  c.seed = 99;
  c.labels = {LabelKind::kHce, LabelKind::kMi};
  return c;
}

void rewrite_key(const fs::path& manifest, const std::string& key, const std::string& value) {
  auto kv = KeyValueFile::load(manifest);
  kv.set(key, value);
  kv.save(manifest);
}

}  // namespace

TEST_CASE("time grid is equidistant and inclusive", "[dataio]") {
  UnitaryDatasetConfig c;
  c.n_states = 11;
  c.t_max = 5.0;
  const auto t = c.times();
  REQUIRE(t.size() == 11);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 5.0);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK_THAT(t[i] - t[i - 1], WithinAbs(0.5, 1e-12));
}

TEST_CASE("paper-scale shape", "[dataio]") {
  Dataset d;
  d.system.n_sites = 10;
  d.n_batches = 50;
  d.n_samples = 1000;
  d.records.resize(100);
  CHECK(d.shape() == std::array<std::size_t, 5>{100, 50, 1000, 10, 4});
  // Payload: one byte per (record, batch, sample, site).
  CHECK(d.shape()[0] * d.shape()[1] * d.shape()[2] * d.shape()[3] == 50'000'000);
}

TEST_CASE("unitary dataset labels match direct recomputation", "[dataio]") {
  const auto cfg = small_unitary();
  const auto d = generate_unitary_dataset(cfg, SamplerKind::kMcmc);
  REQUIRE(d.records.size() == 10);
  CHECK(d.shape() == std::array<std::size_t, 5>{10, 2, 50, 4, 4});
  CHECK_THAT(d.records[0].labels[0], WithinAbs(0.0, 1e-12));
  const SpectralPropagator prop(build_tfim_hamiltonian(cfg.system));
  const auto psi0 = initial_plus_state(cfg.system);
  const auto part = Bipartition::half_chain(4);
  for (const auto& rec : d.records) {
    const auto psi = prop.evolve(psi0, rec.params[0]);
    CHECK(rec.labels[0] == renyi2_entropy(partial_trace(psi, part)));
    CHECK(rec.labels[1] == mutual_information(psi, part));
    REQUIRE(rec.batches.size() == 2);
    for (const auto& b : rec.batches) {
      CHECK(b.n_sites == 4);
      CHECK(b.size() == 50);
    }
  }
  CHECK(d.label_index(LabelKind::kMi) == 1);
}

TEST_CASE("generation is deterministic and independent of worker count", "[dataio]") {
  const auto cfg = small_unitary();
  const auto a = generate_unitary_dataset(cfg, SamplerKind::kExact);
  setenv("POVMNET_WORKERS", "3", 1);
  const auto b = generate_unitary_dataset(cfg, SamplerKind::kExact);
  unsetenv("POVMNET_WORKERS");
  CHECK(a == b);
  auto other = cfg;
  other.seed = 100;
  CHECK_FALSE(generate_unitary_dataset(other, SamplerKind::kExact) == a);
}

TEST_CASE("dissipative dataset", "[dataio]") {
  DissipativeDatasetConfig cfg;
  cfg.system = {4, 1.0, 1.0};
  cfg.grid = equidistant_grid(5, 0.0, 0.5);
  cfg.grid.resize(6);
  cfg.n_batches = 1;
  cfg.n_samples = 20;
  cfg.seed = 5;
  const auto d = generate_dissipative_dataset(cfg, SamplerKind::kMcmc);
  REQUIRE(d.records.size() == 6);
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    const auto& rec = d.records[r];
    const NoisePoint p{rec.params[0], rec.params[1]};
    CHECK(p == cfg.grid[r]);
    const auto rho = dissipative_state(cfg.system, cfg.fixed_time, p);
    CHECK_THAT(rec.labels[0], WithinAbs(mutual_information(rho, Bipartition::half_chain(4)), 1e-9));
  }
  // Zero noise reduces to the unitary quench.
  const auto psi = evolve_unitary(initial_plus_state(cfg.system), build_tfim_hamiltonian(cfg.system), cfg.fixed_time);
  CHECK_THAT(d.records[0].labels[0], WithinAbs(mutual_information(psi, Bipartition::half_chain(4)), 1e-6));

  auto bad = cfg;
  bad.grid = {{0.6, 0.1}};
  CHECK_THROWS_AS(generate_dissipative_dataset(bad, SamplerKind::kMcmc), std::invalid_argument);
}

TEST_CASE("noise grids and validation splits", "[dataio]") {
  const auto g = equidistant_grid(5, 0.0, 0.5);
  REQUIRE(g.size() == 25);
  CHECK(g[0] == NoisePoint{0.0, 0.0});
  CHECK(g[1] == NoisePoint{0.0, 0.125});
  CHECK(g[24] == NoisePoint{0.5, 0.5});

  const Region region{0.0, 0.5};
  const auto r = make_validation_splits(SplitKind::kRandom, 20, region, 3);
  REQUIRE(r.size() == 20);
  for (const auto& p : r) {
    CHECK(p.dephasing >= 0.0);
    CHECK(p.dephasing <= 0.5);
    CHECK(p.decay >= 0.0);
    CHECK(p.decay <= 0.5);
  }
  CHECK(make_validation_splits(SplitKind::kRandom, 20, region, 3) == r);
  CHECK_FALSE(make_validation_splits(SplitKind::kRandom, 20, region, 4) == r);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = make_validation_splits(SplitKind::kCrossSection, 40, region, seed);
    REQUIRE(c.size() == 40);
    const double step = std::hypot(c[1].dephasing - c[0].dephasing, c[1].decay - c[0].decay);
    CHECK(step > 0.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
      CHECK_THAT(std::hypot(c[i].dephasing - c[i - 1].dephasing, c[i].decay - c[i - 1].decay), WithinAbs(step, 1e-12));
      CHECK(c[i].dephasing >= -1e-15);
      CHECK(c[i].decay <= 0.5 + 1e-15);
    }
    // Both endpoints on the boundary.
    for (const auto& e : {c.front(), c.back()}) {
      const double d = std::min({e.dephasing, e.decay, 0.5 - e.dephasing, 0.5 - e.decay});
      CHECK(std::abs(d) < 1e-12);
    }
  }
}

TEST_CASE("dataset round trip", "[dataio]") {
  const auto d = generate_unitary_dataset(small_unitary(), SamplerKind::kMcmc);
  const auto dir = scratch("roundtrip");
  write_dataset(d, dir);
  CHECK(fs::exists(dir / "manifest.txt"));
  CHECK(fs::file_size(dir / "samples.u8") == 10u * 2 * 50 * 4);
  CHECK(fs::file_size(dir / "labels.f64") == 10u * 2 * 8);
  CHECK(read_dataset(dir) == d);

  DissipativeDatasetConfig cfg;
  cfg.system = {3, 1.0, 1.0};
  cfg.grid = {{0.1, 0.2}, {0.0, 0.5}};
  cfg.n_batches = 2;
  cfg.n_samples = 7;
  const auto dd = generate_dissipative_dataset(cfg, SamplerKind::kExact);
  const auto dir2 = scratch("roundtrip_diss");
  write_dataset(dd, dir2);
  CHECK(read_dataset(dir2) == dd);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("corrupted datasets are rejected", "[dataio]") {
  const auto d = generate_unitary_dataset(small_unitary(), SamplerKind::kMcmc);
  const auto dir = scratch("corrupt");
  auto fresh = [&] {
    fs::remove_all(dir);
    write_dataset(d, dir);
  };

  fresh();
  rewrite_key(dir / "manifest.txt", "n_records", "11");
  CHECK_THROWS_AS(read_dataset(dir), DataError);

  fresh();
  rewrite_key(dir / "manifest.txt", "version", "2");
  CHECK_THROWS_AS(read_dataset(dir), DataError);

  fresh();
  {
    auto bytes = read_file_bytes(dir / "samples.u8");
    bytes[17] = bytes[17] == 1 ? 2 : 1;
    write_file_bytes(dir / "samples.u8", bytes);
  }
  CHECK_THROWS_AS(read_dataset(dir), DataError);

  fresh();
  {
    auto bytes = read_file_bytes(dir / "labels.f64");
    bytes.resize(bytes.size() - 8);
    write_file_bytes(dir / "labels.f64", bytes);
  }
  CHECK_THROWS_AS(read_dataset(dir), DataError);

  fresh();
  fs::remove(dir / "samples.u8");
  CHECK_THROWS_AS(read_dataset(dir), DataError);

  CHECK_THROWS_AS(read_dataset(scratch("missing")), DataError);
  fs::remove_all(dir);
}

TEST_CASE("label lookup and enum parsing", "[dataio]") {
  Dataset d;
  d.label_kinds = {LabelKind::kHce};
  CHECK(d.label_index(LabelKind::kHce) == 0);
  CHECK_THROWS_AS(d.label_index(LabelKind::kMi), DataError);
  CHECK(parse_label_kind(to_string(LabelKind::kMi)) == LabelKind::kMi);
  CHECK(parse_sampler_kind("exact") == SamplerKind::kExact);
  CHECK(parse_dataset_kind(to_string(DatasetKind::kDissipative)) == DatasetKind::kDissipative);
  CHECK_THROWS(parse_sampler_kind("gibbs"));
}
