#include "povmnet/bench/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <stdexcept>

#include "povmnet/baseline.hpp"
#include "povmnet/errors.hpp"
#include "povmnet/rng.hpp"
#include "povmnet/util/kvfile.hpp"
#include "povmnet/util/parallel.hpp"

namespace povmnet::bench {

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  if (dir.empty()) throw std::invalid_argument("an output directory is required (--out)");
  fs::create_directories(dir);
}

void put_system(KeyValueFile& kv, const SystemConfig& s) {
  kv.set("n_sites", s.n_sites);
  kv.set("coupling", s.coupling);
  kv.set("field", s.field);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("need at least one time point");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

bool noiseless(const NoiseRates& r) { return r.dephasing == 0.0 && r.decay == 0.0; }

std::vector<std::string> param_names(DatasetKind k) {
  if (k == DatasetKind::kUnitary) return {"t_over_h"};
  return {"gamma_z", "gamma_minus"};
}

}  // namespace

void cmd_simulate(const SimulateOptions& opt) {
  opt.system.validate();
  if (opt.t_max < opt.t_min) throw std::invalid_argument("simulate: t_max < t_min");
  if (opt.rates.dephasing < 0.0 || opt.rates.decay < 0.0) throw std::invalid_argument("simulate: rates must be non-negative");
  prepare_dir(opt.out);
  const auto times = linspace(opt.t_min, opt.t_max, opt.n_points);
  const auto h = build_tfim_hamiltonian(opt.system);
  const auto psi0 = initial_plus_state(opt.system);
  const auto part = Bipartition::half_chain(opt.system.n_sites);

  auto csv = open_out(opt.out / "observables.csv");
  csv << "t_over_h,hce_nats,mi_nats,purity_half\n";
  auto row = [&](double t, const DensityMatrix& rho) {
    const auto rho_a = partial_trace(rho, part);
    csv << format_double(t) << ',' << format_double(renyi2_entropy(rho_a)) << ','
        << format_double(mutual_information(rho, part)) << ',' << format_double(purity(rho_a)) << '\n';
  };
  if (noiseless(opt.rates)) {
    const SpectralPropagator prop(h);
    for (double t : times) row(t, pure_to_density(prop.evolve(psi0, t)));
  } else {
    DensityMatrix rho = pure_to_density(psi0);
    double now = 0.0;
    for (double t : times) {
      if (t > now) rho = evolve_lindblad(rho, h, opt.rates, t - now);
      now = std::max(now, t);
      row(t, rho);
    }
  }

  KeyValueFile kv;
  kv.set("command", std::string("simulate"));
  put_system(kv, opt.system);
  kv.set("gamma_z", opt.rates.dephasing);
  kv.set("gamma_minus", opt.rates.decay);
  kv.set("t_min", opt.t_min);
  kv.set("t_max", opt.t_max);
  kv.set("n_points", opt.n_points);
  kv.save(opt.out / "config.txt");
}

void cmd_sample(const SampleOptions& opt) {
  opt.system.validate();
  if (opt.n_samples < 1) throw std::invalid_argument("sample: n_samples must be positive");
  if (opt.time < 0.0) throw std::invalid_argument("sample: time must be non-negative");
  prepare_dir(opt.out);
  const auto h = build_tfim_hamiltonian(opt.system);
  const auto psi0 = initial_plus_state(opt.system);
  const auto n = static_cast<std::size_t>(opt.n_samples);
  PovmBatch batch;
  if (noiseless(opt.rates)) {
    const auto psi = evolve_unitary(psi0, h, opt.time);
    batch = opt.sampler == SamplerKind::kExact ? exact_sampler(psi, n, opt.seed)
                                               : mcmc_sampler(psi, n, McmcConfig{100, 0, opt.seed});
  } else {
    const auto rho = evolve_lindblad(pure_to_density(psi0), h, opt.rates, opt.time);
    batch = opt.sampler == SamplerKind::kExact ? exact_sampler(rho, n, opt.seed)
                                               : mcmc_sampler(rho, n, McmcConfig{100, 0, opt.seed});
  }

  auto csv = open_out(opt.out / "samples.csv");
  for (int k = 0; k < opt.system.n_sites; ++k) csv << "site_" << k << (k + 1 < opt.system.n_sites ? ',' : '\n');
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto row = batch.sample(s);
    for (std::size_t k = 0; k < row.size(); ++k) csv << static_cast<int>(row[k]) << (k + 1 < row.size() ? ',' : '\n');
  }

  KeyValueFile kv;
  kv.set("command", std::string("sample"));
  put_system(kv, opt.system);
  kv.set("gamma_z", opt.rates.dephasing);
  kv.set("gamma_minus", opt.rates.decay);
  kv.set("t_over_h", opt.time);
  kv.set("n_samples", opt.n_samples);
  kv.set("sampler", to_string(opt.sampler));
  kv.set("seed", opt.seed);
  kv.save(opt.out / "config.txt");
}

Dataset cmd_make_dataset(const DatasetOptions& opt) {
  prepare_dir(opt.out);
  Dataset data;
  KeyValueFile kv;
  kv.set("command", std::string("make-dataset"));
  kv.set("preset", opt.preset);
  kv.set("scale", to_string(opt.scale));
  kv.set("seed", opt.seed);
  kv.set("sampler", to_string(opt.sampler));
  if (is_unitary_preset(opt.preset)) {
    auto cfg = unitary_preset(opt.preset, opt.scale, opt.seed);
    if (opt.n_sites) cfg.system.n_sites = *opt.n_sites;
    if (opt.n_records) cfg.n_states = *opt.n_records;
    if (opt.n_batches) cfg.n_batches = *opt.n_batches;
    if (opt.n_samples) cfg.n_samples = *opt.n_samples;
    cfg.validate();
    put_system(kv, cfg.system);
    kv.set("n_states", cfg.n_states);
    kv.set("t_min", cfg.t_min);
    kv.set("t_max", cfg.t_max);
    kv.set("n_batches", cfg.n_batches);
    kv.set("n_samples", cfg.n_samples);
    kv.set("dataset_seed", cfg.seed);
    data = generate_unitary_dataset(cfg, opt.sampler);
  } else {
    auto cfg = dissipative_preset(opt.preset, opt.scale, opt.seed);
    if (opt.n_sites) cfg.system.n_sites = *opt.n_sites;
    if (opt.n_records) {
      if (*opt.n_records < 1) throw std::invalid_argument("n_records must be positive");
      cfg.grid.resize(std::min(cfg.grid.size(), static_cast<std::size_t>(*opt.n_records)));
    }
    if (opt.n_batches) cfg.n_batches = *opt.n_batches;
    if (opt.n_samples) cfg.n_samples = *opt.n_samples;
    cfg.validate();
    put_system(kv, cfg.system);
    kv.set("fixed_time", cfg.fixed_time);
    kv.set("n_points", static_cast<std::uint64_t>(cfg.grid.size()));
    kv.set("n_batches", cfg.n_batches);
    kv.set("n_samples", cfg.n_samples);
    kv.set("dataset_seed", cfg.seed);
    data = generate_dissipative_dataset(cfg, opt.sampler);
  }
  write_dataset(data, opt.out);
  kv.save(opt.out / "config.txt");
  return data;
}

bool TrainingDomain::contains(const std::vector<double>& params) const {
  if (params.size() != lo.size()) return false;
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i] < lo[i] - tol || params[i] > hi[i] + tol) return false;
  return true;
}

namespace {

TrainingDomain domain_of(const Dataset& data) {
  TrainingDomain d;
  for (const auto& rec : data.records) {
    if (d.lo.empty()) {
      d.lo = d.hi = rec.params;
      continue;
    }
    for (std::size_t i = 0; i < rec.params.size(); ++i) {
      d.lo[i] = std::min(d.lo[i], rec.params[i]);
      d.hi[i] = std::max(d.hi[i], rec.params[i]);
    }
  }
  return d;
}

std::string member_dir(int m) { return "member_" + std::to_string(m); }

}  // namespace

std::vector<MemberStatus> cmd_train(const TrainOptions& opt) {
  const auto preset = train_preset(opt.preset, opt.scale);
  const int epochs = opt.epochs.value_or(preset.epochs);
  const int n_members = opt.ensemble.value_or(preset.ensemble);
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (n_members < 1) throw std::invalid_argument("ensemble size must be at least 1");
  const Dataset train_set = read_dataset(opt.train_data);
  const Dataset val_set = read_dataset(opt.val_data);
  if (train_set.system.n_sites != val_set.system.n_sites)
    throw DimensionError("training and validation data have different chain lengths");
  train_set.label_index(preset.label);
  val_set.label_index(preset.label);
  prepare_dir(opt.out);

  std::vector<MemberStatus> status(static_cast<std::size_t>(n_members));
  std::mutex log_mutex;
  parallel_for(status.size(), worker_count(), [&](std::size_t i) {
    const int m = static_cast<int>(i);
    neural::ModelConfig model;
    model.seed = neural::member_seed(opt.seed, m);
    neural::TrainConfig tc;
    tc.epochs = epochs;
    tc.seed = model.seed;
    tc.label = preset.label;
    if (opt.verbose)
      tc.on_epoch = [&, m](const neural::EpochRecord& r) {
        if (r.epoch % 10 != 0 && r.epoch != epochs) return;
        std::lock_guard lock(log_mutex);
        std::clog << "member " << m << " epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << '\n';
      };
    const auto result = neural::train(model, tc, train_set, val_set);
    const fs::path dir = opt.out / member_dir(m);
    fs::create_directories(dir);
    neural::write_history_csv(result.history, dir / "history.csv");
    if (result.best_epoch > 0)
      neural::write_checkpoint({result.best, result.best_epoch, result.best_val_loss, train_set.system.n_sites, preset.label},
                               dir / "checkpoint");
    auto& s = status[i];
    s.member = m;
    s.seed = model.seed;
    s.diverged = result.diverged;
    s.best_epoch = result.best_epoch;
    s.best_val_loss = result.best_val_loss;
    s.message = result.message;
  });

  const auto domain = domain_of(train_set);
  KeyValueFile kv;
  kv.set("format", std::string("povmnet-ensemble"));
  kv.set("version", 1);
  kv.set("preset", opt.preset);
  kv.set("scale", to_string(opt.scale));
  kv.set("seed", opt.seed);
  kv.set("epochs", epochs);
  kv.set("label", to_string(preset.label));
  kv.set("n_sites", train_set.system.n_sites);
  kv.set("train_data", fs::absolute(opt.train_data).string());
  kv.set("val_data", fs::absolute(opt.val_data).string());
  kv.set("domain.lo", join(domain.lo));
  kv.set("domain.hi", join(domain.hi));
  kv.set("n_members", n_members);
  int usable = 0;
  for (const auto& s : status) {
    const std::string p = "member." + std::to_string(s.member) + ".";
    const bool ok = s.best_epoch > 0;
    usable += ok;
    kv.set(p + "status", std::string(s.diverged ? (ok ? "diverged-kept-best" : "diverged") : "ok"));
    kv.set(p + "seed", s.seed);
    kv.set(p + "best_epoch", s.best_epoch);
    if (ok) kv.set(p + "best_val_loss", s.best_val_loss);
    if (!s.message.empty()) kv.set(p + "message", s.message);
  }
  kv.save(opt.out / "ensemble.txt");
  if (usable == 0) throw NumericalError("every ensemble member diverged before its first checkpoint");
  return status;
}

Ensemble load_ensemble(const fs::path& dir) {
  const auto kv = KeyValueFile::load(dir / "ensemble.txt");
  if (kv.get("format") != "povmnet-ensemble") throw DataError("not an ensemble manifest: " + dir.string());
  Ensemble e;
  e.label = parse_label_kind(kv.get("label"));
  e.n_sites = static_cast<int>(kv.get_int("n_sites"));
  e.domain.lo = parse_double_list(kv.get("domain.lo"));
  e.domain.hi = parse_double_list(kv.get("domain.hi"));
  const auto n = kv.get_int("n_members");
  for (std::int64_t m = 0; m < n; ++m) {
    if (kv.get_int("member." + std::to_string(m) + ".best_epoch") <= 0) continue;
    e.members.push_back(neural::read_checkpoint(dir / member_dir(static_cast<int>(m)) / "checkpoint"));
  }
  if (e.members.empty()) throw DataError("ensemble has no usable members: " + dir.string());
  return e;
}

std::vector<EvalPoint> evaluate_ensemble(const Ensemble& ensemble, const Dataset& data) {
  if (ensemble.members.empty()) throw std::invalid_argument("evaluate: empty ensemble");
  if (data.system.n_sites != ensemble.n_sites)
    throw DimensionError("evaluate: model trained on N=" + std::to_string(ensemble.n_sites) + " but data has N=" +
                         std::to_string(data.system.n_sites));
  const std::size_t col = data.label_index(ensemble.label);
  std::vector<neural::ModelParams> params;
  for (const auto& c : ensemble.members) params.push_back(c.params);

  std::vector<std::vector<EvalPoint>> per_record(data.records.size());
  parallel_for(data.records.size(), worker_count(), [&](std::size_t r) {
    const auto& rec = data.records[r];
    const bool id = ensemble.domain.contains(rec.params);
    for (std::size_t b = 0; b < rec.batches.size(); ++b) {
      const auto pred = neural::ensemble_predict(params, rec.batches[b]);
      per_record[r].push_back({rec.params, static_cast<int>(b), rec.labels[col], pred.mean, pred.sigma, id});
    }
  });
  std::vector<EvalPoint> out;
  for (auto& v : per_record) out.insert(out.end(), v.begin(), v.end());
  return out;
}

MetricsReport cmd_evaluate(const EvaluateOptions& opt) {
  const auto ensemble = load_ensemble(opt.model);
  const auto data = read_dataset(opt.data);
  const auto points = evaluate_ensemble(ensemble, data);
  prepare_dir(opt.out);
  write_points_csv(points, param_names(data.kind), opt.out / "points.csv");
  const auto report = compute_metrics(points);
  write_metrics(report, opt.out / "metrics.txt");

  KeyValueFile kv;
  kv.set("command", std::string("evaluate"));
  kv.set("model", fs::absolute(opt.model).string());
  kv.set("data", fs::absolute(opt.data).string());
  kv.set("n_members", static_cast<std::uint64_t>(ensemble.members.size()));
  kv.set("label", to_string(ensemble.label));
  kv.save(opt.out / "config.txt");
  return report;
}

std::vector<BaselineRow> cmd_baseline(const BaselineOptions& opt) {
  auto cfg = baseline_preset(opt.preset, opt.seed);
  if (opt.n_unitaries) cfg.n_unitaries = *opt.n_unitaries;
  if (opt.n_measurements) cfg.n_measurements = *opt.n_measurements;
  cfg.validate();
  auto grid = unitary_preset("fig2-eval", opt.scale, opt.seed);
  if (opt.n_sites) grid.system.n_sites = *opt.n_sites;
  if (opt.n_states) grid.n_states = *opt.n_states;
  if (opt.t_max) grid.t_max = *opt.t_max;
  grid.validate();
  prepare_dir(opt.out);

  const auto times = grid.times();
  const SpectralPropagator prop(build_tfim_hamiltonian(grid.system));
  const auto psi0 = initial_plus_state(grid.system);
  const auto part = Bipartition::half_chain(grid.system.n_sites);
  std::vector<BaselineRow> rows(times.size());
  parallel_for(times.size(), worker_count(), [&](std::size_t i) {
    const auto psi = prop.evolve(psi0, times[i]);
    BaselineConfig c = cfg;
    c.seed = derive_seed(opt.seed, {0x4255UL, i});
    auto& row = rows[i];
    row.time = times[i];
    row.label = half_chain_entropy(psi);
    row.estimate = run_randomized_protocol(psi, part, c);
    row.hce = hce_from_purity(row.estimate.purity);
    if (row.hce) row.hce_std_error = row.estimate.std_error / row.estimate.purity;
  });

  auto csv = open_out(opt.out / "baseline.csv");
  csv << "t_over_h,label_nats,purity,purity_se,hce_nats,hce_se_nats,physical\n";
  for (const auto& r : rows) {
    csv << format_double(r.time) << ',' << format_double(r.label) << ',' << format_double(r.estimate.purity) << ','
        << format_double(r.estimate.std_error) << ',' << (r.hce ? format_double(*r.hce) : "") << ','
        << (r.hce ? format_double(r.hce_std_error) : "") << ',' << (r.hce ? 1 : 0) << '\n';
  }

  KeyValueFile kv;
  kv.set("command", std::string("baseline"));
  kv.set("preset", opt.preset);
  kv.set("scale", to_string(opt.scale));
  kv.set("seed", opt.seed);
  put_system(kv, grid.system);
  kv.set("n_unitaries", cfg.n_unitaries);
  kv.set("n_measurements", cfg.n_measurements);
  kv.set("total_measurements", cfg.total_measurements());
  kv.set("n_states", grid.n_states);
  kv.set("t_min", grid.t_min);
  kv.set("t_max", grid.t_max);
  kv.save(opt.out / "config.txt");
  return rows;
}

MetricsReport cmd_metrics(const MetricsOptions& opt) {
  const auto points = read_points_csv(opt.points);
  const auto report = compute_metrics(points);
  if (opt.out) {
    if (opt.out->has_parent_path()) fs::create_directories(opt.out->parent_path());
    write_metrics(report, *opt.out);
  }
  return report;
}

}  // namespace povmnet::bench
