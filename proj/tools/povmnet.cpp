#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "povmnet/bench/commands.hpp"
#include "povmnet/errors.hpp"

using namespace povmnet;
using namespace povmnet::bench;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string scale_text = "paper";
std::string sampler_text = "mcmc";

void add_common(CLI::App* cmd, std::uint64_t& seed, std::filesystem::path& out) {
  cmd->add_option("--seed", seed, "Base random seed")->capture_default_str();
  cmd->add_option("--out", out, "Output directory")->required();
}

void add_scale(CLI::App* cmd) {
  cmd->add_option("--scale", scale_text, "paper or desk")->check(CLI::IsMember({"paper", "desk"}))->capture_default_str();
}

void add_sampler(CLI::App* cmd) {
  cmd->add_option("--sampler", sampler_text, "exact or mcmc")->check(CLI::IsMember({"exact", "mcmc"}))->capture_default_str();
}

void add_system(CLI::App* cmd, SystemConfig& s, NoiseRates& r) {
  cmd->add_option("--sites", s.n_sites, "Chain length N")->capture_default_str();
  cmd->add_option("--coupling", s.coupling, "Ising coupling J")->capture_default_str();
  cmd->add_option("--field", s.field, "Transverse field h")->capture_default_str();
  cmd->add_option("--gamma-z", r.dephasing, "Dephasing rate")->capture_default_str();
  cmd->add_option("--gamma-minus", r.decay, "Decay rate")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"povmnet: entanglement estimation from POVM measurement data"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Evolve the TFIM quench and write HCE/MI over time");
  add_system(c_sim, sim.system, sim.rates);
  c_sim->add_option("--t-min", sim.t_min)->capture_default_str();
  c_sim->add_option("--t-max", sim.t_max)->capture_default_str();
  c_sim->add_option("--points", sim.n_points)->capture_default_str();
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  SampleOptions smp;
  auto* c_smp = app.add_subcommand("sample", "Draw Pauli-4 POVM outcomes from the evolved state");
  add_system(c_smp, smp.system, smp.rates);
  c_smp->add_option("--time", smp.time, "ht")->capture_default_str();
  c_smp->add_option("--samples", smp.n_samples)->capture_default_str();
  add_sampler(c_smp);
  add_common(c_smp, smp.seed, smp.out);

  DatasetOptions ds;
  auto* c_ds = app.add_subcommand("make-dataset", "Generate a labeled dataset from a preset");
  c_ds->add_option("--preset", ds.preset)->required()->check(CLI::IsMember(dataset_preset_names()));
  add_scale(c_ds);
  add_sampler(c_ds);
  c_ds->add_option("--sites", ds.n_sites, "Override N");
  c_ds->add_option("--records", ds.n_records, "Override N_S (truncates noise grids)");
  c_ds->add_option("--batches", ds.n_batches, "Override N_B");
  c_ds->add_option("--samples", ds.n_samples, "Override N_M");
  add_common(c_ds, ds.seed, ds.out);

  TrainOptions tr;
  auto* c_tr = app.add_subcommand("train", "Train one network or an ensemble");
  c_tr->add_option("--preset", tr.preset)->required()->check(CLI::IsMember({"fig1", "fig2", "fig3"}));
  add_scale(c_tr);
  c_tr->add_option("--train", tr.train_data, "Training dataset directory")->required();
  c_tr->add_option("--val", tr.val_data, "Validation dataset directory")->required();
  c_tr->add_option("--epochs", tr.epochs, "Override epoch count");
  c_tr->add_option("--ensemble", tr.ensemble, "Override ensemble size");
  c_tr->add_flag("--verbose", tr.verbose, "Log losses every 10 epochs");
  add_common(c_tr, tr.seed, tr.out);

  EvaluateOptions ev;
  auto* c_ev = app.add_subcommand("evaluate", "Score an ensemble on a dataset");
  c_ev->add_option("--model", ev.model, "Directory written by train")->required();
  c_ev->add_option("--data", ev.data, "Dataset directory")->required();
  c_ev->add_option("--out", ev.out, "Output directory")->required();

  BaselineOptions bl;
  auto* c_bl = app.add_subcommand("baseline", "Randomized-measurement HCE estimates on the fig2-eval times");
  c_bl->add_option("--preset", bl.preset)->required()->check(CLI::IsMember({"fig2-a", "fig2-b"}));
  add_scale(c_bl);
  c_bl->add_option("--unitaries", bl.n_unitaries, "Override N_U");
  c_bl->add_option("--measurements", bl.n_measurements, "Override N_M per unitary");
  c_bl->add_option("--sites", bl.n_sites, "Override N");
  c_bl->add_option("--states", bl.n_states, "Override number of times");
  c_bl->add_option("--t-max", bl.t_max, "Override end time");
  add_common(c_bl, bl.seed, bl.out);

  MetricsOptions mt;
  auto* c_mt = app.add_subcommand("metrics", "Recompute metrics from a points CSV");
  c_mt->add_option("--points", mt.points)->required();
  c_mt->add_option("--out", mt.out, "Write metrics to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const Scale scale = parse_scale(scale_text);
    const SamplerKind sampler = parse_sampler_kind(sampler_text);
    if (*c_sim) {
      cmd_simulate(sim);
    } else if (*c_smp) {
      smp.sampler = sampler;
      cmd_sample(smp);
    } else if (*c_ds) {
      ds.scale = scale;
      ds.sampler = sampler;
      const auto d = cmd_make_dataset(ds);
      std::cout << "wrote " << d.records.size() << " records to " << ds.out << '\n';
    } else if (*c_tr) {
      tr.scale = scale;
      int failed = 0;
      for (const auto& s : cmd_train(tr)) {
        std::cout << "member " << s.member << ": " << (s.diverged ? "diverged" : "ok") << " best_epoch=" << s.best_epoch
                  << " val_loss=" << s.best_val_loss << (s.message.empty() ? "" : " (" + s.message + ")") << '\n';
        failed += s.diverged;
      }
      if (failed) return kNumeric;
    } else if (*c_ev) {
      std::cout << format_metrics(cmd_evaluate(ev));
    } else if (*c_bl) {
      bl.scale = scale;
      const auto rows = cmd_baseline(bl);
      std::size_t bad = 0;
      for (const auto& r : rows) bad += !r.hce;
      std::cout << "wrote " << rows.size() << " states (" << bad << " non-physical) to " << bl.out << '\n';
    } else if (*c_mt) {
      std::cout << format_metrics(cmd_metrics(mt));
    }
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::length_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kOk;
}
