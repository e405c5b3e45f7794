#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sigattack/attack.hpp"
#include "sigattack/audit.hpp"
#include "sigattack/config.hpp"
#include "sigattack/harness.hpp"
#include "sigattack/surrogate.hpp"

namespace fs = std::filesystem;
using namespace sigattack;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "key = value configuration file");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--duration", c.duration, "simulated hours");
  cmd->add_option("--out", c.out, "output directory");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig config = c.config_path.empty() ? ScenarioConfig{} : load_config(c.config_path);
  if (c.seed) config.seed = *c.seed;
  if (c.duration) config.duration_h = *c.duration;
  return config;
}

fs::path prepare(const std::string& dir) {
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << l << '\n';
}

void write_run(const fs::path& dir, const std::string& stem, const RunResult& run) {
  write_lines(dir / (stem + ".events.log"), run.events);
  if (!run.attacks.empty()) write_lines(dir / (stem + ".attacks.log"), run.attacks);
  auto audit = open_out(dir / (stem + ".audit.log"));
  write_audit_log(audit, run.audit);
  for (const auto& v : run.invariant_violations) std::cerr << "invariant: " << v << '\n';
}

SurrogateModel load_model(const std::string& path) {
  auto in = open_in(path);
  return SurrogateModel::load(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop signal control simulator with surrogate learning and falsified-BSM attacks"};
  app.require_subcommand(1);

  Common sim_opts;
  bool with_trajectories = false;
  auto* simulate = app.add_subcommand("simulate", "run the target controller without attack");
  add_common(simulate, sim_opts);
  simulate->add_flag("--trajectories", with_trajectories, "also write every BSM of the run");

  Common train_opts;
  std::vector<std::string> train_features;
  auto* train = app.add_subcommand("train", "training campaign: audit log, feature selection, surrogate");
  add_common(train, train_opts);
  train->add_option("--features", train_features, "train on these features instead of the selected ones")
      ->delimiter(',');

  Common sel_opts;
  std::string sel_audit;
  auto* select = app.add_subcommand("select-features", "forward feature selection on an audit log");
  add_common(select, sel_opts);
  select->add_option("--audit", sel_audit, "audit log")->required();

  Common atk_opts;
  std::string atk_model, atk_audit, atk_mode = "eta";
  std::optional<int> atk_budget;
  auto* attack = app.add_subcommand("attack", "solve the attack offline for every record of an audit log");
  add_common(attack, atk_opts);
  attack->add_option("--model", atk_model, "trained surrogate")->required();
  attack->add_option("--audit", atk_audit, "audit log")->required();
  attack->add_option("--attack", atk_mode, "eta or nav");
  attack->add_option("--budget", atk_budget, "NAV attack budget");

  Common exp_opts;
  std::string exp_model, exp_attack;
  std::vector<std::string> exp_ids{"I", "II", "III", "IV"};
  std::optional<int> exp_reps, exp_budget;
  auto* experiment = app.add_subcommand("experiment", "run experiments I-IV on shared arrivals");
  add_common(experiment, exp_opts);
  experiment->add_option("--model", exp_model, "trained surrogate (needed by II, III, IV)");
  experiment->add_option("--ids", exp_ids, "experiment ids")->delimiter(',');
  experiment->add_option("--attack", exp_attack, "run only experiment I plus this attack (eta or nav)");
  experiment->add_option("--budget", exp_budget, "NAV attack budget");
  experiment->add_option("--replications", exp_reps, "replications (seeds seed..seed+n-1)");

  Common rep_opts;
  std::vector<std::string> rep_inputs;
  auto* rep = app.add_subcommand("report", "comparison table from delay summaries");
  add_common(rep, rep_opts);
  rep->add_option("summaries", rep_inputs, "summary csv files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const auto config = load(sim_opts);
      const auto dir = prepare(sim_opts.out);
      auto spec = ExperimentSpec::preset("I", config);
      std::optional<std::ofstream> traj;
      if (with_trajectories) traj = open_out(dir / "trajectories.log");
      const auto run = run_closed_loop(config, spec, nullptr, traj ? &*traj : nullptr);
      write_run(dir, "simulate", run);
      auto csv = open_out(dir / "summary.csv");
      csv << summary_csv_header() << '\n' << to_csv(summarize(run)) << '\n';
      std::cout << fmt::format("{} optimizations, mean barrier {:.2f} s, total delay {:.2f} veh-h, invariants {}\n",
                               run.optimizations, run.mean_barrier(), run.total_delay / 3600.0,
                               run.invariants_ok ? "ok" : "VIOLATED");
      return run.invariants_ok ? 0 : 2;
    }
    if (*train) {
      const auto config = load(train_opts);
      const auto dir = prepare(train_opts.out);
      const double hours = train_opts.duration ? *train_opts.duration : config.training_hours;
      std::vector<FeatureKind> kinds;
      for (const auto& f : train_features) kinds.push_back(feature_from_name(f));
      const auto campaign = run_training_campaign(config, config.seed, hours, kinds);
      write_run(dir, "train", campaign.run);
      open_out(dir / "surrogate.model") << campaign.model.save();
      open_out(dir / "features.txt") << campaign.selection.table();
      std::cout << campaign.selection.table();
      std::cout << fmt::format("{} optimizations, mean barrier {:.2f} s\n", campaign.run.optimizations,
                               campaign.run.mean_barrier());
      return 0;
    }
    if (*select) {
      const auto config = load(sel_opts);
      auto in = open_in(sel_audit);
      const auto records = read_audit_log(in);
      const auto sel = select_features(records, config, config.seed);
      const auto dir = prepare(sel_opts.out);
      open_out(dir / "features.txt") << sel.table();
      std::cout << sel.table();
      return 0;
    }
    if (*attack) {
      auto config = load(atk_opts);
      if (atk_budget) config.budget = *atk_budget;
      const auto mode = attack_from_name(atk_mode);
      if (mode == AttackMode::none) throw std::invalid_argument("--attack must be eta or nav");
      const auto model = load_model(atk_model);
      auto in = open_in(atk_audit);
      const auto records = read_audit_log(in);
      const auto dir = prepare(atk_opts.out);
      auto out = open_out(dir / "offline_attacks.log");
      double total = 0.0;
      for (const auto& r : records) {
        const auto o = mode == AttackMode::eta ? solve_p2(r.features, model, model.candidates)
                                               : solve_p3(r.features, model, config.budget);
        const auto& a = o.action;
        out << fmt::format("{} delta {} {} {} {} tau {} {} {} {} dissimilarity {}\n", r.tick,
                           a.delta[0], a.delta[1], a.delta[2], a.delta[3], a.tau[0], a.tau[1],
                           a.tau[2], a.tau[3], o.dissimilarity);
        total += o.dissimilarity;
      }
      std::cout << fmt::format("{} records, mean predicted dissimilarity {:.3f} s\n", records.size(),
                               records.empty() ? 0.0 : total / static_cast<double>(records.size()));
      return 0;
    }
    if (*experiment) {
      auto config = load(exp_opts);
      if (exp_budget) config.budget = *exp_budget;
      if (!exp_attack.empty()) {
        exp_ids = {"I", attack_from_name(exp_attack) == AttackMode::nav ? "IV" : "III"};
      }
      std::optional<SurrogateModel> model;
      if (!exp_model.empty()) model = load_model(exp_model);
      const auto dir = prepare(exp_opts.out);
      const int reps = exp_reps ? *exp_reps : config.replications;
      const auto set = run_experiments(config, exp_ids, model ? &*model : nullptr, reps, config.seed,
                                       config.duration_h);
      auto csv = open_out(dir / "summary.csv");
      csv << summary_csv_header() << '\n';
      for (std::size_t i = 0; i < set.runs.size(); ++i) {
        const auto& run = set.runs[i];
        csv << to_csv(set.summaries[i]) << '\n';
        write_run(dir, fmt::format("{}-seed{}", run.spec.id, run.spec.seed), run);
      }
      const auto r = report(set.summaries);
      open_out(dir / "report.txt") << r.table;
      open_out(dir / "plot_data.csv") << r.plot_data;
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      for (const int m : set.arrival_mismatches)
        std::cerr << "error: replication " << m << " saw different arrivals across experiments\n";
      std::cout << r.table;
      return set.arrival_mismatches.empty() ? 0 : 2;
    }
    if (*rep) {
      std::vector<DelaySummary> all;
      for (const auto& path : rep_inputs) {
        auto in = open_in(path);
        const auto s = read_summaries_csv(in);
        all.insert(all.end(), s.begin(), s.end());
      }
      const auto r = report(all);
      const auto dir = prepare(rep_opts.out);
      open_out(dir / "report.txt") << r.table;
      open_out(dir / "plot_data.csv") << r.plot_data;
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << r.table;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
