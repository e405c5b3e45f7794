#include "sigattack/harness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "sigattack/controller.hpp"
#include "sigattack/features.hpp"
#include "sigattack/util.hpp"

namespace sigattack {

ExperimentSpec ExperimentSpec::preset(std::string_view id, const ScenarioConfig& config) {
  ExperimentSpec s;
  s.id = std::string(id);
  s.budget = config.budget;
  s.duration_h = config.duration_h;
  s.seed = config.seed;
  if (id == "I") {
  } else if (id == "II") {
    s.controller = ControllerMode::surrogate;
  } else if (id == "III") {
    s.attack = AttackMode::eta;
  } else if (id == "IV") {
    s.attack = AttackMode::nav;
  } else {
    throw std::invalid_argument(fmt::format("unknown experiment '{}' (expected I, II, III or IV)", id));
  }
  return s;
}

// --- invariant monitor ------------------------------------------------------------------

InvariantMonitor::InvariantMonitor(const ScenarioConfig& config)
    : green_min_(config.ticks(config.g_min)),
      green_max_(config.ticks(config.g_max)),
      transition_(config.ticks(config.transition)),
      yellow_(config.ticks(config.transition - config.red_clearance)) {
  previous_.fill(SignalState::red);
}

void InvariantMonitor::fail(std::string message) {
  ++violation_count_;
  if (violations_.size() < 20) violations_.push_back(std::move(message));
}

void InvariantMonitor::observe_signals(Tick t, const std::array<SignalState, 8>& states) {
  for (int a = 0; a < 8; ++a) {
    if (states[a] != SignalState::green) continue;
    for (int b = a + 1; b < 8; ++b) {
      ++checks_;
      if (states[b] == SignalState::green && !compatible(kAllPhases[a], kAllPhases[b]))
        fail(fmt::format("tick {}: conflicting phases {} and {} both green", t, a + 1, b + 1));
    }
  }
  for (int p = 0; p < 8; ++p) {
    const auto before = previous_[p];
    const auto now = states[p];
    const int ring = index(kAllPhases[p].ring());
    if (first_tick_ || before == now) continue;
    ++checks_;
    if (now == SignalState::green) {
      if (before != SignalState::red)
        fail(fmt::format("tick {}: phase {} turned green from yellow", t, p + 1));
      if (const auto end = ring_green_end_[ring]; end && t - *end != transition_)
        fail(fmt::format("tick {}: ring {} transition lasted {} ticks", t, ring + 1, t - *end));
      green_start_[p] = t;
    } else if (now == SignalState::yellow) {
      if (before != SignalState::green)
        fail(fmt::format("tick {}: phase {} turned yellow from red", t, p + 1));
      if (const auto start = green_start_[p]) {
        const Tick length = t - *start;
        if (length < green_min_ || length > green_max_)
          fail(fmt::format("tick {}: phase {} green lasted {} ticks", t, p + 1, length));
      }
      ring_green_end_[ring] = t;
      yellow_start_[p] = t;
    } else {
      if (before != SignalState::yellow)
        fail(fmt::format("tick {}: phase {} went red without yellow", t, p + 1));
      if (const auto start = yellow_start_[p]; start && t - *start != yellow_)
        fail(fmt::format("tick {}: phase {} yellow lasted {} ticks", t, p + 1, t - *start));
    }
  }
  first_tick_ = false;
  previous_ = states;
}

void InvariantMonitor::observe_world(const World& world) {
  ++checks_;
  const std::size_t present = world.departed().size() + world.in_network();
  if (present != world.spawned())
    fail(fmt::format("tick {}: {} vehicles spawned but {} accounted for", world.now(),
                     world.spawned(), present));
  const auto& departed = world.departed();
  for (; departed_seen_ < departed.size(); ++departed_seen_) {
    const auto& v = departed[departed_seen_];
    const int m = v.movement.index();
    ++checks_;
    if (v.id <= last_departed_id_[m] || !v.exit_time || *v.exit_time < last_exit_[m])
      fail(fmt::format("tick {}: vehicle {} left movement {} out of order", world.now(), v.id, m + 1));
    last_departed_id_[m] = v.id;
    if (v.exit_time) last_exit_[m] = *v.exit_time;
  }
  for (const auto p : kAllPhases) {
    const auto& lane = world.lane(p);
    for (std::size_t i = 1; i < lane.size(); ++i) {
      ++checks_;
      if (lane[i].position <= lane[i - 1].position || lane[i].id <= lane[i - 1].id)
        fail(fmt::format("tick {}: lane {} order broken at vehicle {}", world.now(), p.value(),
                         lane[i].id));
    }
  }
}

// --- closed loop ---------------------------------------------------------------------------

TimingPlan to_tick_grid(const TimingPlan& plan, const ScenarioConfig& config) {
  const double hz = config.sim_hz;
  const double lo = std::ceil(config.g_min * hz - 1e-9);
  const double hi = std::floor(config.g_max * hz + 1e-9);
  const double total = std::clamp(std::round((plan.g_d1 + plan.g_g1) * hz), 2 * lo, 2 * hi);
  TimingPlan out = plan;
  const std::array<double, 2> leads{plan.g_d1, plan.g_d2};
  std::array<double, 2> snapped{};
  for (int r = 0; r < 2; ++r)
    snapped[r] = std::clamp(std::round(leads[r] * hz), std::max(lo, total - hi), std::min(hi, total - lo));
  out.g_d1 = snapped[0] / hz;
  out.g_d2 = snapped[1] / hz;
  out.g_g1 = (total - snapped[0]) / hz;
  out.g_g2 = (total - snapped[1]) / hz;
  return out;
}

namespace {

std::string plan_fields(const TimingPlan& p) {
  return fmt::format("{} {}{} {} {} {} {}", barrier_code(p.barrier), p.left_leads[0] ? 'L' : 'T',
                     p.left_leads[1] ? 'L' : 'T', p.g_d1, p.g_d2, p.g_g1, p.g_g2);
}

/// [t_d1, t_d2, t_g1, t_g2, n_d1, n_d2, n_g1, n_g2] of a feature vector for given role slots.
std::string attack_coordinates(const FeatureVector& fv, const std::array<int, 4>& slots) {
  std::string out;
  for (const auto kind : {FeatureKind::eta, FeatureKind::nav})
    for (const int s : slots) out += fmt::format(" {}", fv.at(kind, s));
  return out;
}

void write_trajectory(std::ostream& out, const BsmRecord& r) {
  out << fmt::format("T {} {} {} {} {} {}\n", r.tick, r.vehicle_id, r.phase.value(), r.position,
                     r.speed, r.is_falsified ? 1 : 0);
}

constexpr std::uint64_t kFalsifiedIdBase = 1ULL << 62;

}  // namespace

std::uint64_t RunResult::log_digest() const {
  Fnv1a h;
  for (const auto& e : events) {
    h.update(e);
    h.update("\n");
  }
  for (const auto& a : attacks) {
    h.update(a);
    h.update("\n");
  }
  for (const auto& r : audit) {
    h.update(format_audit(r));
    h.update("\n");
  }
  return h.digest();
}

RunResult run_closed_loop(const ScenarioConfig& config, const ExperimentSpec& spec,
                          const SurrogateModel* model, std::ostream* trajectories) {
  if (spec.needs_surrogate() && model == nullptr)
    throw std::invalid_argument(fmt::format("experiment {} needs a trained surrogate", spec.id));
  if (spec.duration_h < 0) throw std::invalid_argument("negative run duration");

  World world(config, spec.seed);
  ObservationHistory history(config.fr_window);
  const auto params = FeatureParams::from(config);
  const TwoLevelOptimizer optimizer(config);
  InvariantMonitor monitor(config);
  RunResult result;
  result.spec = spec;

  const Tick end = config.ticks(spec.duration_h * 3600.0);
  Barrier current = Barrier::major;
  std::uint64_t next_falsified = kFalsifiedIdBase;

  auto genuine = world.emit_bsms();
  history.observe(genuine, world.time());
  while (world.now() < end) {
    const Tick start = world.now();
    const double t = world.time();
    const auto xo = extract(genuine, history, current, t, params);

    std::vector<BsmRecord> heard = genuine;
    std::optional<AttackOutcome> outcome;
    Injection injection;
    if (spec.attack != AttackMode::none) {
      outcome = spec.attack == AttackMode::eta ? solve_p2(xo, *model, model->candidates)
                                               : solve_p3(xo, *model, spec.budget);
      injection = synthesize_falsified_bsms(outcome->action, current, start, config, next_falsified);
      next_falsified += static_cast<std::uint64_t>(injection.current.size());
      heard.insert(heard.end(), injection.current.begin(), injection.current.end());
    }

    const Snapshot honest = take_snapshot(genuine, t, config.floor_speed);
    TimingPlan plan;
    int length1 = 0, length2 = 0;
    double cost = 0.0;
    if (spec.controller == ControllerMode::target) {
      const auto solved = optimizer.upper_level(
          outcome ? take_snapshot(heard, t, config.floor_speed) : honest, current);
      plan = solved.stage1;
      length1 = solved.length1;
      length2 = solved.length2;
      cost = solved.cost;
    } else {
      plan = to_tick_grid(model->predict_plan(xo), config);
      length1 = static_cast<int>(std::lround(plan.barrier_length(config.transition)));
    }
    const auto verdict = validate_plan(plan, config);
    if (!verdict.valid())
      throw std::logic_error(fmt::format("tick {}: controller produced an invalid plan: {}", start,
                                         verdict.first()));

    AuditRecord rec;
    rec.tick = start;
    rec.plan = plan;
    rec.length1 = length1;
    rec.length2 = length2;
    rec.predicted_cost = cost;
    rec.features = xo;
    const auto slot_phases = phases_of(current);
    for (int s = 0; s < 4; ++s) {
      for (const auto& e : honest.by_phase[slot_phases[s].index()]) rec.slot_etas[s].push_back(e.eta);
      std::sort(rec.slot_etas[s].begin(), rec.slot_etas[s].end());
    }
    result.audit.push_back(rec);
    result.events.push_back(fmt::format("O {} {} {} {} {}", start, plan_fields(plan), length1,
                                        length2, cost));

    if (outcome) {
      const auto counterfactual = spec.controller == ControllerMode::target
                                      ? optimizer.upper_level(honest, current).stage1
                                      : plan;
      const auto realized = extract(heard, history, current, t, params);
      double residual = 0.0;
      for (int c = 0; c < kFeatureColumns; ++c)
        residual = std::max(residual, std::abs(realized.flat()[c] - outcome->attacked.flat()[c]));
      const auto& a = outcome->action;
      std::string line = fmt::format("K {} {} xo{} delta {} {} {} {} tau {} {} {} {} xa{} predicted {} "
                                     "realized {} residual {}",
                                     start, attack_name(a.mode), attack_coordinates(xo, a.slots),
                                     a.delta[0], a.delta[1], a.delta[2], a.delta[3], a.tau[0],
                                     a.tau[1], a.tau[2], a.tau[3],
                                     attack_coordinates(outcome->attacked, a.slots),
                                     outcome->dissimilarity, dissimilarity(plan, counterfactual),
                                     residual);
      for (const auto& note : injection.notes) line += " | " + note;
      result.attacks.push_back(std::move(line));
      if (trajectories)
        for (const auto& r : injection.trajectory) write_trajectory(*trajectories, r);
    }

    ++result.optimizations;
    result.barrier_seconds += plan.barrier_length(config.transition);

    const SignalSchedule schedule(plan, start, config);
    for (Tick k = start; k < schedule.end() && world.now() < end; ++k) {
      const auto states = schedule.states_at(k);
      monitor.observe_signals(k, states);
      world.step(states);
      monitor.observe_world(world);
      genuine = world.emit_bsms();
      history.observe(genuine, world.time());
      if (trajectories)
        for (const auto& r : genuine) write_trajectory(*trajectories, r);
    }
    current = other(current);
  }

  result.total_delay = world.total_delay();
  for (const auto& v : world.departed())
    result.vehicle_delays.push_back(*v.exit_time - v.entry_time - v.free_flow_travel_time);
  result.spawned = world.spawned();
  result.departed = world.departed().size();
  result.in_network = world.in_network();
  result.arrival_hash = world.arrival_hash();
  result.invariants_ok = monitor.ok();
  result.invariant_checks = monitor.checks();
  result.invariant_violations = monitor.violations();
  result.events.push_back(fmt::format("S {} spawned {} departed {} in_network {} delay {} arrivals {:016x}",
                                      world.now(), result.spawned, result.departed,
                                      result.in_network, result.total_delay, result.arrival_hash));
  return result;
}

// --- summaries and reports -------------------------------------------------------------------

DelaySummary summarize(const RunResult& run) {
  DelaySummary s;
  s.id = run.spec.id;
  s.seed = run.spec.seed;
  s.duration_h = run.spec.duration_h;
  s.total_delay = run.total_delay;
  s.vehicles = run.departed;
  s.mean_delay = run.departed ? std::accumulate(run.vehicle_delays.begin(), run.vehicle_delays.end(), 0.0) /
                                    static_cast<double>(run.departed)
                              : 0.0;
  s.optimizations = run.optimizations;
  s.mean_barrier = run.mean_barrier();
  s.arrival_hash = run.arrival_hash;
  s.invariants_ok = run.invariants_ok;
  return s;
}

std::string summary_csv_header() {
  return "experiment,seed,duration_h,total_delay_s,vehicles,mean_delay_s,optimizations,"
         "mean_barrier_s,arrival_hash,invariants_ok";
}

std::string to_csv(const DelaySummary& s) {
  return fmt::format("{},{},{},{},{},{},{},{},{:016x},{}", s.id, s.seed, s.duration_h, s.total_delay,
                     s.vehicles, s.mean_delay, s.optimizations, s.mean_barrier, s.arrival_hash,
                     s.invariants_ok ? 1 : 0);
}

std::vector<DelaySummary> read_summaries_csv(std::istream& in) {
  std::vector<DelaySummary> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line.rfind("experiment,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 10) throw std::runtime_error(fmt::format("summary line {}: expected 10 fields", number));
    try {
      DelaySummary s;
      s.id = f[0];
      s.seed = std::stoull(f[1]);
      s.duration_h = std::stod(f[2]);
      s.total_delay = std::stod(f[3]);
      s.vehicles = std::stoull(f[4]);
      s.mean_delay = std::stod(f[5]);
      s.optimizations = std::stoull(f[6]);
      s.mean_barrier = std::stod(f[7]);
      s.arrival_hash = std::stoull(f[8], nullptr, 16);
      s.invariants_ok = f[9] == "1";
      out.push_back(s);
    } catch (const std::logic_error&) {
      throw std::runtime_error(fmt::format("summary line {}: malformed number", number));
    }
  }
  return out;
}

Report report(const std::vector<DelaySummary>& summaries) {
  if (summaries.empty()) throw std::invalid_argument("report needs at least one summary");
  std::map<std::string, std::pair<double, int>> by_id;
  for (const auto& s : summaries) {
    auto& [sum, n] = by_id[s.id];
    sum += s.total_delay;
    ++n;
  }
  std::vector<std::string> order;
  for (const char* id : {"I", "II", "III", "IV"})
    if (by_id.contains(id)) order.emplace_back(id);
  for (const auto& [id, _] : by_id)
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);

  Report r;
  const bool has_benchmark = by_id.contains("I");
  if (!has_benchmark) r.warnings.push_back("no experiment I among the summaries; percentages omitted");
  const double benchmark = has_benchmark ? by_id["I"].first / by_id["I"].second : 0.0;
  const bool compare = has_benchmark && by_id.size() > 1;
  r.table = compare ? fmt::format("{:<12}{:>6}{:>20}{:>12}\n", "experiment", "runs",
                                        "mean delay (veh-h)", "vs I")
                          : fmt::format("{:<12}{:>6}{:>20}\n", "experiment", "runs",
                                        "mean delay (veh-h)");
  r.plot_data = "experiment,total_delay_s\n";
  for (const auto& id : order) {
    const auto [sum, n] = by_id[id];
    const double mean = sum / n;
    r.plot_data += fmt::format("{},{}\n", id, mean);
    if (compare) {
      r.table += fmt::format("{:<12}{:>6}{:>20.2f}{:>+11.2f}%\n", id, n, mean / 3600.0,
                             100.0 * (mean - benchmark) / benchmark);
    } else {
      r.table += fmt::format("{:<12}{:>6}{:>20.2f}\n", id, n, mean / 3600.0);
    }
  }
  return r;
}

// --- campaigns -------------------------------------------------------------------------------

TrainingCampaign run_training_campaign(const ScenarioConfig& config, std::uint64_t seed,
                                       double hours, const std::vector<FeatureKind>& features) {
  ExperimentSpec spec = ExperimentSpec::preset("I", config);
  spec.seed = seed;
  spec.duration_h = hours;
  TrainingCampaign c;
  c.run = run_closed_loop(config, spec, nullptr);
  std::size_t with_traffic = 0;
  for (const auto& r : c.run.audit)
    for (const auto& etas : r.slot_etas)
      if (!etas.empty()) {
        ++with_traffic;
        break;
      }
  if (c.run.audit.size() < kMinTrainingRecords || with_traffic < kMinTrainingRecords)
    throw InsufficientData(fmt::format(
        "training run produced {} optimizations, {} of them with traffic; at least {} are needed",
        c.run.audit.size(), with_traffic, kMinTrainingRecords));
  c.selection = select_features(c.run.audit, config, seed);
  c.model = train_surrogate(c.run.audit, features.empty() ? c.selection.critical() : features, config);
  return c;
}

ExperimentSet run_experiments(const ScenarioConfig& config, const std::vector<std::string>& ids,
                              const SurrogateModel* model, int replications,
                              std::uint64_t base_seed, double hours) {
  ExperimentSet set;
  for (int rep = 0; rep < replications; ++rep) {
    std::optional<std::uint64_t> hash;
    bool mismatch = false;
    for (const auto& id : ids) {
      auto spec = ExperimentSpec::preset(id, config);
      spec.seed = base_seed + static_cast<std::uint64_t>(rep);
      spec.duration_h = hours;
      auto run = run_closed_loop(config, spec, model);
      if (hash && *hash != run.arrival_hash) mismatch = true;
      hash = run.arrival_hash;
      set.summaries.push_back(summarize(run));
      set.runs.push_back(std::move(run));
    }
    if (mismatch) set.arrival_mismatches.push_back(rep);
  }
  return set;
}

}  // namespace sigattack
