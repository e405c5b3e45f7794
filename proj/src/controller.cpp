#include "sigattack/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace sigattack {

Snapshot take_snapshot(std::span<const BsmRecord> bsms, double time, double floor_speed) {
  Snapshot snap;
  snap.time = time;
  for (const auto& b : bsms) {
    snap.by_phase[b.phase.index()].push_back(
        {b.vehicle_id, eta_of(b.position, b.speed, floor_speed), b.position, b.speed});
  }
  return snap;
}

double phase_cost(std::span<const double> sorted_etas, double green_start, double green_end,
                  double horizon, double headway, Objective objective) {
  double cost = 0.0;
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sorted_etas.size(); ++i) {
    const double eta = sorted_etas[i];
    const double service = std::max({eta, green_start, previous + headway});
    if (service < green_end) {
      if (objective == Objective::delay) cost += service - eta;
      previous = service;
      continue;
    }
    // Discharge is FIFO, so everything behind the first unserved vehicle is unserved too.
    for (std::size_t j = i; j < sorted_etas.size(); ++j) {
      const double e = sorted_etas[j];
      if (e >= horizon) break;
      cost += objective == Objective::delay ? horizon - e : 1.0;
    }
    break;
  }
  return cost;
}

TwoLevelOptimizer::TwoLevelOptimizer(const ScenarioConfig& config)
    : config_(config), objective_(config.objective == "queue" ? Objective::queue : Objective::delay) {}

std::vector<int> TwoLevelOptimizer::barrier_lengths() const {
  std::vector<int> out;
  const int lo = static_cast<int>(std::ceil(config_.min_barrier_length() - 1e-9));
  const int hi = static_cast<int>(std::floor(config_.max_barrier_length() + 1e-9));
  for (int l = lo; l <= hi; ++l) out.push_back(l);
  return out;
}

TwoLevelOptimizer::RingChoice TwoLevelOptimizer::best_ring(
    const std::array<std::vector<double>, 8>& etas, Barrier barrier, Ring ring, int barrier_length,
    double start, double horizon) const {
  const auto pair = phases_of(barrier, ring);
  const double total_green = barrier_length - 2.0 * config_.transition;
  const double h = config_.saturation_headway;
  RingChoice best;
  bool found = false;
  for (double lead = config_.g_min; lead <= config_.g_max + 1e-9; lead += 1.0) {
    const double lag = total_green - lead;
    if (lag < config_.g_min - 1e-9 || lag > config_.g_max + 1e-9) continue;
    const double lag_start = start + lead + config_.transition;
    for (const bool left_leads : {true, false}) {
      const PhaseId first = left_leads ? pair[0] : pair[1];
      const PhaseId second = left_leads ? pair[1] : pair[0];
      const double cost =
          phase_cost(etas[first.index()], start, start + lead, horizon, h, objective_) +
          phase_cost(etas[second.index()], lag_start, lag_start + lag, horizon, h, objective_);
      if (!found || cost < best.cost) {
        best = {lead, left_leads, cost};
        found = true;
      }
    }
  }
  if (!found) {
    throw std::invalid_argument(
        fmt::format("barrier length {} s admits no green split in [{}, {}] s", barrier_length,
                    config_.g_min, config_.g_max));
  }
  return best;
}

TimingPlan TwoLevelOptimizer::assemble(Barrier barrier, int barrier_length, const RingChoice& r1,
                                       const RingChoice& r2) const {
  const double total_green = barrier_length - 2.0 * config_.transition;
  TimingPlan plan;
  plan.barrier = barrier;
  plan.left_leads = {r1.left_leads, r2.left_leads};
  plan.g_d1 = r1.g_lead;
  plan.g_d2 = r2.g_lead;
  plan.g_g1 = total_green - r1.g_lead;
  plan.g_g2 = total_green - r2.g_lead;
  return plan;
}

namespace {

std::array<std::vector<double>, 8> sorted_etas(const Snapshot& snapshot) {
  std::array<std::vector<double>, 8> etas;
  for (int p = 0; p < 8; ++p) {
    for (const auto& e : snapshot.by_phase[p]) etas[p].push_back(e.eta);
    std::sort(etas[p].begin(), etas[p].end());
  }
  return etas;
}

}  // namespace

LowerLevelResult TwoLevelOptimizer::lower_level(const Snapshot& snapshot, Barrier barrier,
                                                int barrier_length) const {
  return lower_level(snapshot, barrier, barrier_length, 0.0, barrier_length);
}

LowerLevelResult TwoLevelOptimizer::lower_level(const Snapshot& snapshot, Barrier barrier,
                                                int barrier_length, double start,
                                                double horizon) const {
  const auto etas = sorted_etas(snapshot);
  const auto r1 = best_ring(etas, barrier, Ring::one, barrier_length, start, horizon);
  const auto r2 = best_ring(etas, barrier, Ring::two, barrier_length, start, horizon);
  return {assemble(barrier, barrier_length, r1, r2), r1.cost + r2.cost};
}

UpperLevelResult TwoLevelOptimizer::upper_level(const Snapshot& snapshot, Barrier current) const {
  const auto lengths = barrier_lengths();
  return upper_level(snapshot, current, lengths, lengths);
}

UpperLevelResult TwoLevelOptimizer::upper_level(const Snapshot& snapshot, Barrier current,
                                                std::span<const int> lengths1,
                                                std::span<const int> lengths2) const {
  if (lengths1.empty() || lengths2.empty())
    throw std::invalid_argument("upper_level: empty barrier length candidates");
  const auto etas = sorted_etas(snapshot);
  const Barrier next = other(current);
  const double horizon = planning_horizon();

  UpperLevelResult best;
  bool found = false;
  for (const int l1 : lengths1) {
    for (const int l2 : lengths2) {
      const auto a1 = best_ring(etas, current, Ring::one, l1, 0.0, horizon);
      const auto a2 = best_ring(etas, current, Ring::two, l1, 0.0, horizon);
      const auto b1 = best_ring(etas, next, Ring::one, l2, l1, horizon);
      const auto b2 = best_ring(etas, next, Ring::two, l2, l1, horizon);
      const double cost = a1.cost + a2.cost + b1.cost + b2.cost;
      if (!found || cost < best.cost) {
        best.stage1 = assemble(current, l1, a1, a2);
        best.stage2 = assemble(next, l2, b1, b2);
        best.length1 = l1;
        best.length2 = l2;
        best.cost = cost;
        found = true;
      }
    }
  }
  return best;
}

SignalSchedule::SignalSchedule(const TimingPlan& plan, Tick start, const ScenarioConfig& config)
    : plan_(plan), start_(start), hz_(config.sim_hz) {
  const Tick ring_green = config.ticks(plan.g_d1 + plan.g_g1);
  lead_ = {config.ticks(plan.g_d1), config.ticks(plan.g_d2)};
  lag_ = {ring_green - lead_[0], ring_green - lead_[1]};
  transition_ = config.ticks(config.transition);
  red_clearance_ = config.ticks(config.red_clearance);
  length_ = ring_green + 2 * transition_;
}

std::array<SignalState, 8> SignalSchedule::states_at(Tick t) const {
  return spat_at(t).state;
}

SpatRecord SignalSchedule::spat_at(Tick t) const {
  SpatRecord rec;
  rec.tick = t;
  const Tick tau = t - start_;
  const double to_end = static_cast<double>(length_ - tau) / hz_;
  rec.state.fill(SignalState::red);
  rec.remaining.fill(to_end);

  auto interval = [&](PhaseId p, Tick from, Tick green) {
    const Tick green_end = from + green;
    const Tick yellow_end = green_end + transition_ - red_clearance_;
    auto& state = rec.state[p.index()];
    auto& remaining = rec.remaining[p.index()];
    if (tau < from) {
      state = SignalState::red;
      remaining = static_cast<double>(from - tau) / hz_;
    } else if (tau < green_end) {
      state = SignalState::green;
      remaining = static_cast<double>(green_end - tau) / hz_;
    } else if (tau < yellow_end) {
      state = SignalState::yellow;
      remaining = static_cast<double>(yellow_end - tau) / hz_;
    }
    // Afterwards the phase stays red until the barrier ends.
  };
  for (const Ring r : {Ring::one, Ring::two}) {
    const int i = index(r);
    interval(plan_.lead(r), 0, lead_[i]);
    interval(plan_.lag(r), lead_[i] + transition_, lag_[i]);
  }
  return rec;
}

std::vector<SpatRecord> execute(const TimingPlan& plan, Tick start, const ScenarioConfig& config) {
  const SignalSchedule schedule(plan, start, config);
  std::vector<SpatRecord> out;
  out.reserve(static_cast<std::size_t>(schedule.end() - schedule.start()));
  for (Tick t = schedule.start(); t < schedule.end(); ++t) out.push_back(schedule.spat_at(t));
  return out;
}

}  // namespace sigattack
