#include "sigattack/attack.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace sigattack {

std::string_view attack_name(AttackMode mode) {
  switch (mode) {
    case AttackMode::none: return "none";
    case AttackMode::eta: return "eta";
    case AttackMode::nav: return "nav";
  }
  return "none";
}

AttackMode attack_from_name(std::string_view name) {
  if (name == "none") return AttackMode::none;
  if (name == "eta" || name == "p2") return AttackMode::eta;
  if (name == "nav" || name == "p3") return AttackMode::nav;
  throw std::invalid_argument(fmt::format("unknown attack mode '{}'", name));
}

double dissimilarity(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double dissimilarity(const TimingPlan& a, const TimingPlan& b) {
  return dissimilarity(a.greens(), b.greens());
}

std::array<int, 4> role_slots(std::array<bool, 2> left_leads) {
  return {left_leads[0] ? 0 : 1, left_leads[1] ? 2 : 3, left_leads[0] ? 1 : 0,
          left_leads[1] ? 3 : 2};
}

FeatureVector apply_action(const FeatureVector& xo, const AttackAction& action) {
  FeatureVector xa = xo;
  for (int role = 0; role < 4; ++role) {
    const int d = action.delta[role];
    if (d < 0) throw std::invalid_argument("attack: negative injection count");
    if (d == 0) continue;
    const int slot = action.slots[role];
    xa.at(FeatureKind::nav, slot) += d;
    if (action.mode == AttackMode::eta) xa.at(FeatureKind::eta, slot) += d * action.tau[role];
  }
  return xa;
}

AttackOutcome solve_p2(const FeatureVector& xo, const SurrogateModel& model,
                       const CandidateEtaSets& sets) {
  if (sets.lead.empty() || sets.lag.empty())
    throw std::invalid_argument("solve_p2: empty candidate ETA set");
  AttackOutcome best;
  best.baseline = model.predict_plan(xo);
  best.dissimilarity = -1.0;
  const auto slots = role_slots(best.baseline.left_leads);
  for (int role = 0; role < 4; ++role) {
    for (const double tau : role < 2 ? sets.lead : sets.lag) {
      AttackAction a;
      a.mode = AttackMode::eta;
      a.slots = slots;
      a.delta[role] = 1;
      a.tau[role] = tau;
      const auto xa = apply_action(xo, a);
      const auto plan = model.predict_plan(xa);
      const double d = dissimilarity(best.baseline, plan);
      ++best.evaluated;
      if (d > best.dissimilarity) {
        best.action = a;
        best.attacked = xa;
        best.predicted = plan;
        best.dissimilarity = d;
      }
    }
  }
  return best;
}

std::vector<std::array<int, 4>> budget_tuples(int budget) {
  if (budget < 0) throw std::invalid_argument("budget must be nonnegative");
  std::vector<std::array<int, 4>> out;
  for (int sum = 0; sum <= budget; ++sum)
    for (int a = 0; a <= sum; ++a)
      for (int b = 0; a + b <= sum; ++b)
        for (int c = 0; a + b + c <= sum; ++c) out.push_back({a, b, c, sum - a - b - c});
  return out;
}

AttackOutcome solve_p3(const FeatureVector& xo, const SurrogateModel& model, int budget) {
  AttackOutcome best;
  best.baseline = model.predict_plan(xo);
  best.dissimilarity = -1.0;
  const auto slots = role_slots(best.baseline.left_leads);
  for (const auto& delta : budget_tuples(budget)) {
    AttackAction a;
    a.mode = AttackMode::nav;
    a.slots = slots;
    a.delta = delta;
    const auto xa = apply_action(xo, a);
    const auto plan = model.predict_plan(xa);
    const double d = dissimilarity(best.baseline, plan);
    ++best.evaluated;
    if (d > best.dissimilarity) {
      best.action = a;
      best.attacked = xa;
      best.predicted = plan;
      best.dissimilarity = d;
    }
  }
  return best;
}

namespace {

void emit(Injection& out, std::uint64_t id, PhaseId phase, double position, double speed, Tick now,
          double dt) {
  constexpr int kHistory = 10;
  for (int k = kHistory - 1; k >= 0; --k) {
    BsmRecord r;
    r.vehicle_id = id;
    r.tick = now - k;
    r.position = position + speed * dt * k;
    r.speed = speed;
    r.phase = phase;
    r.is_falsified = true;
    out.trajectory.push_back(r);
    if (k == 0) out.current.push_back(r);
  }
}

}  // namespace

Injection synthesize_falsified_bsms(const AttackAction& action, Barrier planned, Tick now,
                                    const ScenarioConfig& config, std::uint64_t first_id) {
  Injection out;
  std::uint64_t id = first_id;
  const double dt = config.dt();
  for (int role = 0; role < 4; ++role) {
    const PhaseId phase = slot_phase(planned, action.slots[role]);
    for (int k = 0; k < action.delta[role]; ++k) {
      if (action.mode == AttackMode::eta) {
        double tau = action.tau[role];
        double speed = 0.0;
        for (const double v : {8.0, 4.0, 2.0, 1.0}) {
          if (v >= config.floor_speed && tau * v <= config.comm_range) {
            speed = v;
            break;
          }
        }
        if (speed == 0.0) {
          speed = std::max(1.0, config.floor_speed);
          const double realizable = config.comm_range / speed;
          out.notes.push_back(fmt::format(
              "phase {}: eta {} s is out of range, injected {} s instead", phase.value(), tau,
              realizable));
          tau = realizable;
        }
        emit(out, id++, phase, tau * speed, speed, now, dt);
      } else {
        emit(out, id++, phase, config.jam_spacing * (k + 1), 2.0, now, dt);
      }
    }
  }
  return out;
}

}  // namespace sigattack
