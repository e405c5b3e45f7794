#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sigattack/domain.hpp"
#include "sigattack/features.hpp"
#include "sigattack/surrogate.hpp"

namespace sigattack {

enum class AttackMode { none, eta, nav };

std::string_view attack_name(AttackMode mode);
AttackMode attack_from_name(std::string_view name);

/// Injection counts and injected ETAs per phase role, in the order d1, d2, g1, g2
/// (lead of ring 1, lead of ring 2, lag of ring 1, lag of ring 2).
struct AttackAction {
  AttackMode mode = AttackMode::none;
  std::array<int, 4> delta{};
  std::array<double, 4> tau{};
  std::array<int, 4> slots{};  ///< feature slot of each role

  int injected() const { return delta[0] + delta[1] + delta[2] + delta[3]; }
  bool operator==(const AttackAction&) const = default;
};

double dissimilarity(const std::array<double, 4>& a, const std::array<double, 4>& b);
double dissimilarity(const TimingPlan& a, const TimingPlan& b);

/// Slots of roles d1, d2, g1, g2 for a given lead order.
std::array<int, 4> role_slots(std::array<bool, 2> left_leads);

/// X_a: for each role, NAV grows by delta and (ETA mode only) ETA by delta * tau.
FeatureVector apply_action(const FeatureVector& xo, const AttackAction& action);

struct AttackOutcome {
  AttackAction action;
  FeatureVector attacked;
  TimingPlan baseline;   ///< surrogate prediction for X_o
  TimingPlan predicted;  ///< surrogate prediction for X_a
  double dissimilarity = 0.0;
  std::size_t evaluated = 0;
};

/// One falsified vehicle, every role and every candidate ETA of that role's set. Keeps the first
/// strict maximum in role order, then ascending ETA.
AttackOutcome solve_p2(const FeatureVector& xo, const SurrogateModel& model,
                       const CandidateEtaSets& sets);

/// All nonnegative 4-tuples with sum <= budget, ordered by sum and then lexicographically.
std::vector<std::array<int, 4>> budget_tuples(int budget);

AttackOutcome solve_p3(const FeatureVector& xo, const SurrogateModel& model, int budget);

struct Injection {
  std::vector<BsmRecord> trajectory;  ///< 1 s of 10 Hz history per vehicle, ending at t_now
  std::vector<BsmRecord> current;     ///< the records heard at t_now
  std::vector<std::string> notes;     ///< fallbacks taken while realizing the action
};

/// Realizes an action as falsified BSMs on the planned barrier. ETA injections use the fastest
/// speed in {8, 4, 2, 1} m/s whose position tau * v stays within range, so eta_of returns tau.
/// NAV injections are slow (2 m/s) vehicles stacked at jam spacing from the stop bar.
Injection synthesize_falsified_bsms(const AttackAction& action, Barrier planned, Tick now,
                                    const ScenarioConfig& config, std::uint64_t first_id);

}  // namespace sigattack
