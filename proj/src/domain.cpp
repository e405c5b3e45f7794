#include "sigattack/domain.hpp"

#include <cmath>
#include <fmt/format.h>

namespace sigattack {

std::array<PhaseId, 2> phases_of(Barrier barrier, Ring ring) {
  const int base = (ring == Ring::one ? 1 : 5) + (barrier == Barrier::major ? 0 : 2);
  return {PhaseId{base}, PhaseId{base + 1}};
}

std::array<PhaseId, 4> phases_of(Barrier barrier) {
  const auto r1 = phases_of(barrier, Ring::one);
  const auto r2 = phases_of(barrier, Ring::two);
  return {r1[0], r1[1], r2[0], r2[1]};
}

bool compatible(PhaseId a, PhaseId b) {
  if (a == b) return true;
  return a.ring() != b.ring() && a.barrier() == b.barrier();
}

PhaseId TimingPlan::lead(Ring r) const {
  const auto pair = phases_of(barrier, r);
  return left_leads[index(r)] ? pair[0] : pair[1];
}

PhaseId TimingPlan::lag(Ring r) const {
  const auto pair = phases_of(barrier, r);
  return left_leads[index(r)] ? pair[1] : pair[0];
}

double TimingPlan::green_of(PhaseId p) const {
  if (p.barrier() != barrier) return 0.0;
  const Ring r = p.ring();
  return p == lead(r) ? lead_green(r) : lag_green(r);
}

Tick ScenarioConfig::ticks(double s) const { return static_cast<Tick>(std::llround(s * sim_hz)); }

double eta_of(double position, double speed, double floor_speed) {
  if (position < 0.0) throw std::invalid_argument("eta_of: negative position");
  if (!(floor_speed > 0.0)) throw std::invalid_argument("eta_of: floor speed must be positive");
  return position / std::max(speed, floor_speed);
}

PlanVerdict validate_plan(const TimingPlan& plan, const ScenarioConfig& config) {
  PlanVerdict verdict;
  constexpr std::array<const char*, 4> names{"g_d1", "g_d2", "g_g1", "g_g2"};
  const auto greens = plan.greens();
  constexpr double tol = 1e-9;
  for (std::size_t i = 0; i < greens.size(); ++i) {
    if (!std::isfinite(greens[i])) {
      verdict.violations.push_back(fmt::format("{} is not finite", names[i]));
    } else if (greens[i] < config.g_min - tol) {
      verdict.violations.push_back(
          fmt::format("{} = {} s is below g_min = {} s", names[i], greens[i], config.g_min));
    } else if (greens[i] > config.g_max + tol) {
      verdict.violations.push_back(
          fmt::format("{} = {} s is above g_max = {} s", names[i], greens[i], config.g_max));
    }
  }
  const double ring1 = plan.g_d1 + plan.g_g1;
  const double ring2 = plan.g_d2 + plan.g_g2;
  if (std::abs(ring1 - ring2) > 1e-6) {
    verdict.violations.push_back(
        fmt::format("ring greens differ: ring 1 = {} s, ring 2 = {} s", ring1, ring2));
  }
  return verdict;
}

}  // namespace sigattack
