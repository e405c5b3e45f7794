#pragma once

// Independent reference implementations used by the unit tests and the acceptance binary.
// They favour obviousness over speed and share no code paths with the library internals
// beyond the public types.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "sigattack/attack.hpp"
#include "sigattack/audit.hpp"
#include "sigattack/controller.hpp"
#include "sigattack/domain.hpp"
#include "sigattack/features.hpp"
#include "sigattack/surrogate.hpp"
#include "sigattack/tree.hpp"
#include "sigattack/util.hpp"

namespace oracle {

using namespace sigattack;

/// Pairwise identity: mean squared deviation = sum_i sum_j (y_i - y_j)^2 / (2 n^2).
inline double mse(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double s = 0.0;
  for (const double a : y)
    for (const double b : y) s += (a - b) * (a - b);
  return s / (2.0 * n * n);
}

inline double gain(const std::vector<double>& parent, const std::vector<double>& left,
                   const std::vector<double>& right, GainRule rule) {
  if (rule == GainRule::unweighted) return mse(parent) - mse(left) - mse(right);
  const double n = static_cast<double>(parent.size());
  return mse(parent) - static_cast<double>(left.size()) / n * mse(left) -
         static_cast<double>(right.size()) / n * mse(right);
}

inline bool close(double a, double b, double rel = 1e-9) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Every (feature, observed value) pair with both sides holding at least min_leaf rows; the
/// winner is the largest gain, earliest in (feature, threshold) order among near-equal gains.
/// Returns nothing when no candidate has positive gain.
inline std::optional<Split> best_split(const Dataset& data, const std::vector<std::size_t>& rows,
                                       int min_leaf, GainRule rule) {
  std::vector<double> parent;
  for (const auto r : rows) parent.push_back(data.y[r]);
  std::vector<Split> all;
  for (int f = 0; f < data.width; ++f) {
    std::vector<double> values;
    for (const auto r : rows) values.push_back(data.row(r)[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (const double v : values) {
      std::vector<double> l, rr;
      for (const auto r : rows) (data.row(r)[f] <= v ? l : rr).push_back(data.y[r]);
      if (static_cast<int>(l.size()) < min_leaf || static_cast<int>(rr.size()) < min_leaf) continue;
      all.push_back({f, v, gain(parent, l, rr, rule)});
    }
  }
  double top = 0.0;
  for (const auto& s : all) top = std::max(top, s.gain);
  if (top <= 1e-9 * std::max(1.0, mse(parent))) return std::nullopt;
  for (const auto& s : all)
    if (close(s.gain, top)) return s;
  return std::nullopt;
}

/// Queue discharge of one phase, written as a server that becomes free at green start.
inline double discharge_cost(std::vector<double> etas, double green_start, double green_end,
                             double horizon, double headway) {
  std::sort(etas.begin(), etas.end());
  double free_at = green_start;
  double cost = 0.0;
  bool closed = false;
  for (const double e : etas) {
    const double service = std::max(e, free_at);
    if (!closed && service < green_end) {
      cost += service - e;
      free_at = service + headway;
    } else {
      closed = true;
      cost += std::max(0.0, horizon - e);
    }
  }
  return cost;
}

struct StagePlan {
  TimingPlan plan;
  double cost = 0.0;
};

/// All green splits and lead orders of one barrier stage, in (g_d1, g_d2, order1, order2) order
/// with the left turn leading first.
inline std::vector<StagePlan> all_stage_plans(const std::array<std::vector<double>, 8>& etas,
                                              Barrier barrier, int length, double start,
                                              const ScenarioConfig& c) {
  std::vector<StagePlan> out;
  const double green = length - 2.0 * c.transition;
  const auto r1 = phases_of(barrier, Ring::one);
  const auto r2 = phases_of(barrier, Ring::two);
  auto ring_cost = [&](const std::array<PhaseId, 2>& pair, double lead, bool left) {
    const PhaseId first = left ? pair[0] : pair[1];
    const PhaseId second = left ? pair[1] : pair[0];
    const double lag_start = start + lead + c.transition;
    return discharge_cost(etas[first.index()], start, start + lead, c.planning_horizon,
                          c.saturation_headway) +
           discharge_cost(etas[second.index()], lag_start, lag_start + green - lead,
                          c.planning_horizon, c.saturation_headway);
  };
  for (int a = 0; a <= 60; ++a) {
    for (int b = 0; b <= 60; ++b) {
      const double g1 = a, g2 = b;
      if (g1 < c.g_min || g1 > c.g_max || green - g1 < c.g_min || green - g1 > c.g_max) continue;
      if (g2 < c.g_min || g2 > c.g_max || green - g2 < c.g_min || green - g2 > c.g_max) continue;
      for (const bool o1 : {true, false}) {
        for (const bool o2 : {true, false}) {
          TimingPlan p;
          p.barrier = barrier;
          p.left_leads = {o1, o2};
          p.g_d1 = g1;
          p.g_d2 = g2;
          p.g_g1 = green - g1;
          p.g_g2 = green - g2;
          out.push_back({p, ring_cost(r1, g1, o1) + ring_cost(r2, g2, o2)});
        }
      }
    }
  }
  return out;
}

struct TwoStage {
  TimingPlan stage1, stage2;
  int length1 = 0, length2 = 0;
  double cost = std::numeric_limits<double>::infinity();
};

/// Full cross product of (length1, length2, stage-1 plan, stage-2 plan); first strict minimum.
inline TwoStage brute_force_upper(const Snapshot& snap, Barrier current,
                                  const std::vector<int>& lengths1,
                                  const std::vector<int>& lengths2, const ScenarioConfig& c) {
  std::array<std::vector<double>, 8> etas;
  for (int p = 0; p < 8; ++p)
    for (const auto& e : snap.by_phase[p]) etas[p].push_back(e.eta);
  TwoStage best;
  for (const int l1 : lengths1) {
    const auto s1 = all_stage_plans(etas, current, l1, 0.0, c);
    for (const int l2 : lengths2) {
      const auto s2 = all_stage_plans(etas, other(current), l2, l1, c);
      for (const auto& a : s1) {
        for (const auto& b : s2) {
          const double cost = a.cost + b.cost;
          if (cost < best.cost) best = {a.plan, b.plan, l1, l2, cost};
        }
      }
    }
  }
  return best;
}

inline double l2(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Adds injected vehicles to a copy of xo directly on the named feature entries.
inline FeatureVector inject(FeatureVector xo, const std::array<int, 4>& slots,
                            const std::array<int, 4>& delta, const std::array<double, 4>& tau,
                            bool with_eta) {
  for (int role = 0; role < 4; ++role) {
    xo.values[static_cast<int>(FeatureKind::nav)][slots[role]] += delta[role];
    if (with_eta) xo.values[static_cast<int>(FeatureKind::eta)][slots[role]] += delta[role] * tau[role];
  }
  return xo;
}

struct Enumerated {
  double best = -1.0;
  std::array<int, 4> delta{};
  std::array<double, 4> tau{};
  std::size_t count = 0;
};

inline std::array<int, 4> slots_for(const SurrogateModel& m, const FeatureVector& xo) {
  const auto seq = m.predict_sequence(xo);
  return {seq[0] ? 0 : 1, seq[1] ? 2 : 3, seq[0] ? 1 : 0, seq[1] ? 3 : 2};
}

inline Enumerated enumerate_p2(const FeatureVector& xo, const SurrogateModel& m,
                               const CandidateEtaSets& sets) {
  Enumerated e;
  const auto base = m.predict_plan(xo).greens();
  const auto slots = slots_for(m, xo);
  for (int role = 0; role < 4; ++role) {
    for (const double t : role < 2 ? sets.lead : sets.lag) {
      std::array<int, 4> d{};
      std::array<double, 4> tau{};
      d[role] = 1;
      tau[role] = t;
      const double v = l2(base, m.predict_plan(inject(xo, slots, d, tau, true)).greens());
      ++e.count;
      if (v > e.best) e = {v, d, tau, e.count};
    }
  }
  return e;
}

inline Enumerated enumerate_p3(const FeatureVector& xo, const SurrogateModel& m, int budget) {
  Enumerated e;
  const auto base = m.predict_plan(xo).greens();
  const auto slots = slots_for(m, xo);
  for (int sum = 0; sum <= budget; ++sum) {
    for (int a = 0; a <= sum; ++a) {
      for (int b = 0; b <= sum - a; ++b) {
        for (int c = 0; c <= sum - a - b; ++c) {
          const std::array<int, 4> d{a, b, c, sum - a - b - c};
          const double v = l2(base, m.predict_plan(inject(xo, slots, d, {}, false)).greens());
          ++e.count;
          if (v > e.best) e = {v, d, {}, e.count};
        }
      }
    }
  }
  return e;
}

/// Records whose plans depend only on NAV and ETA: ring green sum on slot 0, leads on each
/// ring's lead slot.
inline std::vector<AuditRecord> planted_records(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<AuditRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    AuditRecord r;
    r.tick = static_cast<Tick>(i);
    for (auto& kind : r.features.values)
      for (auto& v : kind) v = static_cast<double>(rng.below(12));
    for (int s = 0; s < kSlots; ++s) r.features.at(FeatureKind::eta, s) = 7.0 * static_cast<double>(rng.below(15));
    const auto& f = r.features;
    auto nav = [&](int s) { return f.at(FeatureKind::nav, s); };
    auto eta = [&](int s) { return f.at(FeatureKind::eta, s); };
    const double sum = 20.0 + 4.0 * (nav(0) > 5) + 4.0 * (eta(0) > 49);
    const double lead1 = 5.0 + 3.0 * (nav(0) > 5) + 3.0 * (eta(0) > 49);
    const double lead2 = 5.0 + 3.0 * (nav(2) > 5) + 3.0 * (eta(2) > 49);
    r.plan.g_d1 = lead1;
    r.plan.g_d2 = lead2;
    r.plan.g_g1 = sum - lead1;
    r.plan.g_g2 = sum - lead2;
    for (int s = 0; s < 4; ++s) r.slot_etas[s] = {eta(s) / 2.0, eta(s) / 2.0};
    out.push_back(r);
  }
  return out;
}

}  // namespace oracle
