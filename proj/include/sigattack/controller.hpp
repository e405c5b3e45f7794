#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sigattack/domain.hpp"

namespace sigattack {

struct SnapshotEntry {
  std::uint64_t vehicle_id = 0;
  double eta = 0.0;
  double position = 0.0;
  double speed = 0.0;
};

/// Everything the controller sees at a barrier start: per-phase arrival estimates.
struct Snapshot {
  double time = 0.0;
  std::array<std::vector<SnapshotEntry>, 8> by_phase;
};

/// Converts the BSMs heard at one instant into per-phase ETAs. The falsified flag is not copied.
Snapshot take_snapshot(std::span<const BsmRecord> bsms, double time, double floor_speed);

enum class Objective { delay, queue };

/// Cost of serving one phase's ETA-sorted arrivals in the green window [green_start, green_end)
/// by deterministic queue discharge at one vehicle per `headway` seconds. Vehicles not served
/// before the window closes cost max(0, horizon - eta) under the delay objective, or one unit
/// each (when eta < horizon) under the queue objective.
double phase_cost(std::span<const double> sorted_etas, double green_start, double green_end,
                  double horizon, double headway, Objective objective);

struct LowerLevelResult {
  TimingPlan plan;
  double cost = 0.0;
};

struct UpperLevelResult {
  TimingPlan stage1;  ///< executed
  TimingPlan stage2;  ///< planned only
  int length1 = 0;    ///< barrier lengths in seconds, transitions included
  int length2 = 0;
  double cost = 0.0;
};

/// Two-stage ring-barrier optimizer over ETA snapshots.
///
/// The lower level enumerates 1 s green splits and both lead/lag orders in each ring for a
/// fixed barrier length; ties go to the smaller lead green, then to the left-turn lead. The
/// upper level enumerates barrier lengths for the current and the next barrier, both served
/// from the same snapshot, and keeps the smallest (length1, length2) among equal-cost pairs.
class TwoLevelOptimizer {
 public:
  explicit TwoLevelOptimizer(const ScenarioConfig& config);

  /// Every admissible barrier length at 1 s granularity.
  std::vector<int> barrier_lengths() const;
  /// End of the two-stage planning window. Unserved vehicles accrue delay up to here whatever
  /// lengths are chosen, so plans of different lengths compare on the same footing.
  double planning_horizon() const { return config_.planning_horizon; }

  LowerLevelResult lower_level(const Snapshot& snapshot, Barrier barrier, int barrier_length) const;
  /// Same, with the barrier starting `start` seconds after the snapshot and unserved vehicles
  /// accruing cost until `horizon`.
  LowerLevelResult lower_level(const Snapshot& snapshot, Barrier barrier, int barrier_length,
                               double start, double horizon) const;

  UpperLevelResult upper_level(const Snapshot& snapshot, Barrier current) const;
  UpperLevelResult upper_level(const Snapshot& snapshot, Barrier current,
                               std::span<const int> lengths1, std::span<const int> lengths2) const;

 private:
  struct RingChoice {
    double g_lead = 0.0;
    bool left_leads = true;
    double cost = 0.0;
  };
  RingChoice best_ring(const std::array<std::vector<double>, 8>& etas, Barrier barrier, Ring ring,
                       int barrier_length, double start, double horizon) const;
  TimingPlan assemble(Barrier barrier, int barrier_length, const RingChoice& r1,
                      const RingChoice& r2) const;

  ScenarioConfig config_;
  Objective objective_;
};

/// Tick-level realization of one barrier: lead green, transition, lag green, transition in
/// each ring. Each transition shows yellow, then `red_clearance` seconds of red.
class SignalSchedule {
 public:
  SignalSchedule(const TimingPlan& plan, Tick start, const ScenarioConfig& config);

  Tick start() const { return start_; }
  Tick end() const { return start_ + length_; }
  const TimingPlan& plan() const { return plan_; }

  std::array<SignalState, 8> states_at(Tick t) const;
  SpatRecord spat_at(Tick t) const;

 private:
  TimingPlan plan_;
  Tick start_;
  Tick length_ = 0;
  std::array<Tick, 2> lead_{};
  std::array<Tick, 2> lag_{};
  Tick transition_ = 0;
  Tick red_clearance_ = 0;
  int hz_;
};

/// The SPaT broadcast for every tick of the barrier that starts at `start`.
std::vector<SpatRecord> execute(const TimingPlan& plan, Tick start, const ScenarioConfig& config);

}  // namespace sigattack
