#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigattack {

/// Simulation clock in integer ticks (0.1 s at the default 10 Hz).
using Tick = std::int64_t;

enum class Ring { one = 0, two = 1 };
enum class Barrier { major = 0, minor = 1 };

inline Barrier other(Barrier b) { return b == Barrier::major ? Barrier::minor : Barrier::major; }
inline int index(Ring r) { return static_cast<int>(r); }
inline char barrier_code(Barrier b) { return b == Barrier::major ? 'M' : 'm'; }

/// NEMA phase number 1..8. Odd phases are protected lefts, even phases are throughs.
class PhaseId {
 public:
  constexpr explicit PhaseId(int id) : id_(id) {
    if (id < 1 || id > 8) throw std::out_of_range("phase id must be in 1..8");
  }

  constexpr int value() const { return id_; }
  constexpr int index() const { return id_ - 1; }
  constexpr bool is_through() const { return id_ % 2 == 0; }
  constexpr bool is_left() const { return id_ % 2 == 1; }
  constexpr Ring ring() const { return id_ <= 4 ? Ring::one : Ring::two; }
  constexpr Barrier barrier() const {
    const int in_ring = (id_ - 1) % 4;
    return in_ring < 2 ? Barrier::major : Barrier::minor;
  }

  constexpr auto operator<=>(const PhaseId&) const = default;

 private:
  int id_;
};

inline constexpr std::array<PhaseId, 8> kAllPhases{PhaseId{1}, PhaseId{2}, PhaseId{3}, PhaseId{4},
                                                   PhaseId{5}, PhaseId{6}, PhaseId{7}, PhaseId{8}};

/// The two phases of `ring` inside `barrier`, left turn first.
std::array<PhaseId, 2> phases_of(Barrier barrier, Ring ring);

/// The four phases of a barrier in slot order: ring-1 left, ring-1 through, ring-2 left, ring-2 through.
std::array<PhaseId, 4> phases_of(Barrier barrier);

/// True when both phases may show green together (same barrier, different rings) or a == b.
bool compatible(PhaseId a, PhaseId b);

enum class SignalState : char { green = 'G', yellow = 'Y', red = 'R' };

struct BsmRecord {
  std::uint64_t vehicle_id = 0;
  Tick tick = 0;
  double position = 0.0;  ///< metres to the stop bar along the lane
  double speed = 0.0;     ///< m/s
  PhaseId phase{2};
  bool is_falsified = false;  ///< evaluation bookkeeping; controllers must never read it
};

struct SpatRecord {
  Tick tick = 0;
  std::array<SignalState, 8> state{};
  std::array<double, 8> remaining{};  ///< seconds until each phase's state changes
};

/// Green split of one barrier. Lead/lag roles follow `left_leads` per ring.
struct TimingPlan {
  Barrier barrier = Barrier::major;
  std::array<bool, 2> left_leads{true, true};
  double g_d1 = 0.0;  ///< ring-1 lead green
  double g_d2 = 0.0;  ///< ring-2 lead green
  double g_g1 = 0.0;  ///< ring-1 lag green
  double g_g2 = 0.0;  ///< ring-2 lag green

  std::array<double, 4> greens() const { return {g_d1, g_d2, g_g1, g_g2}; }
  double lead_green(Ring r) const { return r == Ring::one ? g_d1 : g_d2; }
  double lag_green(Ring r) const { return r == Ring::one ? g_g1 : g_g2; }
  PhaseId lead(Ring r) const;
  PhaseId lag(Ring r) const;
  double green_of(PhaseId p) const;
  /// Wall-clock length including both transitions, measured on ring 1.
  double barrier_length(double transition) const { return g_d1 + g_g1 + 2.0 * transition; }

  bool operator==(const TimingPlan&) const = default;
};

struct ScenarioConfig {
  std::array<double, 8> demand_vph{400, 400, 400, 400, 400, 400, 400, 400};
  double comm_range = 300.0;
  double free_flow_speed = 15.65;
  double g_min = 5.0;
  double g_max = 30.0;
  double transition = 4.0;
  double red_clearance = 1.0;  ///< tail of each transition shown as red; the rest is yellow
  int sim_hz = 10;
  std::uint64_t seed = 1;
  double duration_h = 5.0;

  double approach_length = 600.0;
  double jam_spacing = 7.0;
  double wave_speed = 5.0;
  double floor_speed = 1.0;

  double saturation_headway = 2.0;
  std::string objective = "delay";  ///< delay | queue
  double planning_horizon = 170.0;  ///< s after the snapshot; unserved vehicles accrue cost until here

  double queue_speed = 1.0;
  double fr_window = 300.0;
  double hw_cap = 300.0;

  int max_depth = 8;
  int min_samples_leaf = 5;
  std::string gain = "weighted";  ///< weighted | unweighted
  std::string tree2_mode = "per_ring";  ///< per_ring | pooled
  int cv_repeats = 10;
  double cv_train_fraction = 0.8;

  int budget = 10;
  int replications = 5;
  double training_hours = 30.0;

  double dt() const { return 1.0 / sim_hz; }
  Tick ticks(double seconds) const;
  double seconds(Tick t) const { return static_cast<double>(t) / sim_hz; }
  double min_barrier_length() const { return 2.0 * g_min + 2.0 * transition; }
  double max_barrier_length() const { return 2.0 * g_max + 2.0 * transition; }
};

/// Distance over speed with the speed clamped from below.
double eta_of(double position, double speed, double floor_speed);

struct PlanVerdict {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
  /// First violated constraint, empty when valid.
  std::string first() const { return violations.empty() ? std::string{} : violations.front(); }
};

PlanVerdict validate_plan(const TimingPlan& plan, const ScenarioConfig& config);

}  // namespace sigattack
