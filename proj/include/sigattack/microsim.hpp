#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sigattack/domain.hpp"
#include "sigattack/util.hpp"

namespace sigattack {

struct Vehicle {
  std::uint64_t id = 0;
  PhaseId movement{2};
  double position = 0.0;  ///< metres to the stop bar
  double speed = 0.0;
  double entry_time = 0.0;
  std::optional<double> exit_time;
  double free_flow_travel_time = 0.0;
};

/// Raised when the car-following update produces spacing below the jam spacing.
class ConsistencyFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Poisson arrivals, one independent seeded stream per movement. The streams never
/// consume randomness from anything else, so every controller sees the same demand.
class ArrivalProcess {
 public:
  ArrivalProcess(const std::array<double, 8>& rates_vph, std::uint64_t seed, int sim_hz);

  /// Movements (phase index 0..7) arriving during tick `t`, in movement order. Ticks must be
  /// requested in increasing order.
  std::vector<int> arrivals_at(Tick t);

 private:
  struct Stream {
    Rng rng;
    double mean_gap = 0.0;  ///< seconds, 0 when the movement carries no demand
    double next = 0.0;
  };
  std::array<std::optional<Stream>, 8> streams_;
  int sim_hz_;
};

/// Delay of vehicles against free-flow traversal. Departed vehicles contribute
/// exit - entry - free-flow time; vehicles still on the approach contribute the time lost so
/// far, (horizon - entry) - (approach_length - position) / free_flow_speed.
double total_delay(std::span<const Vehicle> vehicles, double horizon, double approach_length,
                   double free_flow_speed);

/// Fixed-step simulation of the eight single-lane approaches of one intersection.
class World {
 public:
  World(const ScenarioConfig& config, std::uint64_t seed);

  /// Advances one tick. Only phases showing green may cross the stop bar.
  void step(const std::array<SignalState, 8>& signals);

  /// BSMs of vehicles within communication range at the current tick.
  std::vector<BsmRecord> emit_bsms() const;
  /// Records for every vehicle on the approaches, regardless of range.
  std::vector<BsmRecord> trajectory_records() const;

  Tick now() const { return tick_; }
  double time() const { return config_.seconds(tick_); }

  std::size_t spawned() const { return spawned_; }
  std::size_t in_network() const;
  const std::vector<Vehicle>& departed() const { return departed_; }
  /// Vehicles still on an approach or waiting to enter, front of each lane first.
  std::vector<Vehicle> active() const;
  const std::deque<Vehicle>& lane(PhaseId p) const { return lanes_[p.index()]; }

  double total_delay() const;
  /// Digest of (tick, movement, vehicle id) over every arrival so far.
  std::uint64_t arrival_hash() const { return arrival_hash_.digest(); }

  /// Places a vehicle directly on a lane; used by tests to build traces by hand.
  void place(PhaseId movement, double position, double speed);

 private:
  void spawn_pending(int lane);
  double follow_speed(double gap) const;

  ScenarioConfig config_;
  ArrivalProcess arrivals_;
  Tick tick_ = 0;
  std::uint64_t next_id_ = 1;
  std::size_t spawned_ = 0;
  std::array<std::deque<Vehicle>, 8> lanes_;
  std::array<std::deque<Vehicle>, 8> pending_;
  std::array<std::optional<double>, 8> ghost_;  ///< last departed vehicle, now downstream (< 0)
  std::vector<Vehicle> departed_;
  Fnv1a arrival_hash_;
};

}  // namespace sigattack
