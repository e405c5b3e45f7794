#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sigattack/domain.hpp"

namespace sigattack {

/// Candidate traffic features, computed per phase.
enum class FeatureKind : int { ql = 0, nav, hw, eta, vd, fr };
inline constexpr int kFeatureKinds = 6;
/// Phase slots of a feature vector: the barrier being planned first, then the other one,
/// each in phases_of(barrier) order.
inline constexpr int kSlots = 8;
inline constexpr int kFeatureColumns = kFeatureKinds * kSlots;

std::string_view feature_name(FeatureKind kind);
FeatureKind feature_from_name(std::string_view name);

struct FeatureParams {
  double comm_range = 300.0;
  double floor_speed = 1.0;
  double queue_speed = 1.0;  ///< below this a vehicle counts as queued, at or above as approaching
  double free_flow_speed = 15.65;
  double fr_window = 300.0;
  double hw_cap = 300.0;

  static FeatureParams from(const ScenarioConfig& config);
};

struct FeatureVector {
  Barrier barrier = Barrier::major;
  /// values[kind][slot]
  std::array<std::array<double, kSlots>, kFeatureKinds> values{};

  double& at(FeatureKind kind, int slot) { return values[static_cast<int>(kind)][slot]; }
  double at(FeatureKind kind, int slot) const { return values[static_cast<int>(kind)][slot]; }

  /// Column-major by kind: column = kind * kSlots + slot.
  std::vector<double> flat() const;
  static FeatureVector from_flat(Barrier barrier, std::span<const double> flat);

  bool operator==(const FeatureVector&) const = default;
};

PhaseId slot_phase(Barrier planned, int slot);
int phase_slot(Barrier planned, PhaseId phase);
inline int column(FeatureKind kind, int slot) { return static_cast<int>(kind) * kSlots + slot; }

/// What an observer accumulates from the 10 Hz BSM stream between snapshots: when each vehicle
/// was first heard and where, and when vehicles vanished past the stop bar.
class ObservationHistory {
 public:
  explicit ObservationHistory(double fr_window = 300.0) : fr_window_(fr_window) {}

  /// Feeds one tick of genuine BSMs. A vehicle heard last time but not now has crossed.
  void observe(std::span<const BsmRecord> bsms, double time);

  struct FirstSeen {
    double time = 0.0;
    double position = 0.0;
  };
  const FirstSeen* first_seen(std::uint64_t vehicle_id) const;
  /// Stop-bar crossings of `phase` in the half-open window (from, to].
  std::size_t crossings(PhaseId phase, double from, double to) const;

 private:
  double fr_window_;
  std::unordered_map<std::uint64_t, FirstSeen> first_;
  std::unordered_map<std::uint64_t, PhaseId> current_;
  std::array<std::deque<double>, 8> crossing_times_;
};

/// Computes QL, NAV, HW, ETA, VD and FR for every phase slot from the BSMs of one instant.
/// Vehicles beyond communication range are ignored. NAV counts every in-range vehicle on the
/// lane and ETA sums eta_of over the same vehicles, so one injected vehicle with ETA tau adds
/// exactly (1, tau) to (NAV, ETA) of its phase.
FeatureVector extract(std::span<const BsmRecord> bsms, const ObservationHistory& history,
                      Barrier planned, double time, const FeatureParams& params);

}  // namespace sigattack
