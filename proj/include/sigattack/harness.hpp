#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sigattack/attack.hpp"
#include "sigattack/audit.hpp"
#include "sigattack/domain.hpp"
#include "sigattack/microsim.hpp"
#include "sigattack/surrogate.hpp"

namespace sigattack {

enum class ControllerMode { target, surrogate };

struct ExperimentSpec {
  std::string id = "I";
  ControllerMode controller = ControllerMode::target;
  AttackMode attack = AttackMode::none;
  int budget = 10;
  double duration_h = 5.0;
  std::uint64_t seed = 1;

  bool needs_surrogate() const {
    return controller == ControllerMode::surrogate || attack != AttackMode::none;
  }

  /// I: target controller. II: surrogate in control. III: target under the ETA attack.
  /// IV: target under the NAV attack with the configured budget.
  static ExperimentSpec preset(std::string_view id, const ScenarioConfig& config);
};

/// Watches every tick of a run for unsafe signal sequences and for vehicles that appear,
/// vanish or overtake.
class InvariantMonitor {
 public:
  explicit InvariantMonitor(const ScenarioConfig& config);

  void observe_signals(Tick t, const std::array<SignalState, 8>& states);
  void observe_world(const World& world);

  bool ok() const { return violation_count_ == 0; }
  std::size_t violation_count() const { return violation_count_; }
  std::size_t checks() const { return checks_; }
  /// The first few violations, verbatim.
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  void fail(std::string message);

  Tick green_min_, green_max_, transition_, yellow_;
  std::array<SignalState, 8> previous_{};
  std::array<std::optional<Tick>, 8> green_start_{};
  std::array<std::optional<Tick>, 8> yellow_start_{};
  std::array<std::optional<Tick>, 2> ring_green_end_{};
  bool first_tick_ = true;
  std::size_t departed_seen_ = 0;
  std::array<std::uint64_t, 8> last_departed_id_{};
  std::array<double, 8> last_exit_{};
  std::size_t checks_ = 0;
  std::size_t violation_count_ = 0;
  std::vector<std::string> violations_;
};

/// Snaps a plan onto the simulation tick grid while keeping it valid: the ring total is rounded
/// once and each lead green is rounded inside the range that leaves a valid lag.
TimingPlan to_tick_grid(const TimingPlan& plan, const ScenarioConfig& config);

struct RunResult {
  ExperimentSpec spec;
  double total_delay = 0.0;
  std::vector<double> vehicle_delays;  ///< departed vehicles, in departure order
  std::size_t spawned = 0;
  std::size_t departed = 0;
  std::size_t in_network = 0;
  std::size_t optimizations = 0;
  double barrier_seconds = 0.0;  ///< summed planned barrier lengths
  std::uint64_t arrival_hash = 0;
  bool invariants_ok = true;
  std::size_t invariant_checks = 0;
  std::vector<std::string> invariant_violations;

  std::vector<AuditRecord> audit;
  std::vector<std::string> events;
  std::vector<std::string> attacks;

  double mean_barrier() const {
    return optimizations ? barrier_seconds / static_cast<double>(optimizations) : 0.0;
  }
  /// Digest over the event, attack and audit logs.
  std::uint64_t log_digest() const;
};

/// One closed-loop run: at every barrier start the observer extracts features, the attacker
/// (if any) injects falsified BSMs, the controller plans the barrier, and the barrier is
/// simulated tick by tick. `trajectories`, when given, receives every BSM of the run.
RunResult run_closed_loop(const ScenarioConfig& config, const ExperimentSpec& spec,
                          const SurrogateModel* model, std::ostream* trajectories = nullptr);

struct DelaySummary {
  std::string id;
  std::uint64_t seed = 0;
  double duration_h = 0.0;
  double total_delay = 0.0;  ///< vehicle-seconds
  std::size_t vehicles = 0;  ///< departed
  double mean_delay = 0.0;   ///< per departed vehicle
  std::size_t optimizations = 0;
  double mean_barrier = 0.0;
  std::uint64_t arrival_hash = 0;
  bool invariants_ok = true;
};

DelaySummary summarize(const RunResult& run);
std::string summary_csv_header();
std::string to_csv(const DelaySummary& s);
std::vector<DelaySummary> read_summaries_csv(std::istream& in);

struct Report {
  std::string table;
  std::string plot_data;  ///< csv: experiment, mean total delay
  std::vector<std::string> warnings;
};

/// Mean total delay per experiment id and, when other ids are present, its change against experiment I.
Report report(const std::vector<DelaySummary>& summaries);

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingCampaign {
  RunResult run;
  FeatureSelectionReport selection;
  SurrogateModel model;
};

inline constexpr std::size_t kMinTrainingRecords = 100;

/// Runs the target controller unattacked for `hours`, selects features on its audit log and
/// trains the surrogate on them, or on `features` when given.
TrainingCampaign run_training_campaign(const ScenarioConfig& config, std::uint64_t seed,
                                       double hours,
                                       const std::vector<FeatureKind>& features = {});

struct ExperimentSet {
  std::vector<RunResult> runs;
  std::vector<DelaySummary> summaries;
  /// Replications whose experiments did not all see the same arrivals.
  std::vector<int> arrival_mismatches;
};

/// Every id in `ids` for replications 0..n-1; replication r uses seed base_seed + r for all ids.
ExperimentSet run_experiments(const ScenarioConfig& config, const std::vector<std::string>& ids,
                              const SurrogateModel* model, int replications,
                              std::uint64_t base_seed, double hours);

}  // namespace sigattack
