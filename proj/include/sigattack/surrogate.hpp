#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sigattack/audit.hpp"
#include "sigattack/domain.hpp"
#include "sigattack/features.hpp"
#include "sigattack/tree.hpp"

namespace sigattack {

struct ErrorMetrics {
  double mae = 0.0;
  double mape = 0.0;  ///< percent; labels below the floor are skipped
  double rmse = 0.0;
};

ErrorMetrics score(std::span<const double> predicted, std::span<const double> actual,
                   double mape_floor = 0.5);

struct CvSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded Monte Carlo resampling: each repeat shuffles 0..n-1 and keeps the first
/// round(train_fraction * n) indices for training. Throws if either side would be empty or
/// n < 10.
std::vector<CvSplit> monte_carlo_splits(std::size_t n, int repeats, double train_fraction,
                                        std::uint64_t seed);

/// Mean validation metrics of one tree over Monte Carlo splits of `data`.
ErrorMetrics cross_validate(const Dataset& data, const TreeParams& params, int repeats,
                            double train_fraction, std::uint64_t seed);

struct SfsCandidate {
  std::vector<int> subset;
  double error = 0.0;
};

struct SfsRound {
  std::vector<SfsCandidate> candidates;
  int best = -1;          ///< pool index with the lowest error this round
  bool accepted = false;  ///< whether it strictly beat the previous round
};

struct SfsResult {
  std::vector<int> selected;
  std::vector<SfsRound> rounds;
  std::vector<double> accepted_errors;  ///< e(R) after each accepted round
};

/// Greedy forward selection over pool items 0..pool_size-1: each round adds the item whose
/// union with the current set has the lowest error, and stops as soon as that error does not
/// strictly improve on the current set. Lower pool index wins ties.
SfsResult sequential_forward_selection(int pool_size,
                                       const std::function<double(std::span<const int>)>& error);

// --- surrogate of the signal controller ---------------------------------------------------

/// Tree 1 input: the full feature vector.
std::vector<double> barrier_row(const FeatureVector& fv);
/// Tree 2 input for one ring: per kind, the lead phase's value then the lag phase's.
std::vector<double> lead_row(const FeatureVector& fv, Ring ring, bool left_leads);
/// Sequence classifier input for one ring: per kind, the left-turn value then the through value.
std::vector<double> sequence_row(const FeatureVector& fv, Ring ring);

std::vector<int> barrier_columns(std::span<const FeatureKind> kinds);
std::vector<int> ring_columns(std::span<const FeatureKind> kinds);

struct CandidateEtaSets {
  std::vector<double> lead;
  std::vector<double> lag;
};

/// Deciles (0th..100th percentile in steps of 10, nearest rank, duplicates removed) of the
/// per-vehicle ETAs seen on lead and lag phases, capped at `max_eta`.
CandidateEtaSets candidate_sets_from(std::span<const AuditRecord> records, double max_eta);

/// Lead/lag greens from a barrier green time and two lead greens: lag = barrier - lead clamped
/// to [g_min, g_max], then the shorter ring's lag (or, if that saturates, its lead) grows until
/// both rings carry the same total, which keeps the result a valid plan.
std::array<double, 4> assemble_greens(double barrier_green, std::array<double, 2> leads,
                                      double g_min, double g_max);

struct SurrogateModel {
  std::vector<FeatureKind> critical;
  bool pooled = false;
  DecisionTree barrier_tree;                  ///< Tree 1: lead + lag green of a ring
  std::array<DecisionTree, 2> lead_trees;     ///< Tree 2, per ring (identical when pooled)
  std::array<DecisionTree, 2> sequence_trees; ///< 1 when the left turn leads
  CandidateEtaSets candidates;
  double g_min = 5.0;
  double g_max = 30.0;

  std::array<bool, 2> predict_sequence(const FeatureVector& fv) const;
  /// Predicted plan for the barrier of `fv`. Pass `sequence` to use a known order instead of
  /// the classifier's.
  TimingPlan predict_plan(const FeatureVector& fv) const;
  TimingPlan predict_plan(const FeatureVector& fv, std::array<bool, 2> sequence) const;

  void save(std::ostream& out) const;
  std::string save() const;
  static SurrogateModel load(std::istream& in);
};

TreeParams tree_params(const ScenarioConfig& config, std::span<const FeatureKind> kinds,
                       bool ring_level, TreeKind kind = TreeKind::regression);

SurrogateModel train_surrogate(std::span<const AuditRecord> records,
                               std::span<const FeatureKind> critical, const ScenarioConfig& config);

/// Held-out quality of the surrogate for one feature set (true sequences are used for roles).
struct SurrogateScores {
  ErrorMetrics barrier;  ///< Tree 1
  ErrorMetrics lead;     ///< Tree 2
  ErrorMetrics lag;      ///< derived lag greens
  double sequence_accuracy = 0.0;
  double in_bounds_fraction = 0.0;  ///< assembled greens inside [g_min, g_max]
  std::size_t predictions = 0;
  double sfs_error() const { return 0.5 * (barrier.rmse + lead.rmse); }
};

SurrogateScores evaluate_surrogate(std::span<const AuditRecord> records,
                                   std::span<const FeatureKind> kinds, const ScenarioConfig& config,
                                   std::uint64_t seed);

struct FeatureSelectionReport {
  SfsResult sfs;
  std::map<std::vector<int>, SurrogateScores> scores;  ///< keyed by sorted kind indices
  std::vector<FeatureKind> critical() const;
  /// Round-by-round table: feature set, Tree 1 and Tree 2 MAE/MAPE/RMSE.
  std::string table() const;
};

FeatureSelectionReport select_features(std::span<const AuditRecord> records,
                                       const ScenarioConfig& config, std::uint64_t seed);

}  // namespace sigattack
