#include "sigattack/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "sigattack/util.hpp"

namespace sigattack {

ErrorMetrics score(std::span<const double> predicted, std::span<const double> actual,
                   double mape_floor) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw std::invalid_argument("score: size mismatch or empty");
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double err = predicted[i] - actual[i];
    abs_sum += std::abs(err);
    sq_sum += err * err;
    if (std::abs(actual[i]) >= mape_floor) {
      pct_sum += std::abs(err) / std::abs(actual[i]);
      ++pct_n;
    }
  }
  const double n = static_cast<double>(predicted.size());
  return {abs_sum / n, pct_n ? 100.0 * pct_sum / static_cast<double>(pct_n) : 0.0,
          std::sqrt(sq_sum / n)};
}

std::vector<CvSplit> monte_carlo_splits(std::size_t n, int repeats, double train_fraction,
                                        std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("cross validation needs at least 10 observations");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw std::invalid_argument("degenerate train/test split");
  std::vector<CvSplit> splits;
  for (int r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    CvSplit s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    splits.push_back(std::move(s));
  }
  return splits;
}

namespace {

ErrorMetrics mean_of(const std::vector<ErrorMetrics>& all) {
  ErrorMetrics m;
  for (const auto& e : all) {
    m.mae += e.mae;
    m.mape += e.mape;
    m.rmse += e.rmse;
  }
  const double n = static_cast<double>(all.size());
  return {m.mae / n, m.mape / n, m.rmse / n};
}

}  // namespace

ErrorMetrics cross_validate(const Dataset& data, const TreeParams& params, int repeats,
                            double train_fraction, std::uint64_t seed) {
  std::vector<ErrorMetrics> per_repeat;
  for (const auto& split : monte_carlo_splits(data.size(), repeats, train_fraction, seed)) {
    const auto tree = DecisionTree::fit(data, params, split.train);
    std::vector<double> predicted, actual;
    for (const auto i : split.test) {
      predicted.push_back(tree.predict(data.row(i)));
      actual.push_back(data.y[i]);
    }
    per_repeat.push_back(score(predicted, actual));
  }
  return mean_of(per_repeat);
}

SfsResult sequential_forward_selection(int pool_size,
                                       const std::function<double(std::span<const int>)>& error) {
  SfsResult result;
  std::vector<int> remaining(static_cast<std::size_t>(std::max(0, pool_size)));
  std::iota(remaining.begin(), remaining.end(), 0);
  double current = std::numeric_limits<double>::infinity();
  while (!remaining.empty()) {
    SfsRound round;
    double best_error = std::numeric_limits<double>::infinity();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      std::vector<int> subset = result.selected;
      subset.push_back(remaining[i]);
      std::sort(subset.begin(), subset.end());
      const double e = error(subset);
      round.candidates.push_back({subset, e});
      if (round.best < 0 || e < best_error) {
        best_error = e;
        best_pos = i;
        round.best = remaining[i];
      }
    }
    round.accepted = best_error < current;
    result.rounds.push_back(round);
    if (!round.accepted) break;
    current = best_error;
    result.selected.push_back(remaining[best_pos]);
    result.accepted_errors.push_back(best_error);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }
  return result;
}

std::vector<double> barrier_row(const FeatureVector& fv) { return fv.flat(); }

std::vector<double> lead_row(const FeatureVector& fv, Ring ring, bool left_leads) {
  const int base = 2 * index(ring);
  const int lead = base + (left_leads ? 0 : 1);
  const int lag = base + (left_leads ? 1 : 0);
  std::vector<double> row;
  row.reserve(2 * kFeatureKinds);
  for (int k = 0; k < kFeatureKinds; ++k) {
    row.push_back(fv.values[k][lead]);
    row.push_back(fv.values[k][lag]);
  }
  return row;
}

std::vector<double> sequence_row(const FeatureVector& fv, Ring ring) {
  return lead_row(fv, ring, true);
}

std::vector<int> barrier_columns(std::span<const FeatureKind> kinds) {
  std::vector<int> cols;
  for (const auto k : kinds)
    for (int s = 0; s < kSlots; ++s) cols.push_back(column(k, s));
  std::sort(cols.begin(), cols.end());
  return cols;
}

std::vector<int> ring_columns(std::span<const FeatureKind> kinds) {
  std::vector<int> cols;
  for (const auto k : kinds) {
    cols.push_back(2 * static_cast<int>(k));
    cols.push_back(2 * static_cast<int>(k) + 1);
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

namespace {

std::vector<double> deciles(std::vector<double> pool, double cap) {
  if (pool.empty()) return {0.0};
  std::sort(pool.begin(), pool.end());
  std::vector<double> out;
  for (int q = 0; q <= 10; ++q) {
    const auto i = static_cast<std::size_t>(q * (pool.size() - 1) / 10);
    out.push_back(std::min(pool[i], cap));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int lead_slot(const TimingPlan& plan, Ring r) { return 2 * index(r) + (plan.left_leads[index(r)] ? 0 : 1); }
int lag_slot(const TimingPlan& plan, Ring r) { return 2 * index(r) + (plan.left_leads[index(r)] ? 1 : 0); }

}  // namespace

CandidateEtaSets candidate_sets_from(std::span<const AuditRecord> records, double max_eta) {
  std::vector<double> lead, lag;
  for (const auto& rec : records) {
    for (const Ring r : {Ring::one, Ring::two}) {
      const auto& l = rec.slot_etas[lead_slot(rec.plan, r)];
      const auto& g = rec.slot_etas[lag_slot(rec.plan, r)];
      lead.insert(lead.end(), l.begin(), l.end());
      lag.insert(lag.end(), g.begin(), g.end());
    }
  }
  return {deciles(std::move(lead), max_eta), deciles(std::move(lag), max_eta)};
}

std::array<double, 4> assemble_greens(double barrier_green, std::array<double, 2> leads,
                                      double g_min, double g_max) {
  std::array<double, 2> lags{};
  for (int r = 0; r < 2; ++r) {
    leads[r] = std::clamp(leads[r], g_min, g_max);
    lags[r] = std::clamp(barrier_green - leads[r], g_min, g_max);
  }
  const double total = std::max(leads[0] + lags[0], leads[1] + lags[1]);
  for (int r = 0; r < 2; ++r) {
    lags[r] = std::min(g_max, total - leads[r]);
    leads[r] = total - lags[r];
  }
  return {leads[0], leads[1], lags[0], lags[1]};
}

std::array<bool, 2> SurrogateModel::predict_sequence(const FeatureVector& fv) const {
  return {sequence_trees[0].predict(sequence_row(fv, Ring::one)) >= 0.5,
          sequence_trees[1].predict(sequence_row(fv, Ring::two)) >= 0.5};
}

TimingPlan SurrogateModel::predict_plan(const FeatureVector& fv) const {
  return predict_plan(fv, predict_sequence(fv));
}

TimingPlan SurrogateModel::predict_plan(const FeatureVector& fv, std::array<bool, 2> sequence) const {
  const double barrier_green = barrier_tree.predict(barrier_row(fv));
  const std::array<double, 2> leads{lead_trees[0].predict(lead_row(fv, Ring::one, sequence[0])),
                                    lead_trees[1].predict(lead_row(fv, Ring::two, sequence[1]))};
  const auto g = assemble_greens(barrier_green, leads, g_min, g_max);
  TimingPlan plan;
  plan.barrier = fv.barrier;
  plan.left_leads = sequence;
  plan.g_d1 = g[0];
  plan.g_d2 = g[1];
  plan.g_g1 = g[2];
  plan.g_g2 = g[3];
  return plan;
}

void SurrogateModel::save(std::ostream& out) const {
  out << "surrogate v1\ncritical";
  for (const auto k : critical) out << ' ' << feature_name(k);
  out << fmt::format("\ntree2_mode {}\ngreen_bounds {} {}\n", pooled ? "pooled" : "per_ring", g_min,
                     g_max);
  auto list = [&](const char* name, const std::vector<double>& v) {
    out << name << ' ' << v.size();
    for (const double x : v) out << fmt::format(" {}", x);
    out << '\n';
  };
  list("t_lead", candidates.lead);
  list("t_lag", candidates.lag);
  out << "barrier_tree\n";
  barrier_tree.serialize(out);
  for (int r = 0; r < 2; ++r) {
    out << "lead_tree " << r + 1 << '\n';
    lead_trees[r].serialize(out);
  }
  for (int r = 0; r < 2; ++r) {
    out << "sequence_tree " << r + 1 << '\n';
    sequence_trees[r].serialize(out);
  }
}

std::string SurrogateModel::save() const {
  std::ostringstream out;
  save(out);
  return out.str();
}

SurrogateModel SurrogateModel::load(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word)
      throw std::runtime_error("surrogate model: expected '" + word + "', got '" + got + "'");
  };
  SurrogateModel m;
  expect("surrogate");
  expect("v1");
  expect("critical");
  std::string line;
  std::getline(in, line);
  std::istringstream names(line);
  for (std::string n; names >> n;) m.critical.push_back(feature_from_name(n));
  expect("tree2_mode");
  std::string mode;
  in >> mode;
  if (mode != "pooled" && mode != "per_ring") throw std::runtime_error("surrogate model: tree2_mode");
  m.pooled = mode == "pooled";
  expect("green_bounds");
  if (!(in >> m.g_min >> m.g_max)) throw std::runtime_error("surrogate model: green_bounds");
  auto list = [&](const char* name, std::vector<double>& v) {
    expect(name);
    std::size_t n = 0;
    if (!(in >> n)) throw std::runtime_error("surrogate model: list size");
    v.resize(n);
    for (auto& x : v)
      if (!(in >> x)) throw std::runtime_error("surrogate model: list value");
  };
  list("t_lead", m.candidates.lead);
  list("t_lag", m.candidates.lag);
  expect("barrier_tree");
  m.barrier_tree = DecisionTree::parse(in);
  for (int r = 0; r < 2; ++r) {
    expect("lead_tree");
    expect(std::to_string(r + 1));
    m.lead_trees[r] = DecisionTree::parse(in);
  }
  for (int r = 0; r < 2; ++r) {
    expect("sequence_tree");
    expect(std::to_string(r + 1));
    m.sequence_trees[r] = DecisionTree::parse(in);
  }
  return m;
}

TreeParams tree_params(const ScenarioConfig& config, std::span<const FeatureKind> kinds,
                       bool ring_level, TreeKind kind) {
  TreeParams p;
  p.kind = kind;
  p.max_depth = config.max_depth;
  p.min_samples_leaf = config.min_samples_leaf;
  p.gain = config.gain == "weighted" ? GainRule::weighted : GainRule::unweighted;
  p.columns = ring_level ? ring_columns(kinds) : barrier_columns(kinds);
  return p;
}

namespace {

struct TrainingTables {
  Dataset barrier{kFeatureColumns};
  std::array<Dataset, 2> lead{Dataset(2 * kFeatureKinds), Dataset(2 * kFeatureKinds)};
  std::array<Dataset, 2> sequence{Dataset(2 * kFeatureKinds), Dataset(2 * kFeatureKinds)};
  Dataset pooled_lead{2 * kFeatureKinds};  ///< rows 2i and 2i+1 are rings 1 and 2 of record i
};

TrainingTables tables_from(std::span<const AuditRecord> records) {
  TrainingTables t;
  for (const auto& rec : records) {
    t.barrier.add(barrier_row(rec.features), rec.plan.g_d1 + rec.plan.g_g1);
    for (const Ring r : {Ring::one, Ring::two}) {
      const int i = index(r);
      const auto row = lead_row(rec.features, r, rec.plan.left_leads[i]);
      t.lead[i].add(row, rec.plan.lead_green(r));
      t.pooled_lead.add(row, rec.plan.lead_green(r));
      t.sequence[i].add(sequence_row(rec.features, r), rec.plan.left_leads[i] ? 1.0 : 0.0);
    }
  }
  return t;
}

std::vector<std::size_t> pooled_rows(std::span<const std::size_t> records) {
  std::vector<std::size_t> rows;
  for (const auto i : records) {
    rows.push_back(2 * i);
    rows.push_back(2 * i + 1);
  }
  return rows;
}

}  // namespace

SurrogateModel train_surrogate(std::span<const AuditRecord> records,
                               std::span<const FeatureKind> critical, const ScenarioConfig& config) {
  if (records.empty()) throw std::invalid_argument("train_surrogate: no audit records");
  if (critical.empty()) throw std::invalid_argument("train_surrogate: empty feature set");
  const auto t = tables_from(records);
  SurrogateModel m;
  m.critical.assign(critical.begin(), critical.end());
  m.pooled = config.tree2_mode == "pooled";
  m.g_min = config.g_min;
  m.g_max = config.g_max;
  m.barrier_tree = DecisionTree::fit(t.barrier, tree_params(config, critical, false));
  const auto ring = tree_params(config, critical, true);
  if (m.pooled) {
    const auto tree = DecisionTree::fit(t.pooled_lead, ring);
    m.lead_trees = {tree, tree};
  } else {
    m.lead_trees = {DecisionTree::fit(t.lead[0], ring), DecisionTree::fit(t.lead[1], ring)};
  }
  const auto cls = tree_params(config, critical, true, TreeKind::classification);
  m.sequence_trees = {DecisionTree::fit(t.sequence[0], cls), DecisionTree::fit(t.sequence[1], cls)};
  m.candidates = candidate_sets_from(records, config.comm_range / config.floor_speed);
  return m;
}

SurrogateScores evaluate_surrogate(std::span<const AuditRecord> records,
                                   std::span<const FeatureKind> kinds, const ScenarioConfig& config,
                                   std::uint64_t seed) {
  const auto t = tables_from(records);
  const auto p1 = tree_params(config, kinds, false);
  const auto p2 = tree_params(config, kinds, true);
  const auto pc = tree_params(config, kinds, true, TreeKind::classification);
  const bool pooled = config.tree2_mode == "pooled";

  std::vector<ErrorMetrics> barrier, lead, lag;
  double correct = 0.0, classified = 0.0, in_bounds = 0.0, greens = 0.0;
  std::size_t predictions = 0;
  for (const auto& split : monte_carlo_splits(records.size(), config.cv_repeats,
                                              config.cv_train_fraction, seed)) {
    const auto tree1 = DecisionTree::fit(t.barrier, p1, split.train);
    std::array<DecisionTree, 2> tree2;
    if (pooled) {
      const auto rows = pooled_rows(split.train);
      tree2[0] = tree2[1] = DecisionTree::fit(t.pooled_lead, p2, rows);
    } else {
      tree2 = {DecisionTree::fit(t.lead[0], p2, split.train),
               DecisionTree::fit(t.lead[1], p2, split.train)};
    }
    const std::array<DecisionTree, 2> seq{DecisionTree::fit(t.sequence[0], pc, split.train),
                                          DecisionTree::fit(t.sequence[1], pc, split.train)};

    std::vector<double> b_pred, b_true, l_pred, l_true, g_pred, g_true;
    for (const auto i : split.test) {
      const auto& rec = records[i];
      const double barrier_green = tree1.predict(t.barrier.row(i));
      b_pred.push_back(barrier_green);
      b_true.push_back(t.barrier.y[i]);
      std::array<double, 2> leads{};
      for (int r = 0; r < 2; ++r) {
        leads[r] = tree2[r].predict(t.lead[r].row(i));
        l_pred.push_back(leads[r]);
        l_true.push_back(t.lead[r].y[i]);
        const bool left = seq[r].predict(t.sequence[r].row(i)) >= 0.5;
        correct += left == rec.plan.left_leads[r] ? 1.0 : 0.0;
        classified += 1.0;
      }
      const auto g = assemble_greens(barrier_green, leads, config.g_min, config.g_max);
      g_pred.push_back(g[2]);
      g_pred.push_back(g[3]);
      g_true.push_back(rec.plan.g_g1);
      g_true.push_back(rec.plan.g_g2);
      for (const double x : g) {
        in_bounds += (x >= config.g_min - 1e-9 && x <= config.g_max + 1e-9) ? 1.0 : 0.0;
        greens += 1.0;
      }
      ++predictions;
    }
    barrier.push_back(score(b_pred, b_true));
    lead.push_back(score(l_pred, l_true));
    lag.push_back(score(g_pred, g_true));
  }
  SurrogateScores s;
  s.barrier = mean_of(barrier);
  s.lead = mean_of(lead);
  s.lag = mean_of(lag);
  s.sequence_accuracy = correct / classified;
  s.in_bounds_fraction = in_bounds / greens;
  s.predictions = predictions;
  return s;
}

std::vector<FeatureKind> FeatureSelectionReport::critical() const {
  std::vector<FeatureKind> out;
  for (const int i : sfs.selected) out.push_back(static_cast<FeatureKind>(i));
  return out;
}

std::string FeatureSelectionReport::table() const {
  std::string out = fmt::format("{:<6}{:<24}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}{:>10}\n", "round",
                                "features", "T1 MAE", "T1 MAPE", "T1 RMSE", "T2 MAE", "T2 MAPE",
                                "T2 RMSE", "e(Q)");
  for (std::size_t r = 0; r < sfs.rounds.size(); ++r) {
    const auto& round = sfs.rounds[r];
    for (const auto& c : round.candidates) {
      std::string names;
      for (const int k : c.subset)
        names += (names.empty() ? "" : "+") + std::string(feature_name(static_cast<FeatureKind>(k)));
      const auto it = scores.find(c.subset);
      const bool chosen = round.accepted &&
                          std::find(c.subset.begin(), c.subset.end(), round.best) != c.subset.end();
      if (it == scores.end()) {
        out += fmt::format("{:<6}{:<24}{:>64.4f}\n", r + 1, names, c.error);
        continue;
      }
      const auto& s = it->second;
      out += fmt::format("{:<6}{:<24}{:>9.3f}{:>8.2f}%{:>9.3f}{:>9.3f}{:>8.2f}%{:>9.3f}{:>10.4f}{}\n",
                         r + 1, names, s.barrier.mae, s.barrier.mape, s.barrier.rmse, s.lead.mae,
                         s.lead.mape, s.lead.rmse, c.error, chosen ? "  <- selected" : "");
    }
    if (!round.accepted) out += "      no candidate improves e(R); selection stops\n";
  }
  return out;
}

FeatureSelectionReport select_features(std::span<const AuditRecord> records,
                                       const ScenarioConfig& config, std::uint64_t seed) {
  FeatureSelectionReport report;
  report.sfs = sequential_forward_selection(kFeatureKinds, [&](std::span<const int> subset) {
    std::vector<FeatureKind> kinds;
    for (const int i : subset) kinds.push_back(static_cast<FeatureKind>(i));
    const auto scores = evaluate_surrogate(records, kinds, config, seed);
    report.scores[std::vector<int>(subset.begin(), subset.end())] = scores;
    return scores.sfs_error();
  });
  return report;
}

}  // namespace sigattack
