#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "sigattack/attack.hpp"
#include "sigattack/util.hpp"

using namespace sigattack;

namespace {

using V = std::vector<double>;

DecisionTree leaf(double value, int width) {
  Dataset d(width);
  d.add(V(static_cast<std::size_t>(width), 0.0), value);
  return DecisionTree::fit(d, TreeParams{});
}

/// Constant lead/sequence trees plus a Tree 1 built from (column value, label) pairs.
SurrogateModel toy(int column_index, std::vector<std::pair<double, double>> points) {
  SurrogateModel m;
  m.critical = {FeatureKind::nav, FeatureKind::eta};
  Dataset d(kFeatureColumns);
  for (const auto& [x, y] : points) {
    V row(kFeatureColumns, 0.0);
    row[column_index] = x;
    d.add(row, y);
  }
  TreeParams p;
  p.min_samples_leaf = 1;
  m.barrier_tree = DecisionTree::fit(d, p);
  m.lead_trees = {leaf(10.0, 2 * kFeatureKinds), leaf(10.0, 2 * kFeatureKinds)};
  m.sequence_trees = {leaf(1.0, 2 * kFeatureKinds), leaf(1.0, 2 * kFeatureKinds)};
  m.candidates = {{5.0, 10.0}, {5.0, 10.0}};
  return m;
}

}  // namespace

TEST_CASE("dissimilarity") {
  const std::array<double, 4> a{10, 10, 10, 10}, b{13, 10, 14, 10};
  CHECK(dissimilarity(a, a) == 0.0);
  CHECK(dissimilarity(a, b) == doctest::Approx(5.0));
  CHECK(dissimilarity(b, a) == dissimilarity(a, b));
}

TEST_CASE("role slots follow the lead order") {
  CHECK(role_slots({true, true}) == std::array<int, 4>{0, 2, 1, 3});
  CHECK(role_slots({false, true}) == std::array<int, 4>{1, 2, 0, 3});
  CHECK(role_slots({false, false}) == std::array<int, 4>{1, 3, 0, 2});
}

TEST_CASE("constant surrogate makes every action worthless") {
  const auto m = toy(0, {{1.0, 30.0}});
  Rng rng(1);
  FeatureVector xo;
  for (auto& k : xo.values)
    for (auto& v : k) v = rng.below(9);
  const auto p2 = solve_p2(xo, m, m.candidates);
  CHECK(p2.dissimilarity == 0.0);
  CHECK(p2.evaluated == 8);
  const auto p3 = solve_p3(xo, m, 10);
  CHECK(p3.dissimilarity == 0.0);
  CHECK(p3.action.injected() == 0);
}

TEST_CASE("ETA attack on a one-split surrogate injects into d1") {
  const int col = column(FeatureKind::eta, 0);
  const auto m = toy(col, {{15, 30}, {20, 30}, {25, 50}, {30, 50}});
  FeatureVector xo;
  xo.at(FeatureKind::eta, 0) = 15.0;
  const auto o = solve_p2(xo, m, {{10.0}, {10.0}});
  CHECK(o.dissimilarity > 0.0);
  CHECK(o.action.delta == std::array<int, 4>{1, 0, 0, 0});
  CHECK(o.action.tau[0] == 10.0);
  CHECK(o.attacked.at(FeatureKind::eta, 0) == 25.0);
  CHECK(o.attacked.at(FeatureKind::nav, 0) == 1.0);
  CHECK_THROWS(solve_p2(xo, m, {{}, {10.0}}));
}

TEST_CASE("chosen actions never decrease a feature and only touch attacked coordinates") {
  Rng rng(12);
  const auto m = toy(column(FeatureKind::nav, 1), {{0, 20}, {2, 26}, {4, 34}, {6, 40}});
  for (int trial = 0; trial < 20; ++trial) {
    FeatureVector xo;
    for (auto& k : xo.values)
      for (auto& v : k) v = rng.below(7);
    for (const auto& o : {solve_p2(xo, m, {{3.0, 9.0}, {4.0}}), solve_p3(xo, m, 10)}) {
      for (int k = 0; k < kFeatureKinds; ++k) {
        for (int s = 0; s < kSlots; ++s) {
          const auto kind = static_cast<FeatureKind>(k);
          const bool attackable = s < 4 && (kind == FeatureKind::nav ||
                                            (kind == FeatureKind::eta && o.action.mode == AttackMode::eta));
          if (attackable) CHECK(o.attacked.at(kind, s) >= xo.at(kind, s));
          else CHECK(o.attacked.at(kind, s) == xo.at(kind, s));
        }
      }
    }
  }
}

TEST_CASE("NAV attack with a split on n_d1 spends the budget on d1") {
  const int col = column(FeatureKind::nav, 0);
  const auto m = toy(col, {{0, 20}, {1, 22}, {2, 24}, {3, 26}, {4, 28}, {5, 30}, {6, 32}, {7, 34}, {8, 36}});
  FeatureVector xo;
  const auto o = solve_p3(xo, m, 10);
  const auto e = oracle::enumerate_p3(xo, m, 10);
  CHECK(o.dissimilarity == doctest::Approx(e.best));
  CHECK(o.action.delta == e.delta);
  CHECK(o.action.delta[0] == 8);
  CHECK(o.action.injected() == 8);
  const auto zero = solve_p3(xo, m, 0);
  CHECK(zero.attacked == xo);
  CHECK(zero.dissimilarity == 0.0);
}

TEST_CASE("budget tuples") {
  const auto t = budget_tuples(10);
  CHECK(t.size() == 1001);
  CHECK(std::set<std::array<int, 4>>(t.begin(), t.end()).size() == 1001);
  CHECK(t.front() == std::array<int, 4>{0, 0, 0, 0});
  CHECK(t[1] == std::array<int, 4>{0, 0, 0, 1});
  CHECK(t.back() == std::array<int, 4>{10, 0, 0, 0});
  std::size_t expected = 0;
  for (int k = 0; k <= 10; ++k) expected += static_cast<std::size_t>((k + 3) * (k + 2) * (k + 1) / 6);
  CHECK(expected == 1001);
  CHECK(budget_tuples(0).size() == 1);
  CHECK_THROWS(budget_tuples(-1));
}

TEST_CASE("falsified BSMs realize the action") {
  const ScenarioConfig c;
  AttackAction eta;
  eta.mode = AttackMode::eta;
  eta.slots = role_slots({true, false});
  eta.delta = {0, 1, 0, 0};
  eta.tau = {0, 10.0, 0, 0};
  auto inj = synthesize_falsified_bsms(eta, Barrier::minor, 500, c, 1ULL << 62);
  REQUIRE(inj.current.size() == 1);
  CHECK(inj.current[0].phase == slot_phase(Barrier::minor, 3));
  CHECK(eta_of(inj.current[0].position, inj.current[0].speed, c.floor_speed) == doctest::Approx(10.0));
  CHECK(inj.current[0].is_falsified);
  CHECK(inj.current[0].tick == 500);
  CHECK(inj.trajectory.size() == 10);
  for (std::size_t i = 1; i < inj.trajectory.size(); ++i) {
    const auto& a = inj.trajectory[i - 1];
    const auto& b = inj.trajectory[i];
    CHECK(b.tick == a.tick + 1);
    CHECK(a.position - b.position == doctest::Approx(b.speed * c.dt()));
  }
  CHECK(inj.notes.empty());

  eta.tau = {0, 1000.0, 0, 0};
  inj = synthesize_falsified_bsms(eta, Barrier::minor, 500, c, 1ULL << 62);
  CHECK(inj.notes.size() == 1);
  CHECK(inj.current[0].position <= c.comm_range);

  AttackAction nav;
  nav.mode = AttackMode::nav;
  nav.slots = role_slots({true, true});
  nav.delta = {3, 0, 0, 2};
  inj = synthesize_falsified_bsms(nav, Barrier::major, 0, c, 1ULL << 62);
  REQUIRE(inj.current.size() == 5);
  std::set<std::uint64_t> ids;
  std::vector<double> on_d1;
  for (const auto& b : inj.current) {
    ids.insert(b.vehicle_id);
    if (b.phase == PhaseId{1}) on_d1.push_back(b.position);
    CHECK(b.speed >= c.queue_speed);
  }
  CHECK(ids.size() == 5);
  REQUIRE(on_d1.size() == 3);
  std::sort(on_d1.begin(), on_d1.end());
  for (std::size_t i = 1; i < on_d1.size(); ++i) CHECK(on_d1[i] - on_d1[i - 1] >= c.jam_spacing);
}

TEST_CASE("extracting genuine plus falsified BSMs reproduces X_a") {
  const ScenarioConfig c;
  const auto params = FeatureParams::from(c);
  Rng rng(31);
  const auto m = toy(column(FeatureKind::eta, 2), {{0, 20}, {40, 30}, {80, 44}});
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<BsmRecord> genuine;
    for (int i = 0; i < 25; ++i) {
      BsmRecord b;
      b.vehicle_id = static_cast<std::uint64_t>(i + 1);
      b.phase = PhaseId{1 + static_cast<int>(rng.below(8))};
      b.position = 300.0 * rng.uniform();
      b.speed = rng.uniform() < 0.3 ? 0.0 : 1.0 + 14.0 * rng.uniform();
      genuine.push_back(b);
    }
    ObservationHistory h;
    h.observe(genuine, 10.0);
    const auto planned = trial % 2 ? Barrier::minor : Barrier::major;
    const auto xo = extract(genuine, h, planned, 10.0, params);
    for (const bool eta_mode : {true, false}) {
      const auto o = eta_mode ? solve_p2(xo, m, {{7.0, 35.0, 140.0}, {3.5, 70.0}}) : solve_p3(xo, m, 10);
      auto heard = genuine;
      const auto inj = synthesize_falsified_bsms(o.action, planned, 100, c, 1ULL << 62);
      heard.insert(heard.end(), inj.current.begin(), inj.current.end());
      const auto xa = extract(heard, h, planned, 10.0, params);
      for (const auto kind : {FeatureKind::nav, FeatureKind::eta}) {
        if (!eta_mode && kind == FeatureKind::eta) continue;
        for (int s = 0; s < kSlots; ++s) CHECK(xa.at(kind, s) == doctest::Approx(o.attacked.at(kind, s)));
      }
    }
  }
}

TEST_CASE("solvers equal enumeration on random trees and P3 grows with the budget") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    SurrogateModel m;
    m.critical = {FeatureKind::nav, FeatureKind::eta};
    Dataset d1(kFeatureColumns), d2(2 * kFeatureKinds), ds(2 * kFeatureKinds);
    for (int i = 0; i < 60; ++i) {
      V row(kFeatureColumns, 0.0);
      for (auto& v : row) v = rng.below(10);
      for (int s = 0; s < 4; ++s) row[column(FeatureKind::eta, s)] = 10.0 * rng.below(12);
      d1.add(row, 10.0 + rng.below(40));
      V r2(2 * kFeatureKinds);
      for (auto& v : r2) v = rng.below(12);
      d2.add(r2, 5.0 + rng.below(20));
      ds.add(r2, static_cast<double>(rng.below(2)));
    }
    TreeParams p;
    p.min_samples_leaf = 2;
    p.max_depth = 4;
    p.gain = GainRule::weighted;
    m.barrier_tree = DecisionTree::fit(d1, p);
    m.lead_trees = {DecisionTree::fit(d2, p), DecisionTree::fit(d2, p)};
    p.kind = TreeKind::classification;
    m.sequence_trees = {DecisionTree::fit(ds, p), DecisionTree::fit(ds, p)};
    m.candidates = {{0.0, 7.0, 21.0, 60.0}, {3.0, 30.0, 90.0}};
    for (int k = 0; k < 4; ++k) {
      FeatureVector xo;
      for (auto& kind : xo.values)
        for (auto& v : kind) v = rng.below(8);
      const auto p2 = solve_p2(xo, m, m.candidates);
      const auto e2 = oracle::enumerate_p2(xo, m, m.candidates);
      CHECK(p2.dissimilarity == e2.best);
      CHECK(p2.action.delta == e2.delta);
      CHECK(p2.action.tau == e2.tau);
      double previous = -1.0;
      for (int b = 0; b <= 10; ++b) {
        const auto p3 = solve_p3(xo, m, b);
        const auto e3 = oracle::enumerate_p3(xo, m, b);
        CHECK(p3.dissimilarity == e3.best);
        CHECK(p3.action.delta == e3.delta);
        CHECK(p3.evaluated == e3.count);
        CHECK(p3.dissimilarity >= previous);
        previous = p3.dissimilarity;
      }
    }
  }
}

TEST_CASE("attack mode names") {
  CHECK(attack_from_name("p2") == AttackMode::eta);
  CHECK(attack_from_name("nav") == AttackMode::nav);
  CHECK(attack_name(AttackMode::none) == "none");
  CHECK_THROWS(attack_from_name("loud"));
}
