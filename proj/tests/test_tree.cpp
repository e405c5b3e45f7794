#include <doctest.h>

#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "sigattack/tree.hpp"
#include "sigattack/util.hpp"

using namespace sigattack;

namespace {

using V = std::vector<double>;

Dataset random_dataset(Rng& rng, std::size_t n, int d) {
  Dataset data(d);
  for (std::size_t i = 0; i < n; ++i) {
    V x;
    for (int f = 0; f < d; ++f) x.push_back(static_cast<double>(rng.below(6)));
    data.add(x, static_cast<double>(rng.below(10)));
  }
  return data;
}

/// Walks the fitted tree and compares each node with the split oracle on the rows it holds.
void check_against_oracle(const DecisionTree& tree, const Dataset& data, const TreeParams& params) {
  struct Item {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<Item> stack{{0, all, 0}};
  while (!stack.empty()) {
    auto [id, rows, depth] = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes()[id];
    CHECK(node.count == rows.size());
    const bool can_split =
        depth < params.max_depth && static_cast<int>(rows.size()) >= 2 * params.min_samples_leaf;
    const auto want = can_split ? oracle::best_split(data, rows, params.min_samples_leaf, params.gain)
                                : std::nullopt;
    REQUIRE(node.is_leaf() == !want.has_value());
    if (node.is_leaf()) {
      double mean = 0.0;
      for (const auto r : rows) mean += data.y[r];
      CHECK(node.value == doctest::Approx(mean / static_cast<double>(rows.size())));
      continue;
    }
    CHECK(node.feature == want->feature);
    CHECK(node.threshold == want->threshold);
    std::vector<std::size_t> l, r;
    for (const auto i : rows) (data.row(i)[node.feature] <= node.threshold ? l : r).push_back(i);
    stack.push_back({node.left, l, depth + 1});
    stack.push_back({node.right, r, depth + 1});
  }
}

}  // namespace

TEST_CASE("mse examples") {
  CHECK(mse(V{3, 3}) == 0.0);
  CHECK(mse(V{2, 4}) == doctest::Approx(1.0));
  CHECK(mse(V{1, 2, 3, 4, 5, 6}) == doctest::Approx(35.0 / 12.0));
  CHECK_THROWS_AS(mse(V{}), std::invalid_argument);
}

TEST_CASE("delta_i examples") {
  CHECK(delta_i(V{2, 4, 6, 8}, V{2, 4}, V{6, 8}) == doctest::Approx(3.0));
  CHECK(delta_i(V{5, 5, 5}, V{5}, V{5, 5}) == 0.0);
  CHECK(delta_i(V{2, 4}, V{2}, V{4}) == doctest::Approx(mse(V{2, 4})));
  CHECK(delta_i(V{2, 4, 6, 8}, V{2, 4}, V{6, 8}, GainRule::weighted) == doctest::Approx(4.0));
  CHECK_THROWS_AS(delta_i(V{1, 2}, V{}, V{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(delta_i(V{1, 2, 3}, V{1}, V{2}), std::invalid_argument);
}

TEST_CASE("constant labels give a single leaf") {
  Dataset d(2);
  for (int i = 0; i < 20; ++i) d.add(V{static_cast<double>(i), static_cast<double>(i % 3)}, 7.0);
  const auto t = DecisionTree::fit(d, TreeParams{});
  CHECK(t.nodes().size() == 1);
  CHECK(t.predict(V{100.0, -4.0}) == 7.0);
}

TEST_CASE("step function splits at the step") {
  Dataset d(2);
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    const double x = i;
    d.add(V{rng.uniform(), x}, x <= 17 ? 1.0 : 9.0);
  }
  const auto t = DecisionTree::fit(d, TreeParams{});
  REQUIRE_FALSE(t.nodes()[0].is_leaf());
  CHECK(t.nodes()[0].feature == 1);
  CHECK(t.nodes()[0].threshold == 17.0);
  CHECK(t.predict(V{0.3, 5.0}) == 1.0);
  CHECK(t.predict(V{0.3, 30.0}) == 9.0);
}

TEST_CASE("routing goes left on equality and matches the shape of a two-level tree") {
  // QL <= 9 on the left; otherwise VD > 12 decides.
  Dataset d(2);
  for (int ql = 0; ql <= 20; ++ql)
    for (int vd = 0; vd <= 24; vd += 2) d.add(V{double(ql), double(vd)}, ql <= 9 ? 10.0 : (vd > 12 ? 30.0 : 20.0));
  TreeParams p;
  p.min_samples_leaf = 1;
  p.gain = GainRule::weighted;
  const auto t = DecisionTree::fit(d, p);
  CHECK(t.nodes()[0].feature == 0);
  CHECK(t.nodes()[0].threshold == 9.0);
  CHECK(t.predict(V{9.0, 20.0}) == 10.0);
  CHECK(t.predict(V{10.0, 12.0}) == 20.0);
  CHECK(t.predict(V{10.0, 14.0}) == 30.0);
  CHECK_THROWS(t.predict(V{1.0}));
}

TEST_CASE("splits equal exhaustive search") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_dataset(rng, 2 + rng.below(11), 1 + static_cast<int>(rng.below(3)));
    for (const auto rule : {GainRule::unweighted, GainRule::weighted}) {
      TreeParams p;
      p.max_depth = 3;
      p.min_samples_leaf = 1 + static_cast<int>(rng.below(2));
      p.gain = rule;
      check_against_oracle(DecisionTree::fit(d, p), d, p);
    }
  }
}

TEST_CASE("predictions stay within the label range and child error never exceeds the parent's") {
  Rng rng(2);
  const auto d = random_dataset(rng, 200, 3);
  TreeParams p;
  p.gain = GainRule::weighted;
  const auto t = DecisionTree::fit(d, p);
  const double lo = *std::min_element(d.y.begin(), d.y.end());
  const double hi = *std::max_element(d.y.begin(), d.y.end());
  std::vector<double> fitted;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double y = t.predict(d.row(i));
    CHECK(y >= lo);
    CHECK(y <= hi);
    fitted.push_back(y);
  }
  double sse = 0.0, sst = 0.0;
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    sse += (d.y[i] - fitted[i]) * (d.y[i] - fitted[i]);
    sst += (d.y[i] - mean) * (d.y[i] - mean);
  }
  CHECK(sse <= sst);
}

TEST_CASE("classification leaves take the majority, smaller label on a tie") {
  Dataset d(1);
  for (const auto& [x, y] : std::vector<std::pair<double, double>>{{0, 1}, {0, 0}, {1, 1}, {1, 1}, {1, 0}})
    d.add(V{x}, y);
  TreeParams p;
  p.kind = TreeKind::classification;
  p.gain = GainRule::weighted;
  p.max_depth = 1;
  p.min_samples_leaf = 2;
  const auto t = DecisionTree::fit(d, p);
  CHECK(t.predict(V{0.0}) == 0.0);
  CHECK(t.predict(V{1.0}) == 1.0);
}

TEST_CASE("serialization round trips bit-exactly") {
  Rng rng(8);
  Dataset d(3);
  for (int i = 0; i < 300; ++i) d.add(V{rng.uniform(), rng.normal(0, 3), double(rng.below(5))}, rng.uniform() * 30.0);
  TreeParams p;
  p.gain = GainRule::weighted;
  const auto t = DecisionTree::fit(d, p);
  std::istringstream in(t.serialize());
  const auto back = DecisionTree::parse(in);
  CHECK(back == t);
  CHECK(back.serialize() == t.serialize());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(back.predict(d.row(i)) == t.predict(d.row(i)));
  std::istringstream junk("tree regression width 3 nodes 2\nL 1 1\n");
  CHECK_THROWS(DecisionTree::parse(junk));
}
