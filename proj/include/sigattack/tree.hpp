#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sigattack {

struct Dataset {
  int width = 0;
  std::vector<double> x;  ///< row-major, width values per row
  std::vector<double> y;

  explicit Dataset(int w = 0) : width(w) {}
  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(width), static_cast<std::size_t>(width)};
  }
  void add(std::span<const double> features, double label);
  Dataset subset(std::span<const std::size_t> rows) const;
};

/// Mean squared deviation of a label multiset from its mean. Throws on an empty set.
double mse(std::span<const double> labels);

enum class GainRule { unweighted, weighted };
enum class TreeKind { regression, classification };

/// Reduction in MSE from splitting a parent into two children. The unweighted rule subtracts the
/// child errors directly; the weighted rule scales each child error by its share of the parent.
/// Throws when a child is empty.
double delta_i(std::span<const double> parent, std::span<const double> left,
               std::span<const double> right, GainRule rule = GainRule::unweighted);

struct TreeParams {
  TreeKind kind = TreeKind::regression;
  int max_depth = 8;
  int min_samples_leaf = 5;
  GainRule gain = GainRule::unweighted;
  std::vector<int> columns;  ///< candidate split features; empty means all
};

/// Binary CART-style tree. Internal nodes route x to the left child iff x[feature] <= threshold.
///
/// Split candidates at a node are the observed values of each allowed feature; the winner has
/// the largest gain, ties going to the lower feature index and then to the lower threshold.
/// Growth stops at max_depth, when a node cannot give both children min_samples_leaf rows, or
/// when no split has positive gain. Regression leaves predict the label mean, classification
/// leaves the most frequent label (smallest label on a tie). Classification uses the same
/// label-variance impurity, which for two classes is half the Gini index.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  ///< -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t count = 0;
    bool is_leaf() const { return feature < 0; }
  };

  DecisionTree() = default;

  static DecisionTree fit(const Dataset& data, const TreeParams& params);
  static DecisionTree fit(const Dataset& data, const TreeParams& params,
                          std::span<const std::size_t> rows);

  double predict(std::span<const double> x) const;
  /// Index of the leaf that x reaches.
  int leaf_of(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int width() const { return width_; }
  TreeKind kind() const { return kind_; }
  int depth() const;
  bool empty() const { return nodes_.empty(); }

  /// Preorder text form; parse(serialize()) reproduces every threshold and value bit-exactly.
  void serialize(std::ostream& out) const;
  std::string serialize() const;
  static DecisionTree parse(std::istream& in);

  bool operator==(const DecisionTree&) const;

 private:
  int build(const Dataset& data, const TreeParams& params, std::vector<std::size_t>& rows,
            const std::vector<int>& columns, int depth);

  std::vector<Node> nodes_;
  int width_ = 0;
  TreeKind kind_ = TreeKind::regression;
};

}  // namespace sigattack
