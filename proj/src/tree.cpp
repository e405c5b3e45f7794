#include "sigattack/tree.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace sigattack {

void Dataset::add(std::span<const double> features, double label) {
  if (static_cast<int>(features.size()) != width) throw std::invalid_argument("dataset: row width");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(width);
  out.x.reserve(rows.size() * static_cast<std::size_t>(width));
  out.y.reserve(rows.size());
  for (const auto r : rows) out.add(row(r), y[r]);
  return out;
}

double mse(std::span<const double> labels) {
  if (labels.empty()) throw std::invalid_argument("mse of an empty set");
  const double n = static_cast<double>(labels.size());
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double e = 0.0;
  for (const double y : labels) e += (y - mean) * (y - mean) / n;
  return e;
}

double delta_i(std::span<const double> parent, std::span<const double> left,
               std::span<const double> right, GainRule rule) {
  if (left.empty() || right.empty()) throw std::invalid_argument("delta_i: empty child");
  if (left.size() + right.size() != parent.size())
    throw std::invalid_argument("delta_i: children do not partition the parent");
  const double ep = mse(parent);
  if (rule == GainRule::unweighted) return ep - mse(left) - mse(right);
  const double n = static_cast<double>(parent.size());
  return ep - static_cast<double>(left.size()) / n * mse(left) -
         static_cast<double>(right.size()) / n * mse(right);
}

namespace {

double impurity(double sum, double sumsq, double n) {
  const double mean = sum / n;
  return std::max(0.0, sumsq / n - mean * mean);
}

double majority(const Dataset& data, std::span<const std::size_t> rows) {
  std::map<double, std::size_t> counts;
  for (const auto r : rows) ++counts[data.y[r]];
  double best = 0.0;
  std::size_t best_count = 0;
  for (const auto& [label, c] : counts) {
    if (c > best_count) {
      best = label;
      best_count = c;
    }
  }
  return best;
}

}  // namespace

DecisionTree DecisionTree::fit(const Dataset& data, const TreeParams& params) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit(data, params, rows);
}

DecisionTree DecisionTree::fit(const Dataset& data, const TreeParams& params,
                               std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("fit: no training rows");
  std::vector<int> columns = params.columns;
  if (columns.empty()) {
    columns.resize(static_cast<std::size_t>(data.width));
    std::iota(columns.begin(), columns.end(), 0);
  }
  std::sort(columns.begin(), columns.end());
  columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
  for (const int c : columns)
    if (c < 0 || c >= data.width) throw std::out_of_range("fit: column out of range");

  DecisionTree tree;
  tree.width_ = data.width;
  tree.kind_ = params.kind;
  std::vector<std::size_t> working(rows.begin(), rows.end());
  tree.build(data, params, working, columns, 0);
  return tree;
}

int DecisionTree::build(const Dataset& data, const TreeParams& params,
                        std::vector<std::size_t>& rows, const std::vector<int>& columns,
                        int depth) {
  const std::size_t n = rows.size();
  const double nd = static_cast<double>(n);
  double sum = 0.0, sumsq = 0.0;
  for (const auto r : rows) {
    sum += data.y[r];
    sumsq += data.y[r] * data.y[r];
  }

  const int id = static_cast<int>(nodes_.size());
  Node node;
  node.count = n;
  node.value = params.kind == TreeKind::regression ? sum / nd : majority(data, rows);
  nodes_.push_back(node);

  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_samples_leaf));
  if (depth >= params.max_depth || n < 2 * min_leaf) return id;
  const double parent_error = impurity(sum, sumsq, nd);
  if (parent_error <= 0.0) return id;

  const double tolerance = 1e-12 * std::max(1.0, parent_error);
  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::pair<double, double>> values(n);
  for (const int c : columns) {
    for (std::size_t i = 0; i < n; ++i) values[i] = {data.row(rows[i])[c], data.y[rows[i]]};
    std::sort(values.begin(), values.end());
    double left_sum = 0.0, left_sumsq = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      left_sum += values[k - 1].second;
      left_sumsq += values[k - 1].second * values[k - 1].second;
      if (values[k - 1].first == values[k].first) continue;
      if (k < min_leaf || n - k < min_leaf) continue;
      const double kd = static_cast<double>(k);
      const double left_error = impurity(left_sum, left_sumsq, kd);
      const double right_error = impurity(sum - left_sum, sumsq - left_sumsq, nd - kd);
      const double gain = params.gain == GainRule::unweighted
                              ? parent_error - left_error - right_error
                              : parent_error - kd / nd * left_error - (nd - kd) / nd * right_error;
      if (gain > best_gain + tolerance) {
        best_gain = gain;
        best_feature = c;
        best_threshold = values[k - 1].first;
      }
    }
  }
  if (best_feature < 0) return id;

  std::vector<std::size_t> left, right;
  for (const auto r : rows) (data.row(r)[best_feature] <= best_threshold ? left : right).push_back(r);
  nodes_[id].feature = best_feature;
  nodes_[id].threshold = best_threshold;
  const int l = build(data, params, left, columns, depth + 1);
  nodes_[id].left = l;
  const int r = build(data, params, right, columns, depth + 1);
  nodes_[id].right = r;
  return id;
}

int DecisionTree::leaf_of(std::span<const double> x) const {
  if (nodes_.empty()) throw std::logic_error("predict on an untrained tree");
  if (static_cast<int>(x.size()) != width_)
    throw std::invalid_argument(
        fmt::format("predict: expected {} features, got {}", width_, x.size()));
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

double DecisionTree::predict(std::span<const double> x) const { return nodes_[leaf_of(x)].value; }

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> d(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

void DecisionTree::serialize(std::ostream& out) const {
  out << fmt::format("tree {} width {} nodes {}\n",
                     kind_ == TreeKind::regression ? "regression" : "classification", width_,
                     nodes_.size());
  // Nodes are stored in preorder already: a node is followed by its left subtree.
  for (const auto& n : nodes_) {
    if (n.is_leaf()) {
      out << fmt::format("L {} {}\n", n.value, n.count);
    } else {
      out << fmt::format("S {} {} {} {}\n", n.feature, n.threshold, n.value, n.count);
    }
  }
}

std::string DecisionTree::serialize() const {
  std::ostringstream out;
  serialize(out);
  return out.str();
}

namespace {

int parse_node(std::istream& in, std::vector<DecisionTree::Node>& nodes, std::size_t limit) {
  if (nodes.size() >= limit) throw std::runtime_error("tree: more nodes than declared");
  std::string tag;
  if (!(in >> tag)) throw std::runtime_error("tree: truncated node list");
  DecisionTree::Node node;
  if (tag == "L") {
    if (!(in >> node.value >> node.count)) throw std::runtime_error("tree: bad leaf line");
  } else if (tag == "S") {
    if (!(in >> node.feature >> node.threshold >> node.value >> node.count) || node.feature < 0)
      throw std::runtime_error("tree: bad split line");
  } else {
    throw std::runtime_error("tree: unknown node tag '" + tag + "'");
  }
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(node);
  if (!node.is_leaf()) {
    const int l = parse_node(in, nodes, limit);
    nodes[id].left = l;
    const int r = parse_node(in, nodes, limit);
    nodes[id].right = r;
  }
  return id;
}

}  // namespace

DecisionTree DecisionTree::parse(std::istream& in) {
  std::string word, kind, w, n;
  int width = 0;
  std::size_t count = 0;
  if (!(in >> word >> kind >> w >> width >> n >> count) || word != "tree" || w != "width" ||
      n != "nodes")
    throw std::runtime_error("tree: bad header");
  DecisionTree tree;
  if (kind == "regression") {
    tree.kind_ = TreeKind::regression;
  } else if (kind == "classification") {
    tree.kind_ = TreeKind::classification;
  } else {
    throw std::runtime_error("tree: unknown kind '" + kind + "'");
  }
  tree.width_ = width;
  if (count == 0) throw std::runtime_error("tree: no nodes");
  parse_node(in, tree.nodes_, count);
  if (tree.nodes_.size() != count) throw std::runtime_error("tree: node count mismatch");
  for (const auto& node : tree.nodes_)
    if (!node.is_leaf() && node.feature >= width) throw std::runtime_error("tree: feature index");
  return tree;
}

bool DecisionTree::operator==(const DecisionTree& o) const {
  if (width_ != o.width_ || kind_ != o.kind_ || nodes_.size() != o.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = o.nodes_[i];
    if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
        a.right != b.right || a.value != b.value || a.count != b.count)
      return false;
  }
  return true;
}

}  // namespace sigattack
