#include "nestag/hxe.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nestag {

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (auto& p : out) p /= z;
  return out;
}

namespace {

double subtree_sum(const LabelTree& tree, const std::vector<double>& probs, int node) {
  const auto& n = tree.nodes[node];
  double s = 0.0;
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) s += probs[i];
  return s;
}

std::vector<int> root_path(const LabelTree& tree, int gold_leaf) {
  if (gold_leaf < 0 || gold_leaf >= static_cast<int>(tree.leaf_node.size()))
    throw std::invalid_argument("gold leaf index out of range");
  std::vector<int> path;  // leaf first, root last
  for (int v = tree.leaf_node[gold_leaf]; v >= 0; v = tree.nodes[v].parent) path.push_back(v);
  return path;
}

}  // namespace

double node_probability(const LabelTree& tree, const std::vector<double>& leaf_probs, int node) {
  if (node < 0 || node >= static_cast<int>(tree.nodes.size()))
    throw std::invalid_argument("node id out of range");
  if (leaf_probs.size() != tree.tags.size())
    throw std::invalid_argument("probability vector does not match the leaf count");
  return subtree_sum(tree, leaf_probs, node);
}

double hxe_loss(const LabelTree& tree, const std::vector<double>& leaf_probs, int gold_leaf,
                const HxeConfig& cfg) {
  if (leaf_probs.size() != tree.tags.size())
    throw std::invalid_argument("probability vector does not match the leaf count");
  std::vector<int> path = root_path(tree, gold_leaf);
  double loss = 0.0;
  for (size_t k = 0; k + 1 < path.size(); ++k) {
    double child = subtree_sum(tree, leaf_probs, path[k]);
    double parent = subtree_sum(tree, leaf_probs, path[k + 1]);
    double cond = parent > 0.0 ? child / parent : 0.0;
    double w = std::exp(-cfg.alpha * tree.nodes[path[k]].depth);
    loss -= w * std::log(std::max(cond, cfg.epsilon));
  }
  return loss;
}

std::vector<double> hxe_gradient(const LabelTree& tree, const std::vector<double>& logits,
                                 int gold_leaf, const HxeConfig& cfg) {
  if (logits.size() != tree.tags.size())
    throw std::invalid_argument("logit vector does not match the leaf count");
  std::vector<double> s = softmax(logits);
  std::vector<int> path = root_path(tree, gold_leaf);
  std::vector<double> grad(s.size(), 0.0);

  // d loss / d z_j accumulated edge by edge:
  //   -w * (1[j under child] s_j / S(child) - 1[j under parent] s_j / S(parent))
  // The root sum is taken as exactly 1 so that with a trivial tree and
  // alpha = 0 the result is bit for bit the cross-entropy gradient.
  for (size_t k = 0; k + 1 < path.size(); ++k) {
    const auto& child = tree.nodes[path[k]];
    const auto& parent = tree.nodes[path[k + 1]];
    double sc = subtree_sum(tree, s, path[k]);
    double sp = parent.parent < 0 ? 1.0 : subtree_sum(tree, s, path[k + 1]);
    if (sp <= 0.0 || sc / sp <= cfg.epsilon) continue;  // floored term, constant loss
    double w = std::exp(-cfg.alpha * child.depth);
    for (int j = child.leaf_begin; j < child.leaf_end; ++j) grad[j] -= w * (s[j] / sc);
    for (int j = parent.leaf_begin; j < parent.leaf_end; ++j) grad[j] += w * (s[j] / sp);
  }
  return grad;
}

double ce_loss(const std::vector<double>& probs, int gold, double epsilon) {
  if (gold < 0 || gold >= static_cast<int>(probs.size()))
    throw std::invalid_argument("gold index out of range");
  return -std::log(std::max(probs[gold], epsilon));
}

std::vector<double> ce_gradient(const std::vector<double>& logits, int gold) {
  if (gold < 0 || gold >= static_cast<int>(logits.size()))
    throw std::invalid_argument("gold index out of range");
  std::vector<double> grad = softmax(logits);
  grad[gold] -= 1.0;
  return grad;
}

}  // namespace nestag
