#pragma once

#include <vector>

#include "nestag/schema.h"

namespace nestag {

// Tree-aware classification loss over the joint tag vocabulary.
//
// The probability of an internal tree node is the sum of the leaf
// probabilities below it, and the loss walks the root path of the gold leaf,
// charging each edge for the conditional probability of taking it:
//
//   loss = - sum over path edges of  w(node) * log p(node | parent)
//   w(node) = exp(-alpha * depth(node)), root depth 0
//
// With alpha = 0 every edge weighs 1 and the conditionals telescope to the
// plain cross entropy of the gold leaf, whatever the tree shape. With
// alpha > 0 deeper edges weigh less, so probability mass placed on a wrong
// leaf that shares ancestors with the gold leaf is cheaper than mass in a
// distant branch: mistakes between labels of the same level-1 type cost less
// than mistakes across level-1 types.

struct HxeConfig {
  double alpha = 0.0;
  double epsilon = 1e-12;  // probability floor inside logs
};

/// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

/// Sum of leaf probabilities under a node (the node id, not a leaf index).
double node_probability(const LabelTree& tree, const std::vector<double>& leaf_probs, int node);

double hxe_loss(const LabelTree& tree, const std::vector<double>& leaf_probs, int gold_leaf,
                const HxeConfig& cfg);

/// Gradient of hxe_loss(softmax(logits)) with respect to the logits.
std::vector<double> hxe_gradient(const LabelTree& tree, const std::vector<double>& logits,
                                 int gold_leaf, const HxeConfig& cfg);

double ce_loss(const std::vector<double>& probs, int gold, double epsilon = 1e-12);

/// softmax(logits) minus the gold one-hot.
std::vector<double> ce_gradient(const std::vector<double>& logits, int gold);

}  // namespace nestag
