#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nestag/corpus.h"
#include "nestag/schema.h"
#include "nestag/tagcodec.h"

namespace nestag {

/// How the two annotation levels are handled.
///   m1    two independent single-level taggers, merged at prediction time
///   m2    one tagger over joint labels, plain cross-entropy
///   m3    one tagger over joint labels, hierarchical cross-entropy
///   flat  one tagger over the flattened label set (baseline)
enum class Strategy { m1, m2, m3, flat };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 16;   // entries per step
  int max_steps = 5000;
  int patience = 5;      // evaluations without improvement before stopping
  int eval_every = 100;  // steps between dev evaluations
  double alpha = 0.0;    // edge-weight decay of the hierarchical loss (m3)
  int hash_bits = 17;    // feature space is 2^hash_bits
  uint64_t seed = 0;

  /// key = value lines, # comments. Unknown keys are an error.
  static TrainConfig parse(const std::string& text);
  static TrainConfig load_file(const std::string& path);
};

/// One linear scoring head: score(tag) = sum of weight columns of the
/// token's hashed features. weights is feature-major, tags.size() entries
/// per feature.
struct Head {
  std::string name;  // l1, l2, joint, flat
  TagMode mode = TagMode::joint;
  std::vector<std::string> tags;
  std::vector<float> weights;
};

struct Model {
  Strategy strategy = Strategy::m2;
  TagFormat format = TagFormat::io;
  uint64_t schema_fp = 0;
  int hash_bits = 17;
  double alpha = 0.0;
  std::vector<Head> heads;

  /// Binary container: magic, JSON header, one raw float32 blob per head.
  /// Identical training runs serialize to identical bytes.
  void save(const std::string& path) const;
  static Model load(const std::string& path, const LabelSchema& schema);
};

/// Hashed features of tokens[i]: word/lowercase/shape in a +-2 window,
/// prefixes, suffixes and character bigrams of the center token, and a bias.
std::vector<uint32_t> token_features(const std::vector<Token>& tokens, size_t i, int hash_bits);

struct HeadStats {
  std::string name;
  double best_dev_f1 = 0.0;
  int best_step = 0;   // 0 when no evaluation ever ran
  int steps_run = 0;
};

struct TrainResult {
  Model model;
  std::vector<HeadStats> heads;
};

/// Mini-batch AdamW on zero-initialized weights, evaluated on dev every
/// eval_every steps; keeps the best-scoring weights. m1 trains its two heads
/// as fully separate runs (own shuffling streams, own stopping), so one
/// level's labels can never influence the other head.
TrainResult train(Strategy strategy, TagFormat format, const Corpus& train_set,
                  const Corpus& dev_set, const LabelSchema& schema, const TrainConfig& cfg);

/// Argmax tags for one head; ties resolve to the lowest tag index.
TagSequence predict_head(const Model& model, const Head& head, const std::vector<Token>& tokens);

/// Predictions as a scorable entry (entities decoded from the tag streams,
/// input annotations ignored).
AnnotatedEntry predict_entry(const Model& model, const AnnotatedEntry& input);

Corpus predict_corpus(const Model& model, const Corpus& input);

}  // namespace nestag
