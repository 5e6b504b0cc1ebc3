#include "nestag/tagger.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "nestag/hxe.h"
#include "nestag/metrics.h"
#include "nestag/rng.h"
#include "nestag/utf8.h"

namespace nestag {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::m1: return "m1";
    case Strategy::m2: return "m2";
    case Strategy::m3: return "m3";
    case Strategy::flat: return "flat";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "m1") return Strategy::m1;
  if (s == "m2") return Strategy::m2;
  if (s == "m3") return Strategy::m3;
  if (s == "flat") return Strategy::flat;
  throw std::invalid_argument("unknown strategy '" + s + "' (expected m1, m2, m3 or flat)");
}

// ---------------------------------------------------------------------------
// Config

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    size_t b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r\n");
    std::string t = line.substr(b, e - b + 1);
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    auto trim = [](std::string s) {
      size_t x = s.find_first_not_of(" \t");
      if (x == std::string::npos) return std::string();
      size_t y = s.find_last_not_of(" \t");
      return s.substr(x, y - x + 1);
    };
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    auto bad_value = [&]() {
      return std::invalid_argument("config line " + std::to_string(lineno) + ": bad value '" +
                                   value + "' for " + key);
    };
    auto as_double = [&](double& out) {
      size_t pos = 0;
      try {
        out = std::stod(value, &pos);
      } catch (const std::exception&) {
        throw bad_value();
      }
      if (pos != value.size()) throw bad_value();
    };
    auto as_int = [&](int& out) {
      size_t pos = 0;
      try {
        out = std::stoi(value, &pos);
      } catch (const std::exception&) {
        throw bad_value();
      }
      if (pos != value.size()) throw bad_value();
    };
    if (key == "lr") {
      as_double(cfg.lr);
    } else if (key == "weight_decay") {
      as_double(cfg.weight_decay);
    } else if (key == "batch_size") {
      as_int(cfg.batch_size);
    } else if (key == "max_steps") {
      as_int(cfg.max_steps);
    } else if (key == "patience") {
      as_int(cfg.patience);
    } else if (key == "eval_every") {
      as_int(cfg.eval_every);
    } else if (key == "alpha") {
      as_double(cfg.alpha);
    } else if (key == "hash_bits") {
      as_int(cfg.hash_bits);
    } else if (key == "seed") {
      size_t pos = 0;
      try {
        cfg.seed = std::stoull(value, &pos);
      } catch (const std::exception&) {
        throw bad_value();
      }
      if (pos != value.size()) throw bad_value();
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    }
  }
  return cfg;
}

TrainConfig TrainConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

namespace {

void check_config(const TrainConfig& cfg) {
  if (cfg.lr <= 0) throw std::invalid_argument("lr must be positive");
  if (cfg.weight_decay < 0) throw std::invalid_argument("weight_decay must be non-negative");
  if (cfg.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (cfg.max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (cfg.patience <= 0) throw std::invalid_argument("patience must be positive");
  if (cfg.eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (cfg.alpha < 0) throw std::invalid_argument("alpha must be non-negative");
  if (cfg.hash_bits < 8 || cfg.hash_bits > 26)
    throw std::invalid_argument("hash_bits must be between 8 and 26");
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

namespace {

std::string token_shape(const std::string& text) {
  std::string shape;
  char prev = 0;
  for (uint32_t cp : decode_utf8(text)) {
    char c;
    if (cp >= 'A' && cp <= 'Z')
      c = 'X';
    else if (cp >= 'a' && cp <= 'z')
      c = 'x';
    else if (cp >= '0' && cp <= '9')
      c = '9';
    else if (cp < 128)
      c = 'p';
    else
      c = 'u';
    if (c != prev) shape += c;  // squeezed: "Quincampoix" -> "Xx", "157" -> "9"
    prev = c;
  }
  return shape;
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 32;
  return out;
}

}  // namespace

std::vector<uint32_t> token_features(const std::vector<Token>& tokens, size_t i, int hash_bits) {
  const uint64_t mask = (1ull << hash_bits) - 1;
  std::vector<uint32_t> out;
  out.reserve(32);
  std::string buf;
  buf.reserve(48);
  auto add = [&](const std::string& s) {
    out.push_back(static_cast<uint32_t>(fnv1a64(s) & mask));
  };

  add("b");
  for (int off = -2; off <= 2; ++off) {
    long j = static_cast<long>(i) + off;
    std::string word =
        j < 0 ? "<s>" : (j >= static_cast<long>(tokens.size()) ? "</s>" : tokens[j].text);
    std::string pos = std::to_string(off);
    buf = "w" + pos + "=" + word;
    add(buf);
    buf = "l" + pos + "=" + ascii_lower(word);
    add(buf);
    buf = "s" + pos + "=" + token_shape(word);
    add(buf);
  }

  // center-token character features, codepoint based
  std::u32string cps = decode_utf8(tokens[i].text);
  for (size_t n = 2; n <= 4; ++n) {
    if (cps.size() < n) break;
    buf = "p" + std::to_string(n) + "=";
    for (size_t k = 0; k < n; ++k) append_utf8(buf, cps[k]);
    add(buf);
    buf = "q" + std::to_string(n) + "=";
    for (size_t k = cps.size() - n; k < cps.size(); ++k) append_utf8(buf, cps[k]);
    add(buf);
  }
  for (size_t k = 0; k + 1 < cps.size(); ++k) {
    buf = "g=";
    append_utf8(buf, cps[k]);
    append_utf8(buf, cps[k + 1]);
    add(buf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

using FeatureCache = std::vector<std::vector<std::vector<uint32_t>>>;  // entry / token / feature

FeatureCache build_features(const Corpus& corpus, int hash_bits) {
  FeatureCache cache(corpus.entries.size());
  for (size_t e = 0; e < corpus.entries.size(); ++e) {
    const auto& tokens = corpus.entries[e].tokens;
    cache[e].resize(tokens.size());
    for (size_t t = 0; t < tokens.size(); ++t)
      cache[e][t] = token_features(tokens, t, hash_bits);
  }
  return cache;
}

std::vector<std::vector<int>> gold_indices(const Corpus& corpus, TagFormat format, TagMode mode,
                                           const LabelSchema& schema,
                                           const std::vector<std::string>& vocab) {
  std::map<std::string, int> index;
  for (size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> gold(corpus.entries.size());
  for (size_t e = 0; e < corpus.entries.size(); ++e) {
    TagSequence seq = mode == TagMode::flat
                          ? encode(corpus.entries[e], format, mode, schema)
                          : encode_tags(corpus.entries[e], format, mode);
    gold[e].reserve(seq.tags.size());
    for (const auto& tag : seq.tags) {
      auto it = index.find(tag);
      if (it == index.end())
        throw std::logic_error("gold tag '" + tag + "' missing from the head vocabulary");
      gold[e].push_back(it->second);
    }
  }
  return gold;
}

void argmax_tags(const Head& head, const std::vector<std::vector<uint32_t>>& feats,
                 TagFormat format, TagSequence& out) {
  const int T = static_cast<int>(head.tags.size());
  out.format = format;
  out.mode = head.mode;
  out.tags.clear();
  out.tags.reserve(feats.size());
  std::vector<double> z(T);
  for (const auto& fs : feats) {
    std::fill(z.begin(), z.end(), 0.0);
    for (uint32_t f : fs) {
      const float* col = head.weights.data() + static_cast<size_t>(f) * T;
      for (int t = 0; t < T; ++t) z[t] += col[t];
    }
    int best = 0;
    for (int t = 1; t < T; ++t)
      if (z[t] > z[best]) best = t;  // ties keep the lowest index
    out.tags.push_back(head.tags[best]);
  }
}

double eval_head_f1(const Head& head, const Corpus& dev, const FeatureCache& dev_feats,
                    TagFormat format, const LabelSchema& schema, Scope scope) {
  std::vector<AnnotatedEntry> preds;
  preds.reserve(dev.entries.size());
  TagSequence seq;
  for (size_t e = 0; e < dev.entries.size(); ++e) {
    const auto& entry = dev.entries[e];
    argmax_tags(head, dev_feats[e], format, seq);
    preds.push_back(decode_entry(entry.source_id, entry.text, entry.tokens, seq));
  }
  return score_scope(dev.entries, preds, scope, format, schema).f1();
}

struct LossFn {
  const LabelTree* tree = nullptr;  // null: plain cross-entropy
  HxeConfig hxe;

  std::vector<double> gradient(const std::vector<double>& logits, int gold) const {
    return tree ? hxe_gradient(*tree, logits, gold, hxe) : ce_gradient(logits, gold);
  }
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

HeadStats train_head(Head& head, const Corpus& train_set, const FeatureCache& train_feats,
                     const std::vector<std::vector<int>>& gold, const Corpus& dev_set,
                     const FeatureCache& dev_feats, TagFormat format, const LabelSchema& schema,
                     const TrainConfig& cfg, const LossFn& loss, Scope dev_scope) {
  const int T = static_cast<int>(head.tags.size());
  const size_t F = 1ull << cfg.hash_bits;
  head.weights.assign(F * T, 0.0f);
  std::vector<float> m(F * T, 0.0f), v(F * T, 0.0f);
  std::vector<int> last_touch(F, 0);
  const double keep = 1.0 - cfg.lr * cfg.weight_decay;  // decoupled decay per step

  std::mt19937_64 g(cfg.seed ^ fnv1a64("head:" + head.name));
  std::vector<size_t> order(train_set.entries.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size();  // forces a shuffle before the first batch

  // weight columns are updated lazily; this catches the decay up everywhere
  auto flush_decay = [&](int step) {
    for (size_t f = 0; f < F; ++f) {
      int lag = step - last_touch[f];
      if (lag <= 0) continue;
      double d = std::pow(keep, lag);
      float* col = head.weights.data() + f * T;
      for (int t = 0; t < T; ++t) col[t] = static_cast<float>(col[t] * d);
      last_touch[f] = step;
    }
  };

  HeadStats stats;
  stats.name = head.name;
  stats.best_dev_f1 = -1.0;
  std::vector<float> best_weights;
  int stale = 0;
  const bool has_dev = !dev_set.entries.empty();

  std::vector<std::pair<uint32_t, int>> touches;
  std::vector<std::vector<double>> token_grads;
  std::vector<double> z(T), col_grad(T);

  for (int step = 1; step <= cfg.max_steps; ++step) {
    touches.clear();
    token_grads.clear();
    int batch_tokens = 0;
    for (int k = 0; k < cfg.batch_size; ++k) {
      if (cursor >= order.size()) {
        shuffle_vec(order, g);
        cursor = 0;
      }
      size_t ei = order[cursor++];
      const auto& feats = train_feats[ei];
      for (size_t ti = 0; ti < feats.size(); ++ti) {
        std::fill(z.begin(), z.end(), 0.0);
        for (uint32_t f : feats[ti]) {
          const float* col = head.weights.data() + static_cast<size_t>(f) * T;
          for (int t = 0; t < T; ++t) z[t] += col[t];
        }
        int gi = static_cast<int>(token_grads.size());
        token_grads.push_back(loss.gradient(z, gold[ei][ti]));
        for (uint32_t f : feats[ti]) touches.emplace_back(f, gi);
        ++batch_tokens;
      }
    }
    stats.steps_run = step;
    if (batch_tokens == 0) continue;

    std::sort(touches.begin(), touches.end());
    const double scale = 1.0 / batch_tokens;
    const double bc1 = 1.0 - std::pow(kBeta1, step);
    const double bc2 = 1.0 - std::pow(kBeta2, step);
    size_t i = 0;
    while (i < touches.size()) {
      uint32_t f = touches[i].first;
      std::fill(col_grad.begin(), col_grad.end(), 0.0);
      while (i < touches.size() && touches[i].first == f) {
        const auto& gr = token_grads[touches[i].second];
        for (int t = 0; t < T; ++t) col_grad[t] += gr[t];
        ++i;
      }
      size_t base = static_cast<size_t>(f) * T;
      int lag = (step - 1) - last_touch[f];
      if (lag > 0) {
        double d = std::pow(keep, lag);
        for (int t = 0; t < T; ++t)
          head.weights[base + t] = static_cast<float>(head.weights[base + t] * d);
      }
      last_touch[f] = step;
      for (int t = 0; t < T; ++t) {
        double grad = col_grad[t] * scale;
        double mm = kBeta1 * m[base + t] + (1.0 - kBeta1) * grad;
        double vv = kBeta2 * v[base + t] + (1.0 - kBeta2) * grad * grad;
        m[base + t] = static_cast<float>(mm);
        v[base + t] = static_cast<float>(vv);
        double w = head.weights[base + t] * keep;
        w -= cfg.lr * (mm / bc1) / (std::sqrt(vv / bc2) + kAdamEps);
        head.weights[base + t] = static_cast<float>(w);
      }
    }

    if (has_dev && step % cfg.eval_every == 0) {
      flush_decay(step);
      double f1 = eval_head_f1(head, dev_set, dev_feats, format, schema, dev_scope);
      if (f1 > stats.best_dev_f1) {
        stats.best_dev_f1 = f1;
        stats.best_step = step;
        best_weights = head.weights;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
  }

  flush_decay(stats.steps_run);
  if (!best_weights.empty()) head.weights = std::move(best_weights);
  if (stats.best_dev_f1 < 0) stats.best_dev_f1 = 0.0;
  return stats;
}

}  // namespace

TrainResult train(Strategy strategy, TagFormat format, const Corpus& train_set,
                  const Corpus& dev_set, const LabelSchema& schema, const TrainConfig& cfg) {
  check_config(cfg);
  if (train_set.entries.empty()) throw std::invalid_argument("training corpus is empty");

  TrainResult result;
  result.model.strategy = strategy;
  result.model.format = format;
  result.model.schema_fp = schema.fingerprint();
  result.model.hash_bits = cfg.hash_bits;
  result.model.alpha = strategy == Strategy::m3 ? cfg.alpha : 0.0;

  FeatureCache train_feats = build_features(train_set, cfg.hash_bits);
  FeatureCache dev_feats = build_features(dev_set, cfg.hash_bits);

  struct HeadPlan {
    std::string name;
    TagMode mode;
    Scope dev_scope;
  };
  std::vector<HeadPlan> plans;
  switch (strategy) {
    case Strategy::m1:
      plans = {{"l1", TagMode::l1, Scope::l1}, {"l2", TagMode::l2, Scope::l2}};
      break;
    case Strategy::m2:
    case Strategy::m3:
      plans = {{"joint", TagMode::joint, Scope::all}};
      break;
    case Strategy::flat:
      plans = {{"flat", TagMode::flat, Scope::flat}};
      break;
  }

  LabelTree tree;
  if (strategy == Strategy::m3) tree = build_label_tree(schema, format);

  for (const auto& plan : plans) {
    Head head;
    head.name = plan.name;
    head.mode = plan.mode;
    head.tags = tag_vocabulary(schema, format, plan.mode);

    LossFn loss;
    if (strategy == Strategy::m3) {
      if (tree.tags != head.tags)
        throw std::logic_error("label tree leaves disagree with the joint tag vocabulary");
      loss.tree = &tree;
      loss.hxe.alpha = cfg.alpha;
    }

    auto gold = gold_indices(train_set, format, plan.mode, schema, head.tags);
    HeadStats stats = train_head(head, train_set, train_feats, gold, dev_set, dev_feats, format,
                                 schema, cfg, loss, plan.dev_scope);
    result.model.heads.push_back(std::move(head));
    result.heads.push_back(stats);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prediction

TagSequence predict_head(const Model& model, const Head& head, const std::vector<Token>& tokens) {
  std::vector<std::vector<uint32_t>> feats(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t)
    feats[t] = token_features(tokens, t, model.hash_bits);
  TagSequence seq;
  argmax_tags(head, feats, model.format, seq);
  return seq;
}

namespace {

const Head& head_by_name(const Model& model, const std::string& name) {
  for (const auto& h : model.heads)
    if (h.name == name) return h;
  throw std::logic_error("model has no head named '" + name + "'");
}

}  // namespace

AnnotatedEntry predict_entry(const Model& model, const AnnotatedEntry& input) {
  std::vector<std::vector<uint32_t>> feats(input.tokens.size());
  for (size_t t = 0; t < input.tokens.size(); ++t)
    feats[t] = token_features(input.tokens, t, model.hash_bits);

  TagSequence seq;
  if (model.strategy == Strategy::m1) {
    TagSequence s1, s2;
    argmax_tags(head_by_name(model, "l1"), feats, model.format, s1);
    argmax_tags(head_by_name(model, "l2"), feats, model.format, s2);
    seq = compose_joint(s1, s2);
  } else {
    const Head& head = model.heads.at(0);
    argmax_tags(head, feats, model.format, seq);
  }
  return decode_entry(input.source_id, input.text, input.tokens, seq);
}

Corpus predict_corpus(const Model& model, const Corpus& input) {
  Corpus out;
  out.schema_fingerprint = model.schema_fp;
  out.provenance = input.provenance;
  out.entries.reserve(input.entries.size());
  for (const auto& entry : input.entries) out.entries.push_back(predict_entry(model, entry));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'N', 'S', 'T', 'G', 'M', 'D', 'L', '1'};

void put_u32(std::ostream& out, uint32_t x) {
  char b[4] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
               static_cast<char>((x >> 16) & 0xff), static_cast<char>((x >> 24) & 0xff)};
  out.write(b, 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::invalid_argument("model file truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void Model::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  out.write(kMagic, 8);

  nlohmann::ordered_json h;
  h["strategy"] = to_string(strategy);
  h["format"] = to_string(format);
  char fp[17];
  std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(schema_fp));
  h["schema_fp"] = fp;
  h["hash_bits"] = hash_bits;
  h["alpha"] = alpha;
  h["heads"] = nlohmann::ordered_json::array();
  for (const auto& head : heads) {
    nlohmann::ordered_json jh;
    jh["name"] = head.name;
    jh["mode"] = to_string(head.mode);
    jh["tags"] = head.tags;
    h["heads"].push_back(std::move(jh));
  }
  std::string hs = h.dump();
  put_u32(out, static_cast<uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  // float32 blobs, little-endian (this writer only targets LE hosts)
  for (const auto& head : heads) {
    put_u32(out, static_cast<uint32_t>(head.weights.size()));
    out.write(reinterpret_cast<const char*>(head.weights.data()),
              static_cast<std::streamsize>(head.weights.size() * sizeof(float)));
  }
  if (!out) throw std::invalid_argument("write failed: " + path);
}

Model Model::load(const std::string& path, const LabelSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::invalid_argument("not a model file: " + path);

  uint32_t hlen = get_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw std::invalid_argument("model file truncated: " + path);

  Model model;
  try {
    auto h = nlohmann::ordered_json::parse(hs);
    model.strategy = strategy_from_string(h.at("strategy").get<std::string>());
    model.format = tag_format_from_string(h.at("format").get<std::string>());
    model.schema_fp = std::stoull(h.at("schema_fp").get<std::string>(), nullptr, 16);
    model.hash_bits = h.at("hash_bits").get<int>();
    model.alpha = h.at("alpha").get<double>();
    for (const auto& jh : h.at("heads")) {
      Head head;
      head.name = jh.at("name").get<std::string>();
      head.mode = tag_mode_from_string(jh.at("mode").get<std::string>());
      head.tags = jh.at("tags").get<std::vector<std::string>>();
      model.heads.push_back(std::move(head));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("bad model header: ") + ex.what());
  }

  if (model.schema_fp != schema.fingerprint())
    throw std::invalid_argument(
        "model was trained against a different schema (fingerprint mismatch)");

  for (auto& head : model.heads) {
    uint32_t n = get_u32(in);
    size_t expect = (1ull << model.hash_bits) * head.tags.size();
    if (n != expect)
      throw std::invalid_argument("model weight blob has wrong size for head " + head.name);
    head.weights.resize(n);
    in.read(reinterpret_cast<char*>(head.weights.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw std::invalid_argument("model file truncated: " + path);
  }
  return model;
}

}  // namespace nestag
