#include "nestag/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "nestag/rng.h"
#include "nestag/utf8.h"

namespace nestag {

namespace {

int cp_count(const std::string& s) { return static_cast<int>(decode_utf8(s).size()); }

void check_unique_ids(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const auto& e : corpus.entries)
    if (!ids.insert(e.source_id).second)
      throw std::invalid_argument("duplicate source_id '" + e.source_id + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open for reading: " + path);
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------
// TSV

void write_tsv(const Corpus& corpus, std::ostream& out, TagFormat format) {
  out << "# token\tl1\tl2\n";
  for (const auto& entry : corpus.entries) {
    out << "# source_id = " << entry.source_id << "\n";
    TagSequence l1 = encode_tags(entry, format, TagMode::l1);
    TagSequence l2 = encode_tags(entry, format, TagMode::l2);
    for (size_t i = 0; i < entry.tokens.size(); ++i)
      out << entry.tokens[i].text << "\t" << l1.tags[i] << "\t" << l2.tags[i] << "\n";
    out << "\n";
  }
}

void write_tsv_file(const Corpus& corpus, const std::string& path, TagFormat format) {
  auto out = open_out(path);
  write_tsv(corpus, out, format);
}

namespace {

// Rebuild an entry from token rows; text is the canonical space-joined form.
AnnotatedEntry entry_from_rows(const std::string& source_id, const std::vector<std::string>& words,
                               const std::vector<std::string>& t1,
                               const std::vector<std::string>& t2, TagFormat format,
                               int first_line) {
  std::string text;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) text += ' ';
    text += words[i];
  }
  // The token column must survive tokenization of the joined text, otherwise
  // the same entry would come out different from the JSONL side.
  std::vector<Token> tokens = tokenize(text);
  if (tokens.size() != words.size())
    throw std::invalid_argument("tsv entry near line " + std::to_string(first_line) +
                                ": token column re-tokenizes differently (" +
                                std::to_string(words.size()) + " rows, " +
                                std::to_string(tokens.size()) + " tokens)");
  for (size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].text != words[i])
      throw std::invalid_argument("tsv entry near line " + std::to_string(first_line) +
                                  ": token '" + words[i] + "' re-tokenizes differently");

  TagSequence joint =
      compose_joint(TagSequence{format, TagMode::l1, t1}, TagSequence{format, TagMode::l2, t2});
  AnnotatedEntry entry = decode_entry(source_id, text, tokens, joint);
  return entry;
}

}  // namespace

Corpus read_tsv(std::istream& in, const LabelSchema& schema, TagFormat format, bool validate) {
  std::set<std::string> vocab1, vocab2;
  for (const auto& t : tag_vocabulary(schema, format, TagMode::l1)) vocab1.insert(t);
  for (const auto& t : tag_vocabulary(schema, format, TagMode::l2)) vocab2.insert(t);

  Corpus corpus;
  corpus.schema_fingerprint = schema.fingerprint();
  std::vector<std::string> words, t1, t2;
  std::string source_id;
  bool in_entry = false;
  int first_line = 0, lineno = 0;

  auto flush = [&]() {
    if (!in_entry) return;
    if (words.empty())
      throw std::invalid_argument("tsv entry near line " + std::to_string(first_line) +
                                  ": no token rows");
    AnnotatedEntry entry = entry_from_rows(source_id, words, t1, t2, format, first_line);
    if (validate) validate_entry(entry, schema);
    corpus.entries.push_back(std::move(entry));
    words.clear();
    t1.clear();
    t2.clear();
    source_id.clear();
    in_entry = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const std::string prefix = "# source_id = ";
      if (line.rfind(prefix, 0) == 0) {
        flush();
        source_id = line.substr(prefix.size());
        in_entry = true;
        first_line = lineno;
      }
      continue;
    }
    size_t a = line.find('\t');
    size_t b = a == std::string::npos ? std::string::npos : line.find('\t', a + 1);
    if (a == std::string::npos || b == std::string::npos ||
        line.find('\t', b + 1) != std::string::npos)
      throw std::invalid_argument("tsv line " + std::to_string(lineno) +
                                  ": expected 3 tab-separated columns");
    std::string word = line.substr(0, a);
    std::string tag1 = line.substr(a + 1, b - a - 1);
    std::string tag2 = line.substr(b + 1);
    if (word.empty())
      throw std::invalid_argument("tsv line " + std::to_string(lineno) + ": empty token");
    if (!vocab1.count(tag1))
      throw std::invalid_argument("tsv line " + std::to_string(lineno) + ": unknown level-1 tag '" +
                                  tag1 + "'");
    if (!vocab2.count(tag2))
      throw std::invalid_argument("tsv line " + std::to_string(lineno) + ": unknown level-2 tag '" +
                                  tag2 + "'");
    if (!in_entry) {
      // entries may omit the source_id comment; make one up from the position
      in_entry = true;
      first_line = lineno;
      source_id = "entry-" + std::to_string(corpus.entries.size() + 1);
    }
    words.push_back(std::move(word));
    t1.push_back(std::move(tag1));
    t2.push_back(std::move(tag2));
  }
  flush();
  check_unique_ids(corpus);
  return corpus;
}

Corpus read_tsv_file(const std::string& path, const LabelSchema& schema, TagFormat format,
                     bool validate) {
  auto in = open_in(path);
  return read_tsv(in, schema, format, validate);
}

// ---------------------------------------------------------------------------
// JSONL

using ordered_json = nlohmann::ordered_json;

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& entry : corpus.entries) {
    ordered_json j;
    j["source_id"] = entry.source_id;
    j["text"] = entry.text;
    j["entities"] = ordered_json::array();
    for (const auto& e : entry.entities) {
      ordered_json je;
      je["type"] = e.type;
      je["level"] = e.level;
      je["begin"] = e.begin;
      je["end"] = e.end;
      je["parent"] = e.parent;
      j["entities"].push_back(std::move(je));
    }
    out << j.dump() << "\n";
  }
}

void write_jsonl_file(const Corpus& corpus, const std::string& path) {
  auto out = open_out(path);
  write_jsonl(corpus, out);
}

Corpus read_jsonl(std::istream& in, const LabelSchema& schema, bool validate) {
  Corpus corpus;
  corpus.schema_fingerprint = schema.fingerprint();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw std::invalid_argument("jsonl line " + std::to_string(lineno) + ": " + ex.what());
    }
    AnnotatedEntry entry;
    try {
      entry.source_id = j.at("source_id").get<std::string>();
      entry.text = j.at("text").get<std::string>();
      for (const auto& je : j.at("entities")) {
        Entity e;
        e.type = je.at("type").get<std::string>();
        e.level = je.at("level").get<int>();
        e.begin = je.at("begin").get<int>();
        e.end = je.at("end").get<int>();
        e.parent = je.value("parent", -1);
        entry.entities.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw std::invalid_argument("jsonl line " + std::to_string(lineno) + ": " + ex.what());
    }
    entry.tokens = tokenize(entry.text);
    if (validate) {
      try {
        validate_entry(entry, schema);
      } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument("jsonl line " + std::to_string(lineno) + ": " + ex.what());
      }
    }
    corpus.entries.push_back(std::move(entry));
  }
  check_unique_ids(corpus);
  return corpus;
}

Corpus read_jsonl_file(const std::string& path, const LabelSchema& schema, bool validate) {
  auto in = open_in(path);
  return read_jsonl(in, schema, validate);
}

std::map<std::string, std::string> read_texts_jsonl(std::istream& in) {
  std::map<std::string, std::string> texts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      ordered_json j = ordered_json::parse(line);
      std::string id = j.at("source_id").get<std::string>();
      if (!texts.emplace(id, j.at("text").get<std::string>()).second)
        throw std::invalid_argument("duplicate source_id '" + id + "'");
    } catch (const nlohmann::json::exception& ex) {
      throw std::invalid_argument("jsonl line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return texts;
}

std::map<std::string, std::string> read_texts_jsonl_file(const std::string& path) {
  auto in = open_in(path);
  return read_texts_jsonl(in);
}

void write_texts_jsonl(const std::map<std::string, std::string>& texts, std::ostream& out) {
  for (const auto& [id, text] : texts) {
    ordered_json j;
    j["source_id"] = id;
    j["text"] = text;
    out << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Noise

namespace {

// Substitutions an OCR engine plausibly makes. Digits often come out as
// letters or punctuation of similar shape, which is what makes street
// numbers fragile: a digit read as '!' or ')' does not just change the
// character, it breaks the number apart at tokenization time.
uint32_t confuse_digit(uint32_t cp, std::mt19937_64& g) {
  static const char letters[10] = {'o', 'l', 'z', 's', 'h', 's', 'b', 't', 's', 'g'};
  static const char punct[10] = {'(', '!', '?', ')', '+', '$', '&', '/', '&', ')'};
  double u = rand_unit(g);
  if (u < 0.5) return static_cast<uint32_t>(letters[cp - '0']);
  if (u < 0.75) return static_cast<uint32_t>(punct[cp - '0']);
  uint32_t other = '0' + static_cast<uint32_t>(rand_below(g, 9));
  return other >= cp ? other + 1 : other;
}

uint32_t confuse_letter(uint32_t cp, std::mt19937_64& g) {
  static const std::string from = "aceilmnorstufh";
  static const std::string to = "ocelimuncfltsb";
  bool upper = cp >= 'A' && cp <= 'Z';
  uint32_t lower = upper ? cp + 32 : cp;
  size_t k = from.find(static_cast<char>(lower));
  uint32_t out;
  if (k != std::string::npos && rand_unit(g) < 0.5) {
    out = static_cast<uint32_t>(to[k]);
  } else {
    out = 'a' + static_cast<uint32_t>(rand_below(g, 25));
    if (out >= lower && lower >= 'a' && lower <= 'z') ++out;
  }
  return upper ? out - 32 : out;
}

uint32_t random_insert_char(std::mt19937_64& g) {
  double u = rand_unit(g);
  if (u < 0.80) return 'a' + static_cast<uint32_t>(rand_below(g, 26));
  if (u < 0.95) return '0' + static_cast<uint32_t>(rand_below(g, 10));
  return ' ';
}

bool is_digit_cp(uint32_t cp) { return cp >= '0' && cp <= '9'; }
bool is_letter_cp(uint32_t cp) {
  return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

void check_noise_config(const NoiseConfig& cfg) {
  if (cfg.rate < 0.0 || cfg.rate > 1.0)
    throw std::invalid_argument("noise rate must be in [0, 1]");
  if (cfg.sub_weight < 0 || cfg.del_weight < 0 || cfg.ins_weight < 0)
    throw std::invalid_argument("noise mix weights must be non-negative");
  double sum = cfg.sub_weight + cfg.del_weight + cfg.ins_weight;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("noise mix weights must sum to 1");
  if (cfg.digit_bias < 0) throw std::invalid_argument("digit_bias must be non-negative");
}

}  // namespace

std::string noise_inject(const std::string& text, const NoiseConfig& cfg) {
  check_noise_config(cfg);
  std::u32string cps = decode_utf8(text);
  std::mt19937_64 g(cfg.seed);
  std::string out;
  out.reserve(text.size() + 8);
  for (uint32_t cp : cps) {
    double p = cfg.rate * (is_digit_cp(cp) ? cfg.digit_bias : 1.0);
    if (p > 1.0) p = 1.0;
    if (rand_unit(g) >= p) {
      append_utf8(out, cp);
      continue;
    }
    double u = rand_unit(g);
    if (u < cfg.sub_weight) {
      uint32_t repl;
      if (is_digit_cp(cp))
        repl = confuse_digit(cp, g);
      else if (is_letter_cp(cp))
        repl = confuse_letter(cp, g);
      else
        repl = 'a' + static_cast<uint32_t>(rand_below(g, 26));
      append_utf8(out, repl);
    } else if (u < cfg.sub_weight + cfg.del_weight) {
      // dropped character
    } else {
      append_utf8(out, random_insert_char(g));
      append_utf8(out, cp);
    }
  }
  return out;
}

std::map<std::string, std::string> make_noisy_texts(const Corpus& corpus, const NoiseConfig& cfg) {
  check_noise_config(cfg);
  std::map<std::string, std::string> out;
  for (const auto& entry : corpus.entries) {
    NoiseConfig local = cfg;
    local.seed = cfg.seed ^ fnv1a64(entry.source_id);
    out[entry.source_id] = noise_inject(entry.text, local);
  }
  return out;
}

Corpus build_noisy_corpus(const Corpus& gold, const std::map<std::string, std::string>& noisy,
                          ProjectionStats& stats) {
  Corpus out;
  out.schema_fingerprint = gold.schema_fingerprint;
  out.provenance = "noisy";
  out.entries = project_corpus(gold.entries, noisy, stats);
  return out;
}

// ---------------------------------------------------------------------------
// Split

std::array<Corpus, 3> split_corpus(const Corpus& corpus, const SplitRatios& ratios,
                                   uint64_t seed) {
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0)
    throw std::invalid_argument("split ratios must be non-negative");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must sum to 1");
  size_t n = corpus.entries.size();
  if (n < 3) throw std::invalid_argument("corpus too small to split (need at least 3 entries)");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 g(seed);
  shuffle_vec(order, g);

  // floor of the exact rational product; the epsilon absorbs the binary
  // representation of decimal ratios (0.6 * 8445 must give 5067, not 5066)
  size_t n_train = static_cast<size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-6));
  size_t n_dev = static_cast<size_t>(std::floor(ratios.dev * static_cast<double>(n) + 1e-6));
  if (n_train + n_dev > n) n_dev = n - n_train;  // guards rounding at the top end

  std::array<Corpus, 3> parts;
  for (auto& p : parts) {
    p.schema_fingerprint = corpus.schema_fingerprint;
    p.provenance = corpus.provenance;
  }
  for (size_t i = 0; i < n; ++i) {
    size_t which = i < n_train ? 0 : (i < n_train + n_dev ? 1 : 2);
    parts[which].entries.push_back(corpus.entries[order[i]]);
  }
  return parts;
}

// ---------------------------------------------------------------------------
// Synthesizer

namespace {

// Assembles one entry from text pieces while keeping track of entity spans.
// Pieces become one or more tokens each; a piece marked glued attaches to the
// previous text without a space, which is how ", " and "fabr." style
// punctuation gets produced.
class EntryBuilder {
 public:
  void piece(const std::string& s, bool glue = false) {
    if (!text_.empty() && !glue) {
      text_ += ' ';
      ++cp_;
    }
    int b = cp_;
    for (int i : stack_)
      if (ents_[i].b_cp < 0) ents_[i].b_cp = b;
    text_ += s;
    cp_ += cp_count(s);
  }

  void open(const std::string& type, int level) {
    int parent = -1;
    if (level == 2) {
      for (int i : stack_)
        if (ents_[i].level == 1) parent = i;
      if (parent < 0) throw std::logic_error("level-2 entity opened outside a level-1 entity");
    }
    ents_.push_back({type, level, parent, -1, -1});
    stack_.push_back(static_cast<int>(ents_.size()) - 1);
  }

  void close() {
    if (stack_.empty()) throw std::logic_error("close() with no open entity");
    int i = stack_.back();
    stack_.pop_back();
    if (ents_[i].b_cp < 0) throw std::logic_error("entity closed before any piece");
    ents_[i].e_cp = cp_;
  }

  AnnotatedEntry finish(const std::string& source_id) {
    if (!stack_.empty()) throw std::logic_error("unclosed entity at finish()");
    AnnotatedEntry entry;
    entry.source_id = source_id;
    entry.text = text_;
    entry.tokens = tokenize(text_);

    // codepoint spans -> token spans; piece boundaries are token boundaries
    auto token_span = [&](int b_cp, int e_cp) {
      int b = -1, e = -1;
      for (size_t t = 0; t < entry.tokens.size(); ++t) {
        if (entry.tokens[t].begin == b_cp) b = static_cast<int>(t);
        if (entry.tokens[t].end == e_cp) e = static_cast<int>(t) + 1;
      }
      if (b < 0 || e < 0 || e <= b)
        throw std::logic_error("entity span does not line up with token boundaries");
      return std::pair<int, int>(b, e);
    };

    // canonical order: level-1 entities by position, then level-2
    std::vector<int> l1_order, l2_order;
    for (size_t i = 0; i < ents_.size(); ++i)
      (ents_[i].level == 1 ? l1_order : l2_order).push_back(static_cast<int>(i));
    auto by_begin = [&](int a, int b) { return ents_[a].b_cp < ents_[b].b_cp; };
    std::sort(l1_order.begin(), l1_order.end(), by_begin);
    std::sort(l2_order.begin(), l2_order.end(), by_begin);

    std::vector<int> final_index(ents_.size(), -1);
    for (size_t k = 0; k < l1_order.size(); ++k) final_index[l1_order[k]] = static_cast<int>(k);

    for (int i : l1_order) {
      auto [b, e] = token_span(ents_[i].b_cp, ents_[i].e_cp);
      entry.entities.push_back({ents_[i].type, 1, b, e, -1});
    }
    for (int i : l2_order) {
      auto [b, e] = token_span(ents_[i].b_cp, ents_[i].e_cp);
      entry.entities.push_back({ents_[i].type, 2, b, e, final_index[ents_[i].parent]});
    }
    return entry;
  }

 private:
  struct Ent {
    std::string type;
    int level;
    int parent;
    int b_cp, e_cp;
  };
  std::string text_;
  int cp_ = 0;
  std::vector<Ent> ents_;
  std::vector<int> stack_;
};

const std::string& pick(const std::vector<std::string>& v, std::mt19937_64& g) {
  return v[rand_below(g, v.size())];
}

std::string cp_prefix(const std::string& s, size_t k) {
  std::u32string cps = decode_utf8(s);
  if (cps.size() <= k) return s;
  std::string out;
  for (size_t i = 0; i < k; ++i) append_utf8(out, cps[i]);
  return out;
}

// Emits the pieces of a word that may itself contain spaces (multi-word
// street names, "marchand de vins" professions).
void words(EntryBuilder& b, const std::string& s) {
  std::istringstream in(s);
  std::string w;
  while (in >> w) b.piece(w);
}

struct SynthContext {
  const Lexicons* lex;
  std::vector<std::string> simple_streets;  // single-word, uppercase-initial
  bool commas = true;                       // entry style: comma separators or compact
};

void sep(EntryBuilder& b, const SynthContext& ctx, bool any_text) {
  if (any_text && ctx.commas) b.piece(",", true);
}

// One street name inside an open SPAT. The prefix ("rue", "r .", ...) is part
// of the LOC span; abbreviated prefixes put a period inside the entity.
void emit_loc(EntryBuilder& b, SynthContext& ctx, std::mt19937_64& g) {
  static const std::vector<std::string> full_prefixes = {"rue",     "boulevard", "avenue",
                                                         "faubourg", "passage",  "quai"};
  static const std::vector<std::string> abbr_prefixes = {"r", "boul", "av", "faub", "pass"};
  const std::string& name = pick(ctx.lex->streets, g);
  bool upper_start = !name.empty() && name[0] >= 'A' && name[0] <= 'Z';
  b.open("LOC", 2);
  if (upper_start && rand_unit(g) < 0.35) {
    words(b, name);  // bare "Quincampoix" style
  } else if (rand_unit(g) < 0.55) {
    b.piece(pick(full_prefixes, g));
    words(b, name);
  } else {
    b.piece(pick(abbr_prefixes, g));
    b.piece(".", true);
    words(b, name);
  }
  b.close();
}

// Old-and-new street juxtaposition: "r. Quincamp. pass. Beaufort". Both
// names are LOC entities with nothing between them, so the IO format cannot
// keep them apart. The first one carries its trailing period.
void emit_adjacent_locs(EntryBuilder& b, SynthContext& ctx, std::mt19937_64& g) {
  static const std::vector<std::string> abbr_prefixes = {"r", "boul", "av", "faub", "pass"};
  const std::string& n1 = pick(ctx.simple_streets, g);
  const std::string& n2 = pick(ctx.simple_streets, g);
  b.open("LOC", 2);
  b.piece(pick(abbr_prefixes, g));
  b.piece(".", true);
  b.piece(cp_prefix(n1, 8));
  b.piece(".", true);
  b.close();
  b.open("LOC", 2);
  b.piece(pick(abbr_prefixes, g));
  b.piece(".", true);
  words(b, n2);
  b.close();
}

void emit_spat(EntryBuilder& b, SynthContext& ctx, std::mt19937_64& g) {
  static const std::vector<std::string> ft_words = {"barrière", "marché", "halle", "gare"};
  b.open("SPAT", 1);
  bool extra_loc = rand_unit(g) < 0.089;
  bool adjacent = extra_loc && rand_unit(g) < 0.5 && !ctx.simple_streets.empty();
  if (rand_unit(g) < 0.0088) {
    b.open("FT", 2);
    b.piece(pick(ft_words, g));
    b.close();
    b.open("LOC", 2);
    words(b, pick(ctx.lex->streets, g));
    b.close();
    adjacent = false;
    extra_loc = false;
  } else if (adjacent) {
    emit_adjacent_locs(b, ctx, g);
  } else {
    emit_loc(b, ctx, g);
  }
  if (extra_loc && !adjacent) {
    // corner phrasing keeps the second street apart
    if (ctx.commas) b.piece(",", true);
    b.piece("au");
    b.piece("coin");
    b.piece("de");
    b.piece("la");
    b.open("LOC", 2);
    b.piece("rue");
    words(b, pick(ctx.simple_streets.empty() ? ctx.lex->streets : ctx.simple_streets, g));
    b.close();
  }
  if (rand_unit(g) < 0.973) {
    if (ctx.commas) b.piece(",", true);
    b.open("CARDINAL", 2);
    b.piece(std::to_string(1 + rand_below(g, 300)));
    b.close();
    if (rand_unit(g) < 0.05) b.piece("bis");
  }
  b.close();
}

void emit_per(EntryBuilder& b, SynthContext& ctx, std::mt19937_64& g) {
  static const std::vector<std::string> titreh_symbols = {"✠", "⚜", "☩", "✧"};
  b.open("PER", 1);
  b.piece(pick(ctx.lex->surnames, g));
  double u = rand_unit(g);
  if (u < 0.04) {
    b.piece("et");
    b.piece(pick(ctx.lex->surnames, g));
  } else if (u < 0.12) {
    // family qualifier, abbreviated like "je." for jeune
    double v = rand_unit(g);
    if (v < 0.4) {
      b.piece("je");
      b.piece(".", true);
    } else if (v < 0.7) {
      b.piece("fils");
    } else {
      b.piece("aîné");
    }
  }
  if (rand_unit(g) < 0.45) {
    const std::string& fn = pick(ctx.lex->firstnames, g);
    b.piece("(");
    if (rand_unit(g) < 0.4) {
      b.piece(cp_prefix(fn, 1), true);
      b.piece(".", true);
    } else {
      b.piece(fn, true);
    }
    b.piece(")", true);
  }
  if (rand_unit(g) < 0.036) {
    b.open("TITREH", 2);
    b.piece(pick(titreh_symbols, g));
    b.close();
  }
  b.close();
}

// Profession words, optionally with the abbreviation patterns the sources
// use ("md de vins", "fabr. de bronzes"). The period of "fabr." lands inside
// the entity span.
void emit_act_words(EntryBuilder& b, const SynthContext& ctx, std::mt19937_64& g) {
  std::string prof = pick(ctx.lex->professions, g);
  if (rand_unit(g) < 0.3) {
    if (prof.rfind("marchand ", 0) == 0) {
      b.piece("md");
      words(b, prof.substr(9));
      return;
    }
    if (prof.rfind("fabricant ", 0) == 0) {
      b.piece("fabr");
      b.piece(".", true);
      words(b, prof.substr(10));
      return;
    }
  }
  words(b, prof);
}

void emit_desc(EntryBuilder& b, SynthContext& ctx, std::mt19937_64& g) {
  static const std::vector<std::string> titrep_symbols = {"❊", "✱", "❋"};
  b.open("DESC", 1);
  b.piece(rand_unit(g) < 0.7 ? "ancien" : "ancienne");
  if (rand_unit(g) < 0.8) {
    b.open("ACT", 2);
    emit_act_words(b, ctx, g);
    b.close();
  } else {
    b.piece("maison");
    b.piece(pick(ctx.lex->surnames, g));
  }
  if (rand_unit(g) < 0.25) {
    b.open("TITREP", 2);
    b.piece(pick(titrep_symbols, g));
    b.close();
  }
  b.close();
}

AnnotatedEntry synth_entry(const std::string& source_id, SynthContext& ctx, std::mt19937_64& g) {
  EntryBuilder b;
  ctx.commas = rand_unit(g) >= 0.12;
  bool any = false;

  if (rand_unit(g) < 0.999) {
    emit_per(b, ctx, g);
    any = true;
  }
  if (rand_unit(g) < 0.044) {
    sep(b, ctx, any);
    emit_desc(b, ctx, g);
    any = true;
  } else if (rand_unit(g) < 0.727) {
    sep(b, ctx, any);
    b.open("ACT", 1);
    emit_act_words(b, ctx, g);
    b.close();
    any = true;
  }
  if (rand_unit(g) < 0.0015) {
    sep(b, ctx, any);
    b.open("TITRE", 1);
    b.piece("❈");
    b.close();
    any = true;
  }
  int n_addr = rand_unit(g) < 0.024 ? 2 : 1;
  for (int a = 0; a < n_addr; ++a) {
    if (a > 0) {
      if (ctx.commas) b.piece(",", true);
      b.piece("et");
    } else {
      sep(b, ctx, any);
    }
    emit_spat(b, ctx, g);
  }
  if (rand_unit(g) < 0.97) b.piece(".", true);
  return b.finish(source_id);
}

}  // namespace

Corpus synth_generate(int n, uint64_t seed, const LabelSchema& schema, const Lexicons& lexicons) {
  if (n <= 0) throw std::invalid_argument("synth_generate needs n > 0");
  SynthContext ctx;
  ctx.lex = &lexicons;
  for (const auto& s : lexicons.streets) {
    if (s.find(' ') != std::string::npos || s.find('-') != std::string::npos) continue;
    if (s.empty() || s[0] < 'A' || s[0] > 'Z') continue;
    ctx.simple_streets.push_back(s);
  }

  Corpus corpus;
  corpus.schema_fingerprint = schema.fingerprint();
  corpus.provenance = "synthetic";
  corpus.entries.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    std::mt19937_64 g(seed ^ fnv1a64(id));
    AnnotatedEntry entry = synth_entry(id, ctx, g);
    validate_entry(entry, schema);
    corpus.entries.push_back(std::move(entry));
  }
  return corpus;
}

}  // namespace nestag
