#include "nestag/tagcodec.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "nestag/utf8.h"

namespace nestag {

namespace {

bool is_space_cp(uint32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0xA0;
}

bool is_punct_cp(uint32_t cp) {
  if (cp < 128) return std::ispunct(static_cast<int>(cp)) != 0;
  switch (cp) {
    case 0xAB:    // «
    case 0xBB:    // »
    case 0x2013:  // en dash
    case 0x2019:  // curly apostrophe
    case 0x2026:  // ellipsis
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  std::u32string cps = decode_utf8(text);
  std::vector<Token> out;
  size_t i = 0;
  while (i < cps.size()) {
    if (is_space_cp(cps[i])) {
      ++i;
      continue;
    }
    size_t b = i;
    if (is_punct_cp(cps[i])) {
      ++i;  // every punctuation character is its own token
    } else {
      while (i < cps.size() && !is_space_cp(cps[i]) && !is_punct_cp(cps[i])) ++i;
    }
    Token t;
    t.begin = static_cast<int>(b);
    t.end = static_cast<int>(i);
    t.text = encode_utf8(cps.substr(b, i - b));
    out.push_back(std::move(t));
  }
  return out;
}

std::string AnnotatedEntry::parent_type(const Entity& e) const {
  if (e.level != 2 || e.parent < 0 || e.parent >= static_cast<int>(entities.size())) return "O";
  return entities[e.parent].type;
}

void validate_entry(const AnnotatedEntry& entry, const LabelSchema& schema) {
  auto fail = [&entry](const std::string& why) {
    throw std::invalid_argument("entry '" + entry.source_id + "': " + why);
  };

  const int n = static_cast<int>(entry.tokens.size());
  const int text_len = static_cast<int>(decode_utf8(entry.text).size());
  int prev_end = 0;
  for (const auto& t : entry.tokens) {
    if (t.end <= t.begin || t.begin < prev_end || t.end > text_len)
      fail("token span [" + std::to_string(t.begin) + "," + std::to_string(t.end) +
           ") is empty, out of order or outside the text");
    prev_end = t.end;
  }

  for (size_t i = 0; i < entry.entities.size(); ++i) {
    const Entity& e = entry.entities[i];
    if (e.level != 1 && e.level != 2) fail("entity level must be 1 or 2");
    if (e.begin < 0 || e.end <= e.begin || e.end > n)
      fail("entity span [" + std::to_string(e.begin) + "," + std::to_string(e.end) +
           ") is empty or out of token range");
    if (!schema.has_type(e.type)) fail("unknown entity type '" + e.type + "'");
    if (!schema.allows_level(e.type, e.level))
      fail("type '" + e.type + "' does not allow level " + std::to_string(e.level));
    if (e.level == 1) {
      if (e.parent != -1) fail("level-1 entity must not have a parent");
    } else {
      if (e.parent < 0 || e.parent >= static_cast<int>(entry.entities.size()))
        fail("level-2 entity '" + e.type + "' has no parent");
      const Entity& p = entry.entities[e.parent];
      if (p.level != 1) fail("parent of a level-2 entity must be level 1");
      if (e.begin < p.begin || e.end > p.end)
        fail("level-2 entity '" + e.type + "' is not inside its parent span");
      if (!schema.authorized(p.type, e.type))
        fail("pair " + p.type + "+" + e.type + " is not authorized");
    }
    for (size_t j = 0; j < i; ++j) {
      const Entity& o = entry.entities[j];
      if (o.level == e.level && e.begin < o.end && o.begin < e.end)
        fail("overlapping level-" + std::to_string(e.level) + " entities");
    }
  }
}

namespace {

// per-token class and begin-mark streams for one annotation level
struct Stream {
  std::vector<std::string> cls;
  std::vector<char> begins;
};

Stream stream_of_level(const std::vector<Entity>& entities, int level, int n) {
  Stream s;
  s.cls.assign(n, "O");
  s.begins.assign(n, 0);
  for (const auto& e : entities) {
    if (e.level != level) continue;
    for (int i = e.begin; i < e.end; ++i) s.cls[i] = e.type;
    s.begins[e.begin] = 1;
  }
  return s;
}

std::string stream_tag(const Stream& s, int i, TagFormat format) {
  if (s.cls[i] == "O") return "O";
  if (format == TagFormat::io) return "I-" + s.cls[i];
  return (s.begins[i] ? "B-" : "I-") + s.cls[i];
}

TagSequence encode_streams(const std::vector<Entity>& entities, int n, TagFormat format,
                           TagMode mode) {
  TagSequence out;
  out.format = format;
  out.mode = mode;
  out.tags.reserve(n);
  if (mode == TagMode::joint) {
    Stream s1 = stream_of_level(entities, 1, n);
    Stream s2 = stream_of_level(entities, 2, n);
    for (int i = 0; i < n; ++i)
      out.tags.push_back(stream_tag(s1, i, format) + "+" + stream_tag(s2, i, format));
  } else {
    // l1 for the flat view as well: fragments are level-1 entities
    Stream s = stream_of_level(entities, mode == TagMode::l2 ? 2 : 1, n);
    for (int i = 0; i < n; ++i) out.tags.push_back(stream_tag(s, i, format));
  }
  return out;
}

}  // namespace

TagSequence encode_tags(const AnnotatedEntry& entry, TagFormat format, TagMode mode) {
  if (mode == TagMode::flat)
    throw std::logic_error("flat encoding needs a schema, use encode()");
  return encode_streams(entry.entities, static_cast<int>(entry.tokens.size()), format, mode);
}

TagSequence encode(const AnnotatedEntry& entry, TagFormat format, TagMode mode,
                   const LabelSchema& schema) {
  validate_entry(entry, schema);
  if (mode == TagMode::flat) {
    TagSequence out = encode_streams(flat_view(entry, schema),
                                     static_cast<int>(entry.tokens.size()), format, TagMode::l1);
    out.mode = TagMode::flat;
    return out;
  }
  return encode_tags(entry, format, mode);
}

std::pair<std::string, std::string> split_tag(std::string_view tag) {
  if (tag == "O") return {"", "O"};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return {std::string(1, tag[0]), std::string(tag.substr(2))};
  throw std::invalid_argument("malformed tag '" + std::string(tag) + "'");
}

std::pair<std::string, std::string> split_joint_tag(std::string_view tag) {
  size_t plus = tag.find('+');
  if (plus == std::string_view::npos)
    throw std::invalid_argument("joint tag '" + std::string(tag) + "' has no '+'");
  return {std::string(tag.substr(0, plus)), std::string(tag.substr(plus + 1))};
}

namespace {

// Decode one tag stream. Repairs rather than rejects: under iob2 an I tag
// with no compatible open entity behaves like B, under io the prefix is
// ignored entirely and maximal same-class runs become entities. cut[i] forces
// any open entity to close before token i (used by joint decoding to keep
// level-2 runs inside one level-1 segment).
std::vector<Entity> decode_stream(const std::vector<std::string>& prefixes,
                                  const std::vector<std::string>& classes, TagFormat format,
                                  int level, const std::vector<char>* cut) {
  std::vector<Entity> out;
  int open = -1;  // index into out
  for (int i = 0; i < static_cast<int>(classes.size()); ++i) {
    if (cut && (*cut)[i]) open = -1;
    const std::string& c = classes[i];
    if (c == "O") {
      open = -1;
      continue;
    }
    bool starts = open < 0 || out[open].type != c;
    if (format == TagFormat::iob2 && prefixes[i] == "B") starts = true;
    if (starts) {
      out.push_back({c, level, i, i + 1, -1});
      open = static_cast<int>(out.size()) - 1;
    } else {
      out[open].end = i + 1;
    }
  }
  return out;
}

}  // namespace

std::vector<Entity> decode(const TagSequence& seq) {
  const int n = static_cast<int>(seq.tags.size());
  if (seq.mode != TagMode::joint) {
    std::vector<std::string> prefixes(n), classes(n);
    for (int i = 0; i < n; ++i) {
      auto [p, c] = split_tag(seq.tags[i]);
      prefixes[i] = p;
      classes[i] = c;
    }
    int level = seq.mode == TagMode::l2 ? 2 : 1;
    return decode_stream(prefixes, classes, seq.format, level, nullptr);
  }

  std::vector<std::string> p1(n), c1(n), p2(n), c2(n);
  for (int i = 0; i < n; ++i) {
    auto [left, right] = split_joint_tag(seq.tags[i]);
    auto [lp, lc] = split_tag(left);
    auto [rp, rc] = split_tag(right);
    p1[i] = lp;
    c1[i] = lc;
    p2[i] = rp;
    c2[i] = rc;
  }

  std::vector<Entity> l1 = decode_stream(p1, c1, seq.format, 1, nullptr);

  // a level-2 entity may not cross a level-1 boundary; cut the level-2
  // stream wherever a level-1 entity begins or ends
  std::vector<char> cut(n, 0);
  for (const auto& e : l1) {
    cut[e.begin] = 1;
    if (e.end < n) cut[e.end] = 1;
  }
  std::vector<Entity> l2 = decode_stream(p2, c2, seq.format, 2, &cut);

  std::vector<Entity> out = std::move(l1);
  const int n_l1 = static_cast<int>(out.size());
  for (auto& e : l2) {
    for (int k = 0; k < n_l1; ++k) {
      if (out[k].begin <= e.begin && e.end <= out[k].end) {
        e.parent = k;
        break;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

AnnotatedEntry decode_entry(const std::string& source_id, const std::string& text,
                            const std::vector<Token>& tokens, const TagSequence& seq) {
  if (seq.tags.size() != tokens.size())
    throw std::invalid_argument("entry '" + source_id + "': " + std::to_string(seq.tags.size()) +
                                " tags for " + std::to_string(tokens.size()) + " tokens");
  AnnotatedEntry out;
  out.source_id = source_id;
  out.text = text;
  out.tokens = tokens;
  out.entities = decode(seq);
  return out;
}

TagSequence convert(const TagSequence& seq, TagFormat to) {
  std::vector<Entity> entities = decode(seq);
  TagSequence out = encode_streams(entities, static_cast<int>(seq.tags.size()), to,
                                   seq.mode == TagMode::flat ? TagMode::l1 : seq.mode);
  out.mode = seq.mode;
  return out;
}

TagSequence compose_joint(const TagSequence& l1, const TagSequence& l2) {
  if (l1.tags.size() != l2.tags.size())
    throw std::invalid_argument("compose_joint: sequence lengths differ");
  if (l1.format != l2.format)
    throw std::invalid_argument("compose_joint: tag formats differ");
  if (l1.mode != TagMode::l1 || l2.mode != TagMode::l2)
    throw std::invalid_argument("compose_joint: expected an l1 and an l2 sequence");
  TagSequence out;
  out.format = l1.format;
  out.mode = TagMode::joint;
  out.tags.reserve(l1.tags.size());
  for (size_t i = 0; i < l1.tags.size(); ++i) out.tags.push_back(l1.tags[i] + "+" + l2.tags[i]);
  return out;
}

std::pair<TagSequence, TagSequence> decompose_joint(const TagSequence& joint) {
  if (joint.mode != TagMode::joint)
    throw std::invalid_argument("decompose_joint: not a joint sequence");
  TagSequence a, b;
  a.format = b.format = joint.format;
  a.mode = TagMode::l1;
  b.mode = TagMode::l2;
  for (const auto& t : joint.tags) {
    auto [left, right] = split_joint_tag(t);
    a.tags.push_back(left);
    b.tags.push_back(right);
  }
  return {std::move(a), std::move(b)};
}

std::vector<Entity> flat_view(const AnnotatedEntry& entry, const LabelSchema& schema) {
  std::vector<Entity> out;
  for (size_t i = 0; i < entry.entities.size(); ++i) {
    const Entity& e = entry.entities[i];
    if (e.level == 2) {
      std::string label = schema.flat_label_lenient(entry.parent_type(e), e.type);
      if (label != "O") out.push_back({label, 1, e.begin, e.end, -1});
      continue;
    }
    std::string label = schema.flat_label_lenient(e.type, "O");
    if (label == "O") continue;
    std::vector<char> covered(e.end - e.begin, 0);
    for (const auto& c : entry.entities) {
      if (c.level != 2) continue;
      if (c.parent < 0 || &entry.entities[c.parent] != &e) continue;
      for (int k = c.begin; k < c.end; ++k) covered[k - e.begin] = 1;
    }
    int run = -1;
    for (int k = e.begin; k <= e.end; ++k) {
      bool in = k < e.end && !covered[k - e.begin];
      if (in && run < 0) run = k;
      if (!in && run >= 0) {
        out.push_back({label, 1, run, k, -1});
        run = -1;
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Entity& a, const Entity& b) { return a.begin < b.begin; });
  return out;
}

}  // namespace nestag
