#pragma once

// Random schema-valid entries for property tests. Tokens are synthetic
// ("w0", "w1", ...) since the codec and metrics only look at spans.

#include <string>
#include <vector>

#include "nestag/rng.h"
#include "nestag/tagcodec.h"

namespace testutil {

inline nestag::AnnotatedEntry entry_with_tokens(int n) {
  nestag::AnnotatedEntry entry;
  entry.source_id = "random";
  int pos = 0;
  for (int i = 0; i < n; ++i) {
    std::string w = "w" + std::to_string(i);
    if (i) {
      entry.text += ' ';
      ++pos;
    }
    entry.tokens.push_back({w, pos, pos + static_cast<int>(w.size())});
    pos += static_cast<int>(w.size());
    entry.text += w;
  }
  return entry;
}

/// Entities in the canonical order decode() produces: level-1 sorted by
/// begin, then level-2 sorted by begin, parent links into the same vector.
inline void add_random_entities(nestag::AnnotatedEntry& entry, const nestag::LabelSchema& schema,
                                std::mt19937_64& g) {
  using nestag::rand_below;
  const int n = static_cast<int>(entry.tokens.size());
  auto l1_types = schema.level_types(1);

  struct Child {
    int l1;
    nestag::Entity e;
  };
  std::vector<nestag::Entity> l1s;
  std::vector<Child> l2s;

  int pos = 0;
  while (pos < n) {
    if (rand_below(g, 3) == 0) {  // gap
      pos += 1 + static_cast<int>(rand_below(g, 2));
      continue;
    }
    int len = 1 + static_cast<int>(rand_below(g, 4));
    if (pos + len > n) len = n - pos;
    const std::string& type = l1_types[rand_below(g, l1_types.size())];
    l1s.push_back({type, 1, pos, pos + len, -1});

    auto it = schema.containment().find(type);
    if (it != schema.containment().end() && !it->second.empty()) {
      std::vector<std::string> kinds(it->second.begin(), it->second.end());
      int cpos = pos;
      while (cpos < pos + len) {
        if (rand_below(g, 2) == 0) {
          ++cpos;
          continue;
        }
        int clen = 1 + static_cast<int>(rand_below(g, 3));
        if (cpos + clen > pos + len) clen = pos + len - cpos;
        l2s.push_back({static_cast<int>(l1s.size()) - 1,
                       {kinds[rand_below(g, kinds.size())], 2, cpos, cpos + clen, -1}});
        cpos += clen;
      }
    }
    pos += len;
  }

  entry.entities = l1s;
  for (auto& c : l2s) {
    c.e.parent = c.l1;
    entry.entities.push_back(c.e);
  }
}

inline nestag::AnnotatedEntry random_entry(const nestag::LabelSchema& schema, std::mt19937_64& g,
                                           int max_tokens = 18) {
  auto entry = entry_with_tokens(1 + static_cast<int>(nestag::rand_below(g, max_tokens)));
  add_random_entities(entry, schema, g);
  return entry;
}

// Prediction with controlled overlap: drop some level-1 spans (children
// follow), retype some level-2 spans to another authorized child. Spans are
// never moved, so the result stays schema-valid without any repair pass.
inline nestag::AnnotatedEntry mutate_entities(const nestag::AnnotatedEntry& gold,
                                              const nestag::LabelSchema& schema,
                                              std::mt19937_64& g) {
  using nestag::Entity;
  using nestag::rand_below;
  using nestag::rand_unit;
  const size_t ne = gold.entities.size();
  std::vector<char> keep(ne, 1);
  for (size_t i = 0; i < ne; ++i) {
    const Entity& e = gold.entities[i];
    if (e.level == 1) {
      if (rand_unit(g) < 0.25) keep[i] = 0;
    } else {
      if (!keep[e.parent] || rand_unit(g) < 0.1) keep[i] = 0;
    }
  }
  nestag::AnnotatedEntry out = gold;
  out.entities.clear();
  std::vector<int> new_index(ne, -1);
  for (size_t i = 0; i < ne; ++i) {
    if (!keep[i]) continue;
    Entity e = gold.entities[i];
    if (e.level == 2) {
      e.parent = new_index[e.parent];
      if (rand_unit(g) < 0.25) {
        std::string parent = out.entities[e.parent].type;
        std::vector<std::string> candidates;
        for (const auto& t : schema.level_types(2))
          if (schema.authorized(parent, t)) candidates.push_back(t);
        if (!candidates.empty()) e.type = candidates[rand_below(g, candidates.size())];
      }
    }
    new_index[i] = static_cast<int>(out.entities.size());
    out.entities.push_back(e);
  }
  return out;
}

inline std::u32string random_string(std::mt19937_64& g, int max_len) {
  using nestag::rand_below;
  std::u32string s;
  int n = static_cast<int>(rand_below(g, max_len + 1));
  for (int i = 0; i < n; ++i) s += static_cast<char32_t>(U'a' + rand_below(g, 4));
  return s;
}

}  // namespace testutil
