#include "nestag/align.h"

#include <algorithm>
#include <cassert>

#include "nestag/utf8.h"

namespace nestag {

CharAlignment align_chars(const std::u32string& gold, const std::u32string& noisy) {
  const int n = static_cast<int>(gold.size());
  const int m = static_cast<int>(noisy.size());
  // full DP table; entry texts are short so quadratic space is fine
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&d, m](int i, int j) -> int& { return d[i * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      int sub = at(i - 1, j - 1) + (gold[i - 1] == noisy[j - 1] ? 0 : 1);
      int del = at(i - 1, j) + 1;
      int ins = at(i, j - 1) + 1;
      at(i, j) = std::min({sub, del, ins});
    }
  }

  CharAlignment out;
  out.cost = at(n, m);
  // backtrace from the end; preference order match > substitute > delete > insert
  std::vector<EditOp> rev;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && gold[i - 1] == noisy[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      rev.push_back(EditOp::match);
      --i;
      --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      rev.push_back(EditOp::substitute);
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      rev.push_back(EditOp::del);
      --i;
    } else {
      rev.push_back(EditOp::ins);
      --j;
    }
  }
  out.ops.assign(rev.rbegin(), rev.rend());

  out.gold_to_noisy.assign(n, CharAlignment::kGap);
  int gi = 0, nj = 0;
  for (EditOp op : out.ops) {
    switch (op) {
      case EditOp::match:
      case EditOp::substitute:
        out.gold_to_noisy[gi++] = nj++;
        break;
      case EditOp::del:
        ++gi;
        break;
      case EditOp::ins:
        ++nj;
        break;
    }
  }
  assert(gi == n && nj == m);
  return out;
}

ProjectionStats& ProjectionStats::operator+=(const ProjectionStats& o) {
  entities_total += o.entities_total;
  entities_projected += o.entities_projected;
  entities_dropped += o.entities_dropped;
  entries_in += o.entries_in;
  entries_out += o.entries_out;
  entries_dropped += o.entries_dropped;
  return *this;
}

namespace {

struct Projected {
  bool alive = false;
  int char_begin = 0, char_end = 0;  // noisy codepoints
  int tok_begin = -1, tok_end = -1;  // noisy tokens
};

}  // namespace

std::optional<AnnotatedEntry> project_entry(const AnnotatedEntry& gold,
                                            const std::string& noisy_text,
                                            ProjectionStats& stats) {
  stats.entries_in += 1;
  stats.entities_total += static_cast<long>(gold.entities.size());

  CharAlignment al = align_chars(decode_utf8(gold.text), decode_utf8(noisy_text));
  std::vector<Token> noisy_tokens = tokenize(noisy_text);
  const int nt = static_cast<int>(noisy_tokens.size());
  const size_t ne = gold.entities.size();

  // 1. character spans through the alignment; an entity keeps the smallest
  //    noisy interval covering the surviving characters
  std::vector<Projected> proj(ne);
  for (size_t i = 0; i < ne; ++i) {
    const Entity& e = gold.entities[i];
    int cb = gold.tokens[e.begin].begin;
    int ce = gold.tokens[e.end - 1].end;
    int lo = -1, hi = -1;
    for (int c = cb; c < ce; ++c) {
      int p = al.gold_to_noisy[c];
      if (p == CharAlignment::kGap) continue;
      if (lo < 0) lo = p;
      hi = p;
    }
    if (lo < 0) continue;  // every character vanished
    proj[i].alive = true;
    proj[i].char_begin = lo;
    proj[i].char_end = hi + 1;
  }

  // 2. each noisy token joins the entity (per level) that covers the
  //    majority of its characters; equal overlap goes to the earlier span
  for (int level = 1; level <= 2; ++level) {
    std::vector<int> owner(nt, -1);
    for (int t = 0; t < nt; ++t) {
      const Token& tok = noisy_tokens[t];
      int best = -1, best_ov = 0;
      for (size_t i = 0; i < ne; ++i) {
        if (!proj[i].alive || gold.entities[i].level != level) continue;
        int ov = std::min(tok.end, proj[i].char_end) - std::max(tok.begin, proj[i].char_begin);
        if (ov <= 0 || 2 * ov < tok.end - tok.begin) continue;
        if (ov > best_ov ||
            (ov == best_ov && best >= 0 && proj[i].char_begin < proj[best].char_begin)) {
          best = static_cast<int>(i);
          best_ov = ov;
        }
      }
      owner[t] = best;
    }
    for (size_t i = 0; i < ne; ++i) {
      if (!proj[i].alive || gold.entities[i].level != level) continue;
      int lo = -1, hi = -1;
      for (int t = 0; t < nt; ++t) {
        if (owner[t] != static_cast<int>(i)) continue;
        if (lo < 0) lo = t;
        hi = t;
      }
      if (lo < 0) {
        proj[i].alive = false;  // span fell between tokens
      } else {
        proj[i].tok_begin = lo;
        proj[i].tok_end = hi + 1;
      }
    }
  }

  // 3. same-level spans must stay disjoint and ordered; clamp in span order
  for (int level = 1; level <= 2; ++level) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < ne; ++i)
      if (proj[i].alive && gold.entities[i].level == level) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&proj](size_t a, size_t b) {
      return proj[a].tok_begin != proj[b].tok_begin ? proj[a].tok_begin < proj[b].tok_begin
                                                    : proj[a].tok_end < proj[b].tok_end;
    });
    int prev_end = 0;
    for (size_t i : idx) {
      proj[i].tok_begin = std::max(proj[i].tok_begin, prev_end);
      if (proj[i].tok_begin >= proj[i].tok_end) {
        proj[i].alive = false;
      } else {
        prev_end = proj[i].tok_end;
      }
    }
  }

  // 4. children stay inside their parents
  for (size_t i = 0; i < ne; ++i) {
    const Entity& e = gold.entities[i];
    if (!proj[i].alive || e.level != 2) continue;
    if (e.parent < 0 || !proj[e.parent].alive) {
      proj[i].alive = false;
      continue;
    }
    proj[i].tok_begin = std::max(proj[i].tok_begin, proj[e.parent].tok_begin);
    proj[i].tok_end = std::min(proj[i].tok_end, proj[e.parent].tok_end);
    if (proj[i].tok_begin >= proj[i].tok_end) proj[i].alive = false;
  }

  AnnotatedEntry out;
  out.source_id = gold.source_id;
  out.text = noisy_text;
  out.tokens = std::move(noisy_tokens);
  std::vector<int> new_index(ne, -1);
  for (size_t i = 0; i < ne; ++i) {
    if (!proj[i].alive) continue;
    const Entity& e = gold.entities[i];
    new_index[i] = static_cast<int>(out.entities.size());
    out.entities.push_back({e.type, e.level, proj[i].tok_begin, proj[i].tok_end, -1});
  }
  for (size_t i = 0; i < ne; ++i) {
    if (new_index[i] < 0) continue;
    const Entity& e = gold.entities[i];
    if (e.level == 2) out.entities[new_index[i]].parent = new_index[e.parent];
  }

  stats.entities_projected += static_cast<long>(out.entities.size());
  stats.entities_dropped += static_cast<long>(ne - out.entities.size());
  if (out.entities.empty()) {
    stats.entries_dropped += 1;
    return std::nullopt;
  }
  stats.entries_out += 1;
  return out;
}

std::vector<AnnotatedEntry> project_corpus(const std::vector<AnnotatedEntry>& gold,
                                           const std::map<std::string, std::string>& noisy_texts,
                                           ProjectionStats& stats) {
  std::vector<AnnotatedEntry> out;
  for (const auto& entry : gold) {
    auto it = noisy_texts.find(entry.source_id);
    if (it == noisy_texts.end()) {
      stats.entries_in += 1;
      stats.entries_dropped += 1;
      stats.entities_total += static_cast<long>(entry.entities.size());
      stats.entities_dropped += static_cast<long>(entry.entities.size());
      continue;
    }
    auto projected = project_entry(entry, it->second, stats);
    if (projected) out.push_back(std::move(*projected));
  }
  return out;
}

}  // namespace nestag
