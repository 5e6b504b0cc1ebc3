#include "nestag/metrics.h"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nestag {

const char* to_string(Scope s) {
  switch (s) {
    case Scope::all: return "All";
    case Scope::l1: return "L1";
    case Scope::l2: return "L2";
    case Scope::l1l2: return "L1+L2";
    case Scope::pl1pl2: return "P-L1+P-L2";
    case Scope::flat: return "Flat";
  }
  return "?";
}

std::vector<Scope> all_scopes() {
  return {Scope::all, Scope::l1, Scope::l2, Scope::l1l2, Scope::pl1pl2, Scope::flat};
}

std::vector<ScoredItem> scope_items(const AnnotatedEntry& entry, Scope scope, TagFormat format,
                                    const LabelSchema& schema) {
  std::vector<ScoredItem> items;
  switch (scope) {
    case Scope::all:
      for (const auto& e : entry.entities)
        items.push_back({"L" + std::to_string(e.level) + ":" + e.type, e.begin, e.end});
      break;
    case Scope::l1:
    case Scope::l2: {
      int level = scope == Scope::l1 ? 1 : 2;
      for (const auto& e : entry.entities)
        if (e.level == level) items.push_back({e.type, e.begin, e.end});
      break;
    }
    case Scope::l1l2: {
      // round trip through the tag format so io merging hits both sides
      TagSequence tags = encode_tags(entry, format, TagMode::joint);
      AnnotatedEntry round = entry;
      round.entities = decode(tags);
      for (const auto& e : round.entities)
        if (e.level == 2)
          items.push_back({round.parent_type(e) + "+" + e.type, e.begin, e.end});
      break;
    }
    case Scope::pl1pl2: {
      TagSequence tags = encode_tags(entry, format, TagMode::joint);
      int run = -1;
      for (int i = 0; i <= static_cast<int>(tags.tags.size()); ++i) {
        bool same = i < static_cast<int>(tags.tags.size()) && run >= 0 &&
                    tags.tags[i] == tags.tags[run];
        if (same) continue;
        if (run >= 0) {
          const std::string& tag = tags.tags[run];
          auto [l1, l2] = split_joint_tag(tag);
          if (split_tag(l2).second != "O") items.push_back({tag, run, i});
        }
        run = i;
      }
      break;
    }
    case Scope::flat:
      for (const auto& e : flat_view(entry, schema))
        items.push_back({e.type, e.begin, e.end});
      break;
  }
  return items;
}

PRF score_scope(const std::vector<AnnotatedEntry>& gold, const std::vector<AnnotatedEntry>& pred,
                Scope scope, TagFormat format, const LabelSchema& schema) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("gold and prediction corpora differ in size");
  PRF prf;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].source_id != pred[i].source_id)
      throw std::invalid_argument("corpus misalignment at entry " + std::to_string(i) + ": '" +
                                  gold[i].source_id + "' vs '" + pred[i].source_id + "'");
    if (gold[i].tokens.size() != pred[i].tokens.size())
      throw std::invalid_argument("entry '" + gold[i].source_id + "': token counts differ");
    std::vector<ScoredItem> g = scope_items(gold[i], scope, format, schema);
    std::vector<ScoredItem> p = scope_items(pred[i], scope, format, schema);
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    size_t a = 0, b = 0;
    long tp = 0;
    while (a < g.size() && b < p.size()) {
      if (g[a] == p[b]) {
        ++tp;
        ++a;
        ++b;
      } else if (g[a] < p[b]) {
        ++a;
      } else {
        ++b;
      }
    }
    prf.tp += tp;
    prf.fn += static_cast<long>(g.size()) - tp;
    prf.fp += static_cast<long>(p.size()) - tp;
  }
  return prf;
}

std::vector<std::vector<double>> Confusion::row_normalized() const {
  std::vector<std::vector<double>> out(counts.size());
  for (size_t r = 0; r < counts.size(); ++r) {
    long total = 0;
    for (long c : counts[r]) total += c;
    out[r].resize(counts[r].size(), 0.0);
    if (total == 0) continue;
    for (size_t c = 0; c < counts[r].size(); ++c)
      out[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(total);
  }
  return out;
}

std::vector<Violation> hierarchy_violations(const std::vector<AnnotatedEntry>& pred,
                                            const LabelSchema& schema) {
  std::vector<Violation> out;
  for (const auto& entry : pred) {
    for (const auto& e : entry.entities) {
      if (e.level != 2) continue;
      std::string parent = entry.parent_type(e);
      if (!schema.authorized(parent, e.type))
        out.push_back({entry.source_id, parent, e.type, e.begin, e.end});
    }
  }
  return out;
}

namespace {

std::vector<std::string> token_classes(const AnnotatedEntry& entry) {
  std::vector<std::string> l1(entry.tokens.size(), "O"), l2(entry.tokens.size(), "O");
  for (const auto& e : entry.entities) {
    auto& cls = e.level == 1 ? l1 : l2;
    for (int i = e.begin; i < e.end && i < static_cast<int>(cls.size()); ++i) cls[i] = e.type;
  }
  std::vector<std::string> out(entry.tokens.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = l1[i] + "+" + l2[i];
  return out;
}

}  // namespace

EvalReport full_report(const std::vector<AnnotatedEntry>& gold,
                       const std::vector<AnnotatedEntry>& pred, TagFormat format,
                       const LabelSchema& schema) {
  EvalReport report;
  for (Scope s : all_scopes()) report.scopes[s] = score_scope(gold, pred, s, format, schema);

  // per type: the All scope restricted to one type name, levels merged
  {
    std::set<std::string> names;
    for (const auto& t : schema.types()) names.insert(t.name);
    for (size_t i = 0; i < gold.size(); ++i) {
      auto g = scope_items(gold[i], Scope::all, format, schema);
      auto p = scope_items(pred[i], Scope::all, format, schema);
      std::sort(g.begin(), g.end());
      std::sort(p.begin(), p.end());
      auto type_of = [](const ScoredItem& it) { return it.label.substr(3); };
      size_t a = 0, b = 0;
      while (a < g.size() || b < p.size()) {
        if (a < g.size() && b < p.size() && g[a] == p[b]) {
          report.per_type[type_of(g[a])].tp += 1;
          ++a;
          ++b;
        } else if (b >= p.size() || (a < g.size() && g[a] < p[b])) {
          report.per_type[type_of(g[a])].fn += 1;
          ++a;
        } else {
          report.per_type[type_of(p[b])].fp += 1;
          ++b;
        }
      }
    }
    for (const auto& n : names)
      if (!report.per_type.count(n)) report.per_type[n] = PRF{};
  }

  // token-level confusion over joint classes
  {
    std::vector<std::string> labels;
    std::set<std::string> seen;
    for (const auto& j : schema.joint_labels()) {
      labels.push_back(j.str());
      seen.insert(j.str());
    }
    std::set<std::string> extra;
    for (size_t i = 0; i < gold.size(); ++i) {
      for (const auto& c : token_classes(gold[i]))
        if (!seen.count(c)) extra.insert(c);
      for (const auto& c : token_classes(pred[i]))
        if (!seen.count(c)) extra.insert(c);
    }
    for (const auto& c : extra) labels.push_back(c);
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;

    report.confusion.labels = labels;
    report.confusion.counts.assign(labels.size(), std::vector<long>(labels.size(), 0));
    for (size_t i = 0; i < gold.size(); ++i) {
      auto gc = token_classes(gold[i]);
      auto pc = token_classes(pred[i]);
      for (size_t t = 0; t < gc.size(); ++t)
        report.confusion.counts[index[gc[t]]][index[pc[t]]] += 1;
    }
  }

  report.violations = static_cast<long>(hierarchy_violations(pred, schema).size());
  return report;
}

namespace {

std::string fmt_double(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  out << "scope        precision  recall     f1         tp     fp     fn\n";
  for (Scope s : all_scopes()) {
    auto it = report.scopes.find(s);
    if (it == report.scopes.end()) continue;
    const PRF& m = it->second;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-10.4f %-10.4f %-10.4f %-6ld %-6ld %-6ld\n",
                  to_string(s), m.precision(), m.recall(), m.f1(), m.tp, m.fp, m.fn);
    out << line;
  }
  out << "\ntype         precision  recall     f1         tp     fp     fn\n";
  for (const auto& [name, m] : report.per_type) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-10.4f %-10.4f %-10.4f %-6ld %-6ld %-6ld\n",
                  name.c_str(), m.precision(), m.recall(), m.f1(), m.tp, m.fp, m.fn);
    out << line;
  }
  if (report.violations > 0)
    out << "\nhierarchy violations: " << report.violations << "\n";
  return out.str();
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "section,name,precision,recall,f1,tp,fp,fn\n";
  for (Scope s : all_scopes()) {
    auto it = report.scopes.find(s);
    if (it == report.scopes.end()) continue;
    const PRF& m = it->second;
    out << "scope," << to_string(s) << "," << fmt_double(m.precision(), 6) << ","
        << fmt_double(m.recall(), 6) << "," << fmt_double(m.f1(), 6) << "," << m.tp << "," << m.fp
        << "," << m.fn << "\n";
  }
  for (const auto& [name, m] : report.per_type) {
    out << "type," << name << "," << fmt_double(m.precision(), 6) << ","
        << fmt_double(m.recall(), 6) << "," << fmt_double(m.f1(), 6) << "," << m.tp << "," << m.fp
        << "," << m.fn << "\n";
  }
  out << "violations,,,,," << report.violations << ",,\n";
}

void write_confusion_csv(const Confusion& confusion, std::ostream& out) {
  out << "gold\\pred";
  for (const auto& l : confusion.labels) out << "," << l;
  out << "\n";
  auto norm = confusion.row_normalized();
  for (size_t r = 0; r < confusion.labels.size(); ++r) {
    out << confusion.labels[r];
    for (size_t c = 0; c < confusion.labels.size(); ++c) out << "," << fmt_double(norm[r][c], 4);
    out << "\n";
  }
}

}  // namespace nestag
