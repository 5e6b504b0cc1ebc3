#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nestag/tagcodec.h"

namespace nestag {

struct PRF {
  long tp = 0, fp = 0, fn = 0;

  double precision() const { return tp + fp == 0 ? 1.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : double(tp) / double(tp + fn); }
  double f1() const {
    double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  PRF& operator+=(const PRF& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// What counts as an entity when scoring:
///  - all:    every entity of both levels, keyed by (level, type, span)
///  - l1/l2:  entities of one level, keyed by (type, span)
///  - l1l2:   level-2 entities keyed by (parent type + type, span), extracted
///            from round-tripped joint tags, so io merging applies to gold
///            and prediction alike
///  - pl1pl2: runs of identical joint tags with a non-O level-2 part, keyed
///            by the full prefixed tag; identical to l1l2 under io, stricter
///            under iob2 where B/I splits the runs
///  - flat:   the flat view fragments, keyed by (flat label, span)
enum class Scope { all, l1, l2, l1l2, pl1pl2, flat };

const char* to_string(Scope s);
std::vector<Scope> all_scopes();

struct ScoredItem {
  std::string label;
  int begin = 0, end = 0;
  bool operator==(const ScoredItem& o) const {
    return label == o.label && begin == o.begin && end == o.end;
  }
  bool operator<(const ScoredItem& o) const {
    if (begin != o.begin) return begin < o.begin;
    if (end != o.end) return end < o.end;
    return label < o.label;
  }
};

std::vector<ScoredItem> scope_items(const AnnotatedEntry& entry, Scope scope, TagFormat format,
                                    const LabelSchema& schema);

/// Exact-boundary exact-label matching of scope items, summed over entries.
/// gold and pred must be parallel corpora: same order, same ids, same token
/// counts. Throws std::invalid_argument otherwise.
PRF score_scope(const std::vector<AnnotatedEntry>& gold, const std::vector<AnnotatedEntry>& pred,
                Scope scope, TagFormat format, const LabelSchema& schema);

/// Token-level confusion over prefix-stripped joint classes ("SPAT+LOC",
/// "PER+O", "O+O"), rows are gold. Labels cover the authorized set plus any
/// composite the predictions produced.
struct Confusion {
  std::vector<std::string> labels;
  std::vector<std::vector<long>> counts;

  std::vector<std::vector<double>> row_normalized() const;
};

struct Violation {
  std::string source_id;
  std::string parent_type;
  std::string type;
  int begin = 0, end = 0;
};

/// Level-2 entities whose (parent type, own type) pair the schema does not
/// authorize: structurally possible when two independently predicted levels
/// are merged.
std::vector<Violation> hierarchy_violations(const std::vector<AnnotatedEntry>& pred,
                                            const LabelSchema& schema);

struct EvalReport {
  std::map<Scope, PRF> scopes;
  std::map<std::string, PRF> per_type;  // grouped over both levels
  Confusion confusion;
  long violations = 0;
};

EvalReport full_report(const std::vector<AnnotatedEntry>& gold,
                       const std::vector<AnnotatedEntry>& pred, TagFormat format,
                       const LabelSchema& schema);

/// Aligned text table for terminals.
std::string report_table(const EvalReport& report);
/// Machine output: scope,precision,recall,f1,tp,fp,fn plus per-type rows.
void write_report_csv(const EvalReport& report, std::ostream& out);
void write_confusion_csv(const Confusion& confusion, std::ostream& out);

}  // namespace nestag
