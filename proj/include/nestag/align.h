#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nestag/tagcodec.h"

namespace nestag {

enum class EditOp : uint8_t { match, substitute, del, ins };

/// Character-level alignment between a clean transcription and its noisy
/// counterpart. Unit edit costs; when several traces reach the minimum the
/// backtrace prefers match, then substitute, then delete, then insert, which
/// pins down one deterministic alignment. `ops` replays the clean string into
/// the noisy one; `gold_to_noisy` maps each clean codepoint to its noisy
/// position, or kGap when the character was dropped.
struct CharAlignment {
  static constexpr int kGap = -1;
  std::vector<EditOp> ops;
  std::vector<int> gold_to_noisy;
  int cost = 0;
};

CharAlignment align_chars(const std::u32string& gold, const std::u32string& noisy);

struct ProjectionStats {
  long entities_total = 0;
  long entities_projected = 0;
  long entities_dropped = 0;
  long entries_in = 0;
  long entries_out = 0;
  long entries_dropped = 0;

  ProjectionStats& operator+=(const ProjectionStats& o);
};

/// Carry an entry's annotations over to a noisy rendering of its text.
/// Entity character spans follow the alignment; noisy tokens are labeled by
/// majority character overlap; spans that lose every character are dropped,
/// and an entry that loses every entity is dropped (nullopt). Level-2 spans
/// are clamped into their projected parent.
std::optional<AnnotatedEntry> project_entry(const AnnotatedEntry& gold,
                                            const std::string& noisy_text, ProjectionStats& stats);

/// Project a whole corpus; entries whose id is missing from `noisy_texts`
/// are dropped and counted.
std::vector<AnnotatedEntry> project_corpus(const std::vector<AnnotatedEntry>& gold,
                                           const std::map<std::string, std::string>& noisy_texts,
                                           ProjectionStats& stats);

}  // namespace nestag
