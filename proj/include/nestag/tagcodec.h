#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nestag/schema.h"

namespace nestag {

struct Token {
  std::string text;
  int begin = 0;  // [begin, end) codepoint offsets into the entry text
  int end = 0;

  bool operator==(const Token& o) const {
    return text == o.text && begin == o.begin && end == o.end;
  }
};

struct Entity {
  std::string type;
  int level = 1;
  int begin = 0;  // [begin, end) token indices
  int end = 0;
  int parent = -1;  // index into the entry's entity vector; level-2 only

  bool operator==(const Entity& o) const {
    return type == o.type && level == o.level && begin == o.begin && end == o.end &&
           parent == o.parent;
  }
};

struct AnnotatedEntry {
  std::string source_id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Entity> entities;

  /// Type of the enclosing level-1 entity, "O" when there is none.
  std::string parent_type(const Entity& e) const;
};

/// Whitespace tokenization with punctuation split off as standalone tokens,
/// so "r. de Vaugirard, 7." becomes r / . / de / Vaugirard / , / 7 / .
std::vector<Token> tokenize(const std::string& text);

/// Throws std::invalid_argument when the entry breaks a structural rule or
/// an entity pairing the schema does not authorize.
void validate_entry(const AnnotatedEntry& entry, const LabelSchema& schema);

struct TagSequence {
  TagFormat format = TagFormat::iob2;
  TagMode mode = TagMode::joint;
  std::vector<std::string> tags;
};

/// Validating encoder: rejects entries that violate the schema.
TagSequence encode(const AnnotatedEntry& entry, TagFormat format, TagMode mode,
                   const LabelSchema& schema);
/// Encoder without the schema check, used for scoring model output that may
/// contain unauthorized pairings.
TagSequence encode_tags(const AnnotatedEntry& entry, TagFormat format, TagMode mode);

/// Decode a tag sequence back to entities. Tolerant of malformed input:
/// an I tag without a compatible open entity starts a new one, and in joint
/// mode a level-2 run is cut at every level-1 boundary, so the output always
/// nests properly. Joint mode resolves parent links; a level-2 run over
/// level-1 "O" is kept with parent -1.
std::vector<Entity> decode(const TagSequence& seq);

/// decode() plus entry assembly, for turning predictions into scorable entries.
AnnotatedEntry decode_entry(const std::string& source_id, const std::string& text,
                            const std::vector<Token>& tokens, const TagSequence& seq);

/// Re-encode a sequence in another tag format (decode then encode). Converting
/// iob2 -> io merges adjacent same-type entities and is therefore lossy.
TagSequence convert(const TagSequence& seq, TagFormat to);

/// Stitch two single-level sequences into joint tags ("B-SPAT" + "B-LOC" ->
/// "B-SPAT+B-LOC"). The merge step of the independent-taggers strategy; the
/// result may contain pairings no schema authorizes.
TagSequence compose_joint(const TagSequence& l1, const TagSequence& l2);
std::pair<TagSequence, TagSequence> decompose_joint(const TagSequence& joint);

/// Split "B-SPAT" into ("B", "SPAT"); "O" becomes ("", "O").
std::pair<std::string, std::string> split_tag(std::string_view tag);
/// Split "B-SPAT+I-LOC" at the reserved '+'.
std::pair<std::string, std::string> split_joint_tag(std::string_view tag);

/// The flat view of a nested entry: level-2 entities map to their flat label
/// over their own span, and the parts of a level-1 entity not covered by any
/// child become fragments with the level-1 flat label. Returned as level-1
/// entities sorted by position.
std::vector<Entity> flat_view(const AnnotatedEntry& entry, const LabelSchema& schema);

}  // namespace nestag
