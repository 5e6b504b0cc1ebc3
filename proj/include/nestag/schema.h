#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace nestag {

enum class TagFormat { io, iob2 };
enum class TagMode { l1, l2, joint, flat };

const char* to_string(TagFormat f);
const char* to_string(TagMode m);
TagFormat tag_format_from_string(const std::string& s);
TagMode tag_mode_from_string(const std::string& s);

struct EntityType {
  std::string name;
  bool level1 = false;
  bool level2 = false;
};

/// A (level-1, level-2) label pair. Either side may be the literal "O".
struct JointLabel {
  std::string l1;
  std::string l2;

  std::string str() const { return l1 + "+" + l2; }
  bool operator==(const JointLabel& o) const { return l1 == o.l1 && l2 == o.l2; }
  bool operator<(const JointLabel& o) const {
    return l1 != o.l1 ? l1 < o.l1 : l2 < o.l2;
  }
};

/// Entity type inventory plus the containment rules saying which level-2
/// types may appear inside which level-1 types. Loaded from a schema file
/// or built in code; the directory schema used throughout the tests is
/// available as LabelSchema::paris_directories().
class LabelSchema {
 public:
  LabelSchema() = default;
  LabelSchema(std::vector<EntityType> types,
              std::map<std::string, std::set<std::string>> containment,
              std::map<std::string, std::string> flat_overrides = {});

  /// Parse the text schema format (sections [types], [containment], [flat_map]).
  static LabelSchema parse(const std::string& text);
  static LabelSchema load_file(const std::string& path);
  static const LabelSchema& paris_directories();

  const std::vector<EntityType>& types() const { return types_; }
  bool has_type(const std::string& name) const;
  const EntityType& type(const std::string& name) const;
  bool allows_level(const std::string& name, int level) const;
  std::vector<std::string> level_types(int level) const;

  const std::map<std::string, std::set<std::string>>& containment() const {
    return containment_;
  }

  /// True when a level-2 entity of type l2 may sit inside a level-1 entity of
  /// type l1. Also true for (t, "O") with t a level-1 type, and for ("O","O").
  bool authorized(const std::string& l1, const std::string& l2) const;

  /// All authorized pairs, sorted, including ("O","O").
  const std::vector<JointLabel>& joint_labels() const { return joint_labels_; }

  /// Map a joint label to the single label used by the flat view. The default
  /// rule keeps the deepest non-O side; [flat_map] entries override it.
  /// Throws std::invalid_argument when the pair is not authorized.
  std::string flat_label(const JointLabel& j) const;
  /// Same mapping without the authorization check, for scoring predictions
  /// that may carry unauthorized pairs.
  std::string flat_label_lenient(const std::string& l1, const std::string& l2) const;

  const std::map<std::string, std::string>& flat_overrides() const { return flat_overrides_; }

  /// Stable content hash, stored in model files so a model cannot be applied
  /// under a different schema by accident.
  uint64_t fingerprint() const;
  std::string to_text() const;

 private:
  void validate_and_index();

  std::vector<EntityType> types_;
  std::map<std::string, std::set<std::string>> containment_;
  std::map<std::string, std::string> flat_overrides_;
  std::vector<JointLabel> joint_labels_;
  std::set<std::string> authorized_;  // "l1+l2" keys for O(log n) lookups
};

/// Tag vocabulary induced by schema, tag format and mode. Joint tags look
/// like "B-SPAT+B-LOC" or "I-SPAT+O"; the all-outside tag is "O+O" in joint
/// mode and "O" otherwise. Order is deterministic: labels sorted, prefix
/// variants grouped per label.
std::vector<std::string> tag_vocabulary(const LabelSchema& schema, TagFormat format, TagMode mode);

/// Tree over the joint tag vocabulary used by the hierarchical loss.
/// Every leaf is one tag. The path root -> level-1 label -> joint label
/// (-> prefixed tag under iob2) has uniform depth, so tags that share a
/// level-1 type sit closer together than tags that do not.
struct LabelTree {
  struct Node {
    std::string label;
    int parent = -1;
    std::vector<int> children;
    int depth = 0;       // root is 0
    int leaf_begin = 0;  // leaf index range covered by the subtree
    int leaf_end = 0;
    int leaf = -1;  // leaf index, -1 for internal nodes
  };

  std::vector<Node> nodes;        // nodes[0] is the root
  std::vector<int> leaf_node;     // leaf index -> node id
  std::vector<std::string> tags;  // leaf index -> tag string
  int height = 0;

  int root() const { return 0; }
  int lca(int a, int b) const;
  /// Number of edges on the path between two nodes.
  int distance(int a, int b) const;
  int leaf_distance(int leaf_a, int leaf_b) const;
};

LabelTree build_label_tree(const LabelSchema& schema, TagFormat format);

}  // namespace nestag
