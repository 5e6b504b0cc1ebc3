#include "nestag/schema.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nestag/rng.h"

namespace nestag {

const char* to_string(TagFormat f) { return f == TagFormat::io ? "io" : "iob2"; }

const char* to_string(TagMode m) {
  switch (m) {
    case TagMode::l1: return "l1";
    case TagMode::l2: return "l2";
    case TagMode::joint: return "joint";
    case TagMode::flat: return "flat";
  }
  return "?";
}

TagFormat tag_format_from_string(const std::string& s) {
  if (s == "io") return TagFormat::io;
  if (s == "iob2") return TagFormat::iob2;
  throw std::invalid_argument("unknown tag format '" + s + "' (expected io or iob2)");
}

TagMode tag_mode_from_string(const std::string& s) {
  if (s == "l1") return TagMode::l1;
  if (s == "l2") return TagMode::l2;
  if (s == "joint") return TagMode::joint;
  if (s == "flat") return TagMode::flat;
  throw std::invalid_argument("unknown tag mode '" + s + "'");
}

LabelSchema::LabelSchema(std::vector<EntityType> types,
                         std::map<std::string, std::set<std::string>> containment,
                         std::map<std::string, std::string> flat_overrides)
    : types_(std::move(types)),
      containment_(std::move(containment)),
      flat_overrides_(std::move(flat_overrides)) {
  validate_and_index();
}

bool LabelSchema::has_type(const std::string& name) const {
  for (const auto& t : types_)
    if (t.name == name) return true;
  return false;
}

const EntityType& LabelSchema::type(const std::string& name) const {
  for (const auto& t : types_)
    if (t.name == name) return t;
  throw std::invalid_argument("unknown entity type '" + name + "'");
}

bool LabelSchema::allows_level(const std::string& name, int level) const {
  for (const auto& t : types_)
    if (t.name == name) return level == 1 ? t.level1 : t.level2;
  return false;
}

std::vector<std::string> LabelSchema::level_types(int level) const {
  std::vector<std::string> out;
  for (const auto& t : types_)
    if ((level == 1 && t.level1) || (level == 2 && t.level2)) out.push_back(t.name);
  std::sort(out.begin(), out.end());
  return out;
}

bool LabelSchema::authorized(const std::string& l1, const std::string& l2) const {
  return authorized_.count(l1 + "+" + l2) > 0;
}

std::string LabelSchema::flat_label(const JointLabel& j) const {
  if (!authorized(j.l1, j.l2))
    throw std::invalid_argument("joint label " + j.str() + " is not authorized by the schema");
  return flat_label_lenient(j.l1, j.l2);
}

std::string LabelSchema::flat_label_lenient(const std::string& l1, const std::string& l2) const {
  auto it = flat_overrides_.find(l1 + "+" + l2);
  if (it != flat_overrides_.end()) return it->second;
  // deepest non-O side wins
  if (l2 != "O") return l2;
  return l1;
}

namespace {

void check_type_name(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("empty entity type name");
  if (name == "O") throw std::invalid_argument("type name 'O' is reserved for outside");
  for (char c : name)
    if (c == '-' || c == '+' || c == '\t' || c == ' ')
      throw std::invalid_argument("type name '" + name +
                                  "' contains a reserved character ('-', '+' or whitespace)");
}

}  // namespace

void LabelSchema::validate_and_index() {
  std::set<std::string> seen;
  for (const auto& t : types_) {
    check_type_name(t.name);
    if (!seen.insert(t.name).second)
      throw std::invalid_argument("duplicate entity type '" + t.name + "'");
    if (!t.level1 && !t.level2)
      throw std::invalid_argument("type '" + t.name + "' allows no level");
  }
  for (const auto& [parent, children] : containment_) {
    if (!has_type(parent))
      throw std::invalid_argument("containment parent '" + parent + "' is not a declared type");
    if (!type(parent).level1)
      throw std::invalid_argument("containment parent '" + parent + "' does not allow level 1");
    for (const auto& child : children) {
      if (!has_type(child))
        throw std::invalid_argument("containment child '" + child + "' is not a declared type");
      if (!type(child).level2)
        throw std::invalid_argument("containment child '" + child + "' does not allow level 2");
    }
  }
  // every level-2 type must be reachable through some containment rule
  for (const auto& t : types_) {
    if (!t.level2) continue;
    bool contained = false;
    for (const auto& [parent, children] : containment_)
      if (children.count(t.name)) contained = true;
    if (!contained)
      throw std::invalid_argument("level-2 type '" + t.name +
                                  "' appears in no containment set and can never occur");
  }

  joint_labels_.clear();
  joint_labels_.push_back({"O", "O"});
  for (const auto& t : types_) {
    if (!t.level1) continue;
    joint_labels_.push_back({t.name, "O"});
    auto it = containment_.find(t.name);
    if (it == containment_.end()) continue;
    for (const auto& child : it->second) joint_labels_.push_back({t.name, child});
  }
  std::sort(joint_labels_.begin(), joint_labels_.end());

  authorized_.clear();
  for (const auto& j : joint_labels_) authorized_.insert(j.str());

  for (const auto& [key, value] : flat_overrides_) {
    if (!authorized_.count(key))
      throw std::invalid_argument("flat_map key '" + key + "' is not an authorized joint label");
    if (value != "O" && !has_type(value))
      throw std::invalid_argument("flat_map value '" + value + "' is not a declared type");
  }
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// commas and whitespace both separate list items
std::vector<std::string> split_list(const std::string& s) {
  std::string normalized = s;
  for (char& c : normalized)
    if (c == ',') c = ' ';
  std::vector<std::string> out;
  std::istringstream in(normalized);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

LabelSchema LabelSchema::parse(const std::string& text) {
  std::vector<EntityType> types;
  std::map<std::string, std::set<std::string>> containment;
  std::map<std::string, std::string> flat_overrides;

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      if (section != "types" && section != "containment" && section != "flat_map")
        throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                    ": unknown section [" + section + "]");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                  ": expected 'name = ...'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (section == "types") {
      EntityType et;
      et.name = key;
      for (const auto& lv : split_list(value)) {
        if (lv == "1")
          et.level1 = true;
        else if (lv == "2")
          et.level2 = true;
        else
          throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                      ": level must be 1 or 2, got '" + lv + "'");
      }
      types.push_back(et);
    } else if (section == "containment") {
      auto& children = containment[key];
      for (const auto& c : split_list(value)) children.insert(c);
    } else if (section == "flat_map") {
      flat_overrides[key] = value;
    } else {
      throw std::invalid_argument("schema line " + std::to_string(lineno) +
                                  ": content before any section header");
    }
  }
  if (types.empty()) throw std::invalid_argument("schema declares no types");
  return LabelSchema(std::move(types), std::move(containment), std::move(flat_overrides));
}

LabelSchema LabelSchema::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open schema file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const LabelSchema& LabelSchema::paris_directories() {
  static const LabelSchema schema(
      {
          {"PER", true, false},
          {"ACT", true, true},
          {"DESC", true, false},
          {"TITREH", false, true},
          {"TITREP", false, true},
          {"TITRE", true, false},
          {"SPAT", true, false},
          {"LOC", false, true},
          {"CARDINAL", false, true},
          {"FT", false, true},
      },
      {
          {"SPAT", {"LOC", "CARDINAL", "FT"}},
          {"DESC", {"ACT", "TITREP"}},
          {"PER", {"TITREH"}},
      });
  return schema;
}

std::string LabelSchema::to_text() const {
  std::ostringstream out;
  out << "[types]\n";
  for (const auto& t : types_) {
    out << t.name << " =";
    if (t.level1) out << " 1";
    if (t.level2) out << " 2";
    out << "\n";
  }
  out << "\n[containment]\n";
  for (const auto& [parent, children] : containment_) {
    out << parent << " =";
    for (const auto& c : children) out << " " << c;
    out << "\n";
  }
  if (!flat_overrides_.empty()) {
    out << "\n[flat_map]\n";
    for (const auto& [k, v] : flat_overrides_) out << k << " = " << v << "\n";
  }
  return out.str();
}

uint64_t LabelSchema::fingerprint() const {
  // canonicalize before hashing so declaration order does not matter
  std::string canon;
  std::vector<std::string> lines;
  for (const auto& t : types_) {
    std::string l = "t " + t.name;
    if (t.level1) l += " 1";
    if (t.level2) l += " 2";
    lines.push_back(l);
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) canon += l + "\n";
  for (const auto& [parent, children] : containment_) {
    canon += "c " + parent;
    for (const auto& c : children) canon += " " + c;
    canon += "\n";
  }
  for (const auto& [k, v] : flat_overrides_) canon += "f " + k + " " + v + "\n";
  return fnv1a64(canon);
}

namespace {

std::string io_tag(const JointLabel& j) {
  if (j.l1 == "O" && j.l2 == "O") return "O+O";
  std::string t = "I-" + j.l1 + "+";
  t += j.l2 == "O" ? "O" : "I-" + j.l2;
  return t;
}

}  // namespace

std::vector<std::string> tag_vocabulary(const LabelSchema& schema, TagFormat format, TagMode mode) {
  std::vector<std::string> out;
  if (mode == TagMode::joint) {
    for (const auto& j : schema.joint_labels()) {
      if (j.l1 == "O") {
        out.push_back("O+O");
      } else if (format == TagFormat::io) {
        out.push_back(io_tag(j));
      } else if (j.l2 == "O") {
        out.push_back("B-" + j.l1 + "+O");
        out.push_back("I-" + j.l1 + "+O");
      } else {
        // "B-l1+I-l2" cannot occur: an inner entity cannot have started
        // before its enclosing entity does.
        out.push_back("B-" + j.l1 + "+B-" + j.l2);
        out.push_back("I-" + j.l1 + "+B-" + j.l2);
        out.push_back("I-" + j.l1 + "+I-" + j.l2);
      }
    }
    return out;
  }

  std::vector<std::string> labels;
  if (mode == TagMode::l1) {
    labels = schema.level_types(1);
  } else if (mode == TagMode::l2) {
    labels = schema.level_types(2);
  } else {  // flat
    std::set<std::string> seen;
    for (const auto& j : schema.joint_labels()) {
      std::string f = schema.flat_label(j);
      if (f != "O") seen.insert(f);
    }
    labels.assign(seen.begin(), seen.end());
  }
  out.push_back("O");
  for (const auto& l : labels) {
    if (format == TagFormat::io) {
      out.push_back("I-" + l);
    } else {
      out.push_back("B-" + l);
      out.push_back("I-" + l);
    }
  }
  return out;
}

int LabelTree::lca(int a, int b) const {
  while (a != b) {
    if (nodes[a].depth >= nodes[b].depth)
      a = nodes[a].parent;
    else
      b = nodes[b].parent;
  }
  return a;
}

int LabelTree::distance(int a, int b) const {
  int l = lca(a, b);
  return (nodes[a].depth - nodes[l].depth) + (nodes[b].depth - nodes[l].depth);
}

int LabelTree::leaf_distance(int leaf_a, int leaf_b) const {
  return distance(leaf_node[leaf_a], leaf_node[leaf_b]);
}

LabelTree build_label_tree(const LabelSchema& schema, TagFormat format) {
  LabelTree tree;
  tree.height = format == TagFormat::io ? 2 : 3;
  tree.nodes.push_back({"<root>", -1, {}, 0, 0, 0, -1});

  auto add_node = [&tree](const std::string& label, int parent) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({label, parent, {}, tree.nodes[parent].depth + 1, 0, 0, -1});
    tree.nodes[parent].children.push_back(id);
    return id;
  };
  auto add_leaf = [&tree, &add_node](const std::string& tag, int parent) {
    int id = add_node(tag, parent);
    int leaf = static_cast<int>(tree.tags.size());
    tree.nodes[id].leaf = leaf;
    tree.tags.push_back(tag);
    tree.leaf_node.push_back(id);
  };

  std::string cur_l1;
  int l1_node = -1;
  for (const auto& j : schema.joint_labels()) {
    if (l1_node < 0 || j.l1 != cur_l1) {
      cur_l1 = j.l1;
      l1_node = add_node(j.l1, tree.root());
    }
    if (format == TagFormat::io) {
      add_leaf(j.l1 == "O" ? "O+O" : io_tag(j), l1_node);
    } else {
      int joint_node = add_node(j.str(), l1_node);
      if (j.l1 == "O") {
        add_leaf("O+O", joint_node);
      } else if (j.l2 == "O") {
        add_leaf("B-" + j.l1 + "+O", joint_node);
        add_leaf("I-" + j.l1 + "+O", joint_node);
      } else {
        add_leaf("B-" + j.l1 + "+B-" + j.l2, joint_node);
        add_leaf("I-" + j.l1 + "+B-" + j.l2, joint_node);
        add_leaf("I-" + j.l1 + "+I-" + j.l2, joint_node);
      }
    }
  }

  // leaf ranges bottom-up; children were appended in leaf order
  for (int i = static_cast<int>(tree.nodes.size()) - 1; i >= 0; --i) {
    auto& n = tree.nodes[i];
    if (n.leaf >= 0) {
      n.leaf_begin = n.leaf;
      n.leaf_end = n.leaf + 1;
    } else {
      n.leaf_begin = tree.nodes[n.children.front()].leaf_begin;
      n.leaf_end = tree.nodes[n.children.back()].leaf_end;
    }
  }
  return tree;
}

}  // namespace nestag
