#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "nestag/rng.h"
#include "nestag/tagcodec.h"
#include "oracles.h"
#include "random_entries.h"

using namespace nestag;

namespace {

const LabelSchema& dir_schema() { return LabelSchema::paris_directories(); }

std::vector<std::string> texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

// The trade-directory entry used throughout: a person, a profession and one
// address whose street and house number are nested inside the address span.
AnnotatedEntry dufour_entry() {
  AnnotatedEntry e;
  e.source_id = "dufour";
  e.text = "Dufour (Gabriel), libraire, r. de Vaugirard, 7";
  e.tokens = tokenize(e.text);
  e.entities = {
      {"PER", 1, 0, 4, -1},       // Dufour ( Gabriel )
      {"ACT", 1, 5, 6, -1},       // libraire
      {"SPAT", 1, 7, 13, -1},     // r . de Vaugirard , 7
      {"LOC", 2, 7, 11, 2},       // r . de Vaugirard
      {"CARDINAL", 2, 12, 13, 2}  // 7
  };
  return e;
}

AnnotatedEntry aubery_entry() {
  AnnotatedEntry e;
  e.source_id = "aubery";
  e.text = "Aubery je. r. Quincamp. pass. Beaufort.";
  e.tokens = tokenize(e.text);
  e.entities = {
      {"PER", 1, 0, 3, -1},   // Aubery je .
      {"SPAT", 1, 3, 7, -1},  // r . Quincamp .
      {"SPAT", 1, 7, 10, -1}, // pass . Beaufort
      {"LOC", 2, 3, 7, 1},
      {"LOC", 2, 7, 10, 2},
  };
  return e;
}

}  // namespace

TEST_CASE("tokenizer splits punctuation into standalone tokens") {
  auto tokens = tokenize("r. de Vaugirard, 7");
  CHECK(texts(tokens) == std::vector<std::string>{"r", ".", "de", "Vaugirard", ",", "7"});
  CHECK(tokens[0].begin == 0);
  CHECK(tokens[1].begin == 1);
  CHECK(tokens[3].text == "Vaugirard");
  CHECK(tokens[3].begin == 6);
  CHECK(tokens[3].end == 15);

  // offsets are codepoints, so accents do not shift later tokens
  auto accents = tokenize("Aubéry, père");
  CHECK(texts(accents) == std::vector<std::string>{"Aubéry", ",", "père"});
  CHECK(accents[1].begin == 6);
  CHECK(accents[2].begin == 8);

  CHECK(tokenize("").empty());
  CHECK(tokenize("   ").empty());
  CHECK(texts(tokenize("Saint-Honoré")) == std::vector<std::string>{"Saint", "-", "Honoré"});
}

TEST_CASE("directory entry with nested address encodes to the expected columns") {
  AnnotatedEntry e = dufour_entry();
  REQUIRE(e.tokens.size() == 13);
  REQUIRE(texts(e.tokens) == std::vector<std::string>{"Dufour", "(", "Gabriel", ")", ",",
                                                      "libraire", ",", "r", ".", "de",
                                                      "Vaugirard", ",", "7"});
  validate_entry(e, dir_schema());

  auto l1 = encode(e, TagFormat::iob2, TagMode::l1, dir_schema());
  CHECK(l1.tags == std::vector<std::string>{"B-PER", "I-PER", "I-PER", "I-PER", "O", "B-ACT", "O",
                                            "B-SPAT", "I-SPAT", "I-SPAT", "I-SPAT", "I-SPAT",
                                            "I-SPAT"});

  auto l2 = encode(e, TagFormat::iob2, TagMode::l2, dir_schema());
  CHECK(l2.tags == std::vector<std::string>{"O", "O", "O", "O", "O", "O", "O", "B-LOC", "I-LOC",
                                            "I-LOC", "I-LOC", "O", "B-CARDINAL"});

  auto joint = encode(e, TagFormat::iob2, TagMode::joint, dir_schema());
  CHECK(joint.tags == std::vector<std::string>{"B-PER+O", "I-PER+O", "I-PER+O", "I-PER+O", "O+O",
                                               "B-ACT+O", "O+O", "B-SPAT+B-LOC", "I-SPAT+I-LOC",
                                               "I-SPAT+I-LOC", "I-SPAT+I-LOC", "I-SPAT+O",
                                               "I-SPAT+B-CARDINAL"});

  auto joint_io = encode(e, TagFormat::io, TagMode::joint, dir_schema());
  CHECK(joint_io.tags == std::vector<std::string>{"I-PER+O", "I-PER+O", "I-PER+O", "I-PER+O",
                                                  "O+O", "I-ACT+O", "O+O", "I-SPAT+I-LOC",
                                                  "I-SPAT+I-LOC", "I-SPAT+I-LOC", "I-SPAT+I-LOC",
                                                  "I-SPAT+O", "I-SPAT+I-CARDINAL"});

  // the joint column is exactly the composition of the two single columns
  CHECK(compose_joint(l1, l2).tags == joint.tags);
  auto [back1, back2] = decompose_joint(joint);
  CHECK(back1.tags == l1.tags);
  CHECK(back2.tags == l2.tags);

  // and everything decodes back to the original annotation
  CHECK(decode(joint) == e.entities);
  CHECK(decode(joint_io) == e.entities);  // no adjacent same-type spans here
}

TEST_CASE("abbreviated entry with two bare addresses matches the flat columns") {
  AnnotatedEntry e = aubery_entry();
  REQUIRE(texts(e.tokens) == std::vector<std::string>{"Aubery", "je", ".", "r", ".", "Quincamp",
                                                      ".", "pass", ".", "Beaufort", "."});
  validate_entry(e, dir_schema());

  auto flat_io = encode(e, TagFormat::io, TagMode::flat, dir_schema());
  CHECK(flat_io.tags == std::vector<std::string>{"I-PER", "I-PER", "I-PER", "I-LOC", "I-LOC",
                                                 "I-LOC", "I-LOC", "I-LOC", "I-LOC", "I-LOC",
                                                 "O"});

  auto flat_iob2 = encode(e, TagFormat::iob2, TagMode::flat, dir_schema());
  CHECK(flat_iob2.tags == std::vector<std::string>{"B-PER", "I-PER", "I-PER", "B-LOC", "I-LOC",
                                                   "I-LOC", "I-LOC", "B-LOC", "I-LOC", "I-LOC",
                                                   "O"});
}

TEST_CASE("encode validates, encode_tags does not") {
  AnnotatedEntry e = dufour_entry();
  e.entities[3].type = "TITREH";  // PER+TITREH is fine, SPAT+TITREH is not
  CHECK_THROWS_AS(encode(e, TagFormat::iob2, TagMode::joint, dir_schema()),
                  std::invalid_argument);
  CHECK(encode_tags(e, TagFormat::iob2, TagMode::joint).tags[7] == "B-SPAT+B-TITREH");
  // the flat mode needs the schema's mapping, so the tag-only path refuses it
  CHECK_THROWS_AS(encode_tags(dufour_entry(), TagFormat::io, TagMode::flat), std::logic_error);
}

TEST_CASE("decode is tolerant of malformed model output") {
  TagSequence seq;
  seq.format = TagFormat::iob2;
  seq.mode = TagMode::joint;

  // an I without an open entity starts one; a level-2 run over differing
  // level-1 tags is cut at the boundary
  seq.tags = {"I-PER+O", "I-SPAT+I-LOC", "I-PER+I-LOC"};
  auto entities = decode(seq);
  REQUIRE(entities.size() == 5);
  CHECK(entities[0] == Entity{"PER", 1, 0, 1, -1});
  CHECK(entities[1] == Entity{"SPAT", 1, 1, 2, -1});
  CHECK(entities[2] == Entity{"PER", 1, 2, 3, -1});
  CHECK(entities[3] == Entity{"LOC", 2, 1, 2, 1});
  CHECK(entities[4] == Entity{"LOC", 2, 2, 3, 2});

  // level-2 over outside level-1 stays an orphan
  seq.tags = {"O+B-LOC", "O+I-LOC"};
  entities = decode(seq);
  REQUIRE(entities.size() == 1);
  CHECK(entities[0] == Entity{"LOC", 2, 0, 2, -1});
}

TEST_CASE("parent_type resolves through the entity vector") {
  AnnotatedEntry e = dufour_entry();
  CHECK(e.parent_type(e.entities[3]) == "SPAT");
  CHECK(e.parent_type(e.entities[0]) == "O");
  Entity orphan{"LOC", 2, 0, 1, -1};
  CHECK(e.parent_type(orphan) == "O");
}

TEST_CASE("flat view fragments level-1 spans around their children") {
  AnnotatedEntry e;
  e.source_id = "frag";
  e.tokens = tokenize("a b c d e");
  e.text = "a b c d e";
  e.entities = {
      {"SPAT", 1, 0, 5, -1},
      {"LOC", 2, 1, 3, 0},
  };
  auto view = flat_view(e, dir_schema());
  REQUIRE(view.size() == 3);
  CHECK(view[0] == Entity{"SPAT", 1, 0, 1, -1});
  CHECK(view[1] == Entity{"LOC", 1, 1, 3, -1});
  CHECK(view[2] == Entity{"SPAT", 1, 3, 5, -1});
}

// ---------------------------------------------------------------------------
// Round-trip properties against an entity-level merge oracle.

using testutil::io_merge_oracle;

TEST_CASE("joint round trips: iob2 is identity, io merges touching same-type spans") {
  const LabelSchema& schema = dir_schema();
  std::mt19937_64 g(20250817);
  int merged_cases = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    AnnotatedEntry e = testutil::random_entry(schema, g);
    validate_entry(e, schema);

    auto iob2 = encode_tags(e, TagFormat::iob2, TagMode::joint);
    CHECK(decode(iob2) == e.entities);

    auto io = encode_tags(e, TagFormat::io, TagMode::joint);
    auto expect = io_merge_oracle(e.entities);
    CHECK(decode(io) == expect);
    if (expect.size() != e.entities.size()) ++merged_cases;

    // io -> iob2 -> io is stable once the io loss has happened
    auto as_iob2 = convert(io, TagFormat::iob2);
    CHECK(decode(as_iob2) == expect);
    CHECK(convert(as_iob2, TagFormat::io).tags == io.tags);

    // composition of the single-level encodings is the joint encoding
    auto l1 = encode_tags(e, TagFormat::iob2, TagMode::l1);
    auto l2 = encode_tags(e, TagFormat::iob2, TagMode::l2);
    CHECK(compose_joint(l1, l2).tags == iob2.tags);
    auto [d1, d2] = decompose_joint(iob2);
    CHECK(d1.tags == l1.tags);
    CHECK(d2.tags == l2.tags);
  }
  // the generator must actually exercise the merging branch
  CHECK(merged_cases > 100);
}

TEST_CASE("flat view equals a per-token covering oracle") {
  const LabelSchema& schema = dir_schema();
  std::mt19937_64 g(7);
  for (int iter = 0; iter < 500; ++iter) {
    AnnotatedEntry e = testutil::random_entry(schema, g);

    // cover[i]: which entity owns token i (innermost wins), -1 for none
    int n = static_cast<int>(e.tokens.size());
    std::vector<int> cover(n, -1);
    for (size_t idx = 0; idx < e.entities.size(); ++idx)
      if (e.entities[idx].level == 1)
        for (int k = e.entities[idx].begin; k < e.entities[idx].end; ++k)
          cover[k] = static_cast<int>(idx);
    for (size_t idx = 0; idx < e.entities.size(); ++idx)
      if (e.entities[idx].level == 2)
        for (int k = e.entities[idx].begin; k < e.entities[idx].end; ++k)
          cover[k] = static_cast<int>(idx);

    std::vector<Entity> expect;
    for (int i = 0; i < n;) {
      if (cover[i] < 0) {
        ++i;
        continue;
      }
      int j = i;
      while (j < n && cover[j] == cover[i]) ++j;
      const Entity& src = e.entities[cover[i]];
      std::string label = src.level == 2
                              ? schema.flat_label_lenient(e.parent_type(src), src.type)
                              : schema.flat_label_lenient(src.type, "O");
      if (label != "O") expect.push_back({label, 1, i, j, -1});
      i = j;
    }
    CHECK(flat_view(e, schema) == expect);
  }
}

TEST_CASE("validate_entry rejects structural breakage") {
  const LabelSchema& schema = dir_schema();
  AnnotatedEntry base = dufour_entry();

  auto expect_throw = [&](auto mutate) {
    AnnotatedEntry e = base;
    mutate(e);
    CHECK_THROWS_AS(validate_entry(e, schema), std::invalid_argument);
  };
  expect_throw([](AnnotatedEntry& e) { e.entities[0].end = 99; });
  expect_throw([](AnnotatedEntry& e) { e.entities[0].end = e.entities[0].begin; });
  expect_throw([](AnnotatedEntry& e) { e.entities[0].type = "NOPE"; });
  expect_throw([](AnnotatedEntry& e) { e.entities[0].level = 3; });
  expect_throw([](AnnotatedEntry& e) { e.entities[3].parent = -1; });       // orphan child
  expect_throw([](AnnotatedEntry& e) { e.entities[3].parent = 4; });        // parent not level 1
  expect_throw([](AnnotatedEntry& e) { e.entities[3].begin = 5; });         // leaks out of parent
  expect_throw([](AnnotatedEntry& e) { e.entities[1].begin = 3; });         // level-1 overlap
  expect_throw([](AnnotatedEntry& e) { e.entities[4].begin = 10; });        // level-2 overlap
  expect_throw([](AnnotatedEntry& e) { e.entities[3].type = "TITREH"; });   // unauthorized pair
  expect_throw([](AnnotatedEntry& e) { e.entities[0].parent = 2; });        // level-1 with parent
  expect_throw([](AnnotatedEntry& e) { e.tokens[0].end = 0; });             // empty token span
}
