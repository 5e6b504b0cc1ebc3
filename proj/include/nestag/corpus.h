#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nestag/align.h"
#include "nestag/tagcodec.h"

namespace nestag {

struct Corpus {
  std::vector<AnnotatedEntry> entries;
  uint64_t schema_fingerprint = 0;       // fingerprint of the schema entries were validated against
  std::string provenance = "gold";       // gold, noisy, or synthetic
};

/// Tabular format: one token per row as "token<TAB>level-1 tag<TAB>level-2
/// tag", a blank line between entries, and a "# source_id = ..." comment
/// before each entry. iob2 round-trips exactly; io merges adjacent
/// same-type entities on the way in.
void write_tsv(const Corpus& corpus, std::ostream& out, TagFormat format = TagFormat::iob2);
void write_tsv_file(const Corpus& corpus, const std::string& path,
                    TagFormat format = TagFormat::iob2);
Corpus read_tsv(std::istream& in, const LabelSchema& schema, TagFormat format = TagFormat::iob2,
                bool validate = true);
Corpus read_tsv_file(const std::string& path, const LabelSchema& schema,
                     TagFormat format = TagFormat::iob2, bool validate = true);

/// One JSON object per line: {"source_id", "text", "entities": [{"type",
/// "level", "begin", "end", "parent"}]}. Spans are token indices; tokens are
/// recovered with the standard tokenizer. Full fidelity, unlike the io TSV.
void write_jsonl(const Corpus& corpus, std::ostream& out);
void write_jsonl_file(const Corpus& corpus, const std::string& path);
Corpus read_jsonl(std::istream& in, const LabelSchema& schema, bool validate = true);
Corpus read_jsonl_file(const std::string& path, const LabelSchema& schema, bool validate = true);

/// Plain text variants, {"source_id", "text"} per line. Input for projection.
std::map<std::string, std::string> read_texts_jsonl(std::istream& in);
std::map<std::string, std::string> read_texts_jsonl_file(const std::string& path);
void write_texts_jsonl(const std::map<std::string, std::string>& texts, std::ostream& out);

/// Word lists the synthesizer draws from. The copies under data/lexicons/
/// hold the same content as builtin(); load_dir() reads replacements from
/// files named streets.txt, professions.txt, surnames.txt, firstnames.txt.
struct Lexicons {
  std::vector<std::string> streets;
  std::vector<std::string> professions;
  std::vector<std::string> surnames;
  std::vector<std::string> firstnames;

  static const Lexicons& builtin();
  static Lexicons load_dir(const std::string& dir);
};

/// Synthetic directory entries in the shape of 19th century Paris trade
/// directories: a person, often an activity, and one or two addresses.
/// Deterministic for a fixed seed.
Corpus synth_generate(int n, uint64_t seed, const LabelSchema& schema,
                      const Lexicons& lexicons = Lexicons::builtin());

struct NoiseConfig {
  double rate = 0.05;       // per-character edit probability
  double sub_weight = 0.5;  // edit type mix
  double del_weight = 0.3;
  double ins_weight = 0.2;
  double digit_bias = 2.0;  // multiplies the edit rate on digits
  uint64_t seed = 0;
};

/// Character-level corruption imitating OCR output. Digits suffer most:
/// their edit rate is scaled by digit_bias and substitutions usually swap a
/// digit for a lookalike letter or punctuation mark.
std::string noise_inject(const std::string& text, const NoiseConfig& cfg);

/// One noisy rendering per entry, seeded per source id so corpus order does
/// not matter.
std::map<std::string, std::string> make_noisy_texts(const Corpus& corpus, const NoiseConfig& cfg);

/// Projection over a whole corpus (see project_entry). Entries that lose all
/// entities disappear from the result.
Corpus build_noisy_corpus(const Corpus& gold, const std::map<std::string, std::string>& noisy,
                          ProjectionStats& stats);

struct SplitRatios {
  double train = 0.6, dev = 0.2, test = 0.2;
};

/// Seeded shuffle, then |train| = floor(train * n), |dev| = floor(dev * n),
/// and the remainder is test.
std::array<Corpus, 3> split_corpus(const Corpus& corpus, const SplitRatios& ratios, uint64_t seed);

}  // namespace nestag
