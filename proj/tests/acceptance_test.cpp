// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; failures add indented notes. Exit status is 0 only when every
// criterion passes, so this binary is the release switch.
//
// Run all criteria with no arguments, or pass criterion numbers to run a
// subset while debugging, e.g. "acceptance_test 6 7".

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nestag/align.h"
#include "nestag/corpus.h"
#include "nestag/experiment.h"
#include "nestag/hxe.h"
#include "nestag/metrics.h"
#include "nestag/rng.h"
#include "nestag/tagcodec.h"
#include "nestag/tagger.h"
#include "oracles.h"
#include "random_entries.h"

using namespace nestag;
namespace fs = std::filesystem;

namespace {

using Notes = std::vector<std::string>;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

bool expect(Notes& notes, bool ok, const std::string& what) {
  if (!ok) notes.push_back(what);
  return ok;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. tag codec fidelity: two real directory entries against frozen columns

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

bool check_tags(Notes& notes, const char* label, const TagSequence& got,
                const std::vector<std::string>& want) {
  if (got.tags == want) return true;
  std::string line = std::string(label) + ": got";
  for (const auto& t : got.tags) line += " " + t;
  notes.push_back(line);
  return false;
}

bool criterion_codec(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  bool ok = true;

  AnnotatedEntry d = dufour_entry();
  validate_entry(d, schema);
  ok &= check_tags(notes, "dufour level 1",
                   encode(d, TagFormat::iob2, TagMode::l1, schema),
                   {"B-PER", "I-PER", "I-PER", "I-PER", "O", "B-ACT", "O", "B-SPAT", "I-SPAT",
                    "I-SPAT", "I-SPAT", "I-SPAT", "I-SPAT"});
  ok &= check_tags(notes, "dufour level 2",
                   encode(d, TagFormat::iob2, TagMode::l2, schema),
                   {"O", "O", "O", "O", "O", "O", "O", "B-LOC", "I-LOC", "I-LOC", "I-LOC", "O",
                    "B-CARDINAL"});
  ok &= check_tags(notes, "dufour joint",
                   encode(d, TagFormat::iob2, TagMode::joint, schema),
                   {"B-PER+O", "I-PER+O", "I-PER+O", "I-PER+O", "O+O", "B-ACT+O", "O+O",
                    "B-SPAT+B-LOC", "I-SPAT+I-LOC", "I-SPAT+I-LOC", "I-SPAT+I-LOC", "I-SPAT+O",
                    "I-SPAT+B-CARDINAL"});

  AnnotatedEntry a = aubery_entry();
  validate_entry(a, schema);
  ok &= check_tags(notes, "aubery flat io",
                   encode(a, TagFormat::io, TagMode::flat, schema),
                   {"I-PER", "I-PER", "I-PER", "I-LOC", "I-LOC", "I-LOC", "I-LOC", "I-LOC",
                    "I-LOC", "I-LOC", "O"});
  ok &= check_tags(notes, "aubery flat iob2",
                   encode(a, TagFormat::iob2, TagMode::flat, schema),
                   {"B-PER", "I-PER", "I-PER", "B-LOC", "I-LOC", "I-LOC", "I-LOC", "B-LOC",
                    "I-LOC", "I-LOC", "O"});
  return ok;
}

// ---------------------------------------------------------------------------
// 2. round-trip laws on random schema-valid entries

bool criterion_roundtrip(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  std::mt19937_64 g(424242);
  long identity_failures = 0, merge_failures = 0, merged_cases = 0;
  for (int iter = 0; iter < 10000; ++iter) {
    AnnotatedEntry e = testutil::random_entry(schema, g);

    auto iob2 = encode_tags(e, TagFormat::iob2, TagMode::joint);
    if (decode(iob2) != e.entities) ++identity_failures;

    auto io = encode_tags(e, TagFormat::io, TagMode::joint);
    auto want = testutil::io_merge_oracle(e.entities);
    if (decode(io) != want) ++merge_failures;
    if (want.size() != e.entities.size()) ++merged_cases;
  }
  bool ok = true;
  ok &= expect(notes, identity_failures == 0,
               fmt("iob2 joint encode/decode identity broke on %ld of 10000 entries",
                   identity_failures));
  ok &= expect(notes, merge_failures == 0,
               fmt("io decode disagreed with the entity merge oracle on %ld of 10000 entries",
                   merge_failures));
  ok &= expect(notes, merged_cases > 500,
               fmt("generator exercised the io merge branch only %ld times", merged_cases));
  return ok;
}

// ---------------------------------------------------------------------------
// 3. hierarchical loss: CE collapse, finite differences, error ordering

bool criterion_hxe(Notes& notes) {
  bool ok = true;
  std::mt19937_64 g(31);

  // flat tree with alpha 0 is categorical cross-entropy
  {
    LabelTree tree = testutil::flat_tree(12);
    HxeConfig cfg;  // alpha 0
    double worst = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
      auto probs = testutil::random_probs(g, tree.tags.size());
      int gold = static_cast<int>(rand_below(g, tree.tags.size()));
      worst = std::max(worst, std::abs(hxe_loss(tree, probs, gold, cfg) - ce_loss(probs, gold)));
    }
    ok &= expect(notes, worst <= 1e-9,
                 fmt("flat-tree alpha=0 loss deviates from cross-entropy by %.3e", worst));
  }

  // analytic gradient against central finite differences on three shapes
  {
    const double h = 1e-5;
    double worst = 0.0;
    for (const LabelTree& tree : testutil::shape_zoo()) {
      for (int iter = 0; iter < 100; ++iter) {
        HxeConfig cfg;
        cfg.alpha = rand_unit(g);
        auto logits = testutil::random_logits(g, tree.tags.size());
        int gold = static_cast<int>(rand_below(g, tree.tags.size()));
        auto grad = hxe_gradient(tree, logits, gold, cfg);
        for (size_t j = 0; j < logits.size(); ++j) {
          auto hi = logits, lo = logits;
          hi[j] += h;
          lo[j] -= h;
          double fd = (hxe_loss(tree, softmax(hi), gold, cfg) -
                       hxe_loss(tree, softmax(lo), gold, cfg)) /
                      (2.0 * h);
          double rel =
              std::abs(grad[j] - fd) / std::max({std::abs(grad[j]), std::abs(fd), 1e-3});
          worst = std::max(worst, rel);
        }
      }
    }
    ok &= expect(notes, worst < 1e-4,
                 fmt("gradient vs finite differences: max relative error %.3e", worst));
  }

  // putting the stray mass on a sibling under the gold level-1 branch must
  // cost strictly less than putting it anywhere else, for every leaf pair
  {
    HxeConfig cfg;
    cfg.alpha = 0.5;
    const double m = 0.3;
    long violations = 0;
    for (TagFormat format : {TagFormat::io, TagFormat::iob2}) {
      LabelTree tree = build_label_tree(LabelSchema::paris_directories(), format);
      const int n = static_cast<int>(tree.tags.size());
      for (int gold = 0; gold < n; ++gold) {
        std::vector<double> loss_with(n, 0.0);
        for (int wrong = 0; wrong < n; ++wrong) {
          if (wrong == gold) continue;
          std::vector<double> probs(n, 0.0);
          probs[gold] = 1.0 - m;
          probs[wrong] = m;
          loss_with[wrong] = hxe_loss(tree, probs, gold, cfg);
        }
        int g1 = testutil::level1_ancestor(tree, gold);
        for (int same = 0; same < n; ++same) {
          if (same == gold || testutil::level1_ancestor(tree, same) != g1) continue;
          for (int other = 0; other < n; ++other) {
            if (other == gold || testutil::level1_ancestor(tree, other) == g1) continue;
            if (!(loss_with[same] < loss_with[other])) ++violations;
          }
        }
      }
    }
    ok &= expect(notes, violations == 0,
                 fmt("semantic ordering violated for %ld wrong-leaf pairs", violations));
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 4. metric parity with the brute-force item-set oracle

bool criterion_metrics(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  std::mt19937_64 g(41);
  long mismatches = 0, scope_identity_breaks = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    TagFormat format = iter % 2 ? TagFormat::iob2 : TagFormat::io;
    std::vector<AnnotatedEntry> gold, pred;
    int entries = 2 + static_cast<int>(rand_below(g, 3));
    for (int j = 0; j < entries; ++j) {
      AnnotatedEntry ge = testutil::random_entry(schema, g);
      ge.source_id = "e" + std::to_string(j);
      AnnotatedEntry pe;
      if (j % 3 == 0) {
        pe = ge;
        pe.entities.clear();
        testutil::add_random_entities(pe, schema, g);
      } else {
        pe = testutil::mutate_entities(ge, schema, g);
      }
      gold.push_back(std::move(ge));
      pred.push_back(std::move(pe));
    }
    for (Scope scope : all_scopes()) {
      PRF got = score_scope(gold, pred, scope, format, schema);
      testutil::Counts want = testutil::oracle_score(gold, pred, scope, format, schema);
      if (got.tp != want.tp || got.fp != want.fp || got.fn != want.fn) {
        if (++mismatches <= 3)
          notes.push_back(fmt("iter %d scope %s: got %ld/%ld/%ld want %ld/%ld/%ld", iter,
                              to_string(scope), got.tp, got.fp, got.fn, want.tp, want.fp,
                              want.fn));
      }
    }
    if (format == TagFormat::io) {
      PRF a = score_scope(gold, pred, Scope::l1l2, format, schema);
      PRF b = score_scope(gold, pred, Scope::pl1pl2, format, schema);
      if (a.tp != b.tp || a.fp != b.fp || a.fn != b.fn) ++scope_identity_breaks;
    }
  }
  bool ok = true;
  ok &= expect(notes, mismatches == 0, fmt("%ld scope/corpus oracle mismatches", mismatches));
  ok &= expect(notes, scope_identity_breaks == 0,
               fmt("io L1+L2 vs P-L1+P-L2 identity broke on %ld corpora", scope_identity_breaks));
  return ok;
}

// ---------------------------------------------------------------------------
// 5. alignment cost, identity projection, noisy projection structure

bool criterion_projection(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  bool ok = true;
  std::mt19937_64 g(51);

  long cost_breaks = 0;
  for (int iter = 0; iter < 5000; ++iter) {
    auto a = testutil::random_string(g, 64);
    auto b = testutil::random_string(g, 64);
    if (align_chars(a, b).cost != testutil::lev_oracle(a, b)) ++cost_breaks;
  }
  ok &= expect(notes, cost_breaks == 0,
               fmt("alignment cost != edit distance on %ld of 5000 pairs", cost_breaks));

  long identity_breaks = 0, identity_checked = 0;
  for (int iter = 0; iter < 500; ++iter) {
    AnnotatedEntry e = testutil::random_entry(schema, g);
    if (e.entities.empty()) continue;
    ProjectionStats stats;
    auto projected = project_entry(e, e.text, stats);
    ++identity_checked;
    if (!projected || projected->tokens != e.tokens || projected->entities != e.entities ||
        stats.entities_dropped != 0)
      ++identity_breaks;
  }
  ok &= expect(notes, identity_breaks == 0 && identity_checked > 300,
               fmt("identity projection changed %ld of %ld annotated entries", identity_breaks,
                   identity_checked));

  NoiseConfig noise;
  noise.rate = 0.15;
  long structure_breaks = 0, total = 0, projected_n = 0, dropped = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    AnnotatedEntry e = testutil::random_entry(schema, g);
    noise.seed = iter;
    std::string noisy_text = noise_inject(e.text, noise);
    ProjectionStats stats;
    auto projected = project_entry(e, noisy_text, stats);
    total += stats.entities_total;
    projected_n += stats.entities_projected;
    dropped += stats.entities_dropped;
    if (!projected) continue;
    try {
      validate_entry(*projected, schema);
    } catch (const std::exception& ex) {
      if (++structure_breaks <= 3) notes.push_back(fmt("iter %d: %s", iter, ex.what()));
      continue;
    }
    bool seen_l2 = false;
    int prev_begin[3] = {0, -1, -1};
    for (const auto& ent : projected->entities) {
      if (ent.level == 2) seen_l2 = true;
      if ((ent.level == 1 && seen_l2) || ent.begin < prev_begin[ent.level]) {
        ++structure_breaks;
        break;
      }
      prev_begin[ent.level] = ent.begin;
    }
  }
  ok &= expect(notes, structure_breaks == 0,
               fmt("%ld noisy projections lost ordering, nesting or validity", structure_breaks));
  ok &= expect(notes, projected_n + dropped == total, "projection stats do not add up");
  ok &= expect(notes, dropped > 0, "15% noise destroyed no spans at all; generator too tame");
  return ok;
}

// ---------------------------------------------------------------------------
// 6. direction of effect on the synthetic corpus, and 7. determinism

struct ExperimentArtifacts {
  Corpus clean;
  TrainConfig train;
  SplitRatios split;
  fs::path out_dir;
  bool ready = false;
};

ExperimentArtifacts g_artifacts;

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

bool criterion_experiment(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  bool ok = true;

  Corpus clean = synth_generate(2000, 0, schema);
  NoiseConfig noise;  // 5% character edits, digits twice as likely
  ProjectionStats pstats;
  Corpus noisy = build_noisy_corpus(clean, make_noisy_texts(clean, noise), pstats);
  ok &= expect(notes, noisy.entries.size() > 1900,
               fmt("noise destroyed too many entries: %zu left of 2000", noisy.entries.size()));

  ExperimentPlan plan;
  plan.datasets = {{"clean", clean}, {"noisy", noisy}};
  plan.strategies = {Strategy::m1, Strategy::m2, Strategy::m3, Strategy::flat};
  plan.formats = {TagFormat::io, TagFormat::iob2};
  plan.seeds = {0, 1, 2, 3, 4};
  plan.train.alpha = 0.5;  // give the hierarchical loss real edge weights
  plan.out_dir = (fs::temp_directory_path() / "nestag-acceptance-run").string();
  unsigned hw = std::thread::hardware_concurrency();
  plan.jobs = static_cast<int>(std::min(8u, std::max(1u, hw)));

  fs::remove_all(plan.out_dir);
  std::vector<CellResult> results = run_experiment(plan, schema);

  g_artifacts.clean = clean;
  g_artifacts.train = plan.train;
  g_artifacts.split = plan.split;
  g_artifacts.out_dir = plan.out_dir;
  g_artifacts.ready = true;

  for (const auto& r : results)
    if (!r.ok) {
      ok = false;
      notes.push_back(fmt("cell %s failed: %s", r.cell.name().c_str(), r.error.c_str()));
    }
  if (!ok) return false;

  // (a) joint-label strategies can never emit an unauthorized nesting
  for (const auto& r : results)
    if (r.cell.strategy == Strategy::m2 || r.cell.strategy == Strategy::m3)
      ok &= expect(notes, r.report.violations == 0,
                   fmt("cell %s produced %ld hierarchy violations", r.cell.name().c_str(),
                       r.report.violations));

  // (b) clean at least as good as noisy for every strategy, f1(All) pooled
  // over formats and seeds
  for (Strategy s : plan.strategies) {
    std::vector<double> on_clean, on_noisy;
    for (auto& r : results) {
      if (r.cell.strategy != s) continue;
      (r.cell.dataset == "clean" ? on_clean : on_noisy)
          .push_back(r.report.scopes.at(Scope::all).f1());
    }
    double c = mean(on_clean), n = mean(on_noisy);
    ok &= expect(notes, c >= n,
                 fmt("strategy %s scores better on noise: clean %.4f < noisy %.4f", to_string(s),
                     c, n));
  }

  // (c) house numbers suffer more from digit-biased noise than street names;
  // pooled over the nested strategies, both formats, all seeds
  {
    std::vector<double> card_clean, card_noisy, loc_clean, loc_noisy;
    for (auto& r : results) {
      if (r.cell.strategy == Strategy::flat) continue;
      auto& card = r.cell.dataset == "clean" ? card_clean : card_noisy;
      auto& loc = r.cell.dataset == "clean" ? loc_clean : loc_noisy;
      card.push_back(r.report.per_type.at("CARDINAL").f1());
      loc.push_back(r.report.per_type.at("LOC").f1());
    }
    double card_drop = mean(card_clean) - mean(card_noisy);
    double loc_drop = mean(loc_clean) - mean(loc_noisy);
    ok &= expect(notes, card_drop > loc_drop,
                 fmt("CARDINAL drop %.4f not larger than LOC drop %.4f", card_drop, loc_drop));
  }

  // (d) absolute floor for the reference cell family
  {
    std::vector<double> f1;
    for (auto& r : results)
      if (r.cell.dataset == "clean" && r.cell.strategy == Strategy::m2 &&
          r.cell.format == TagFormat::io)
        f1.push_back(r.report.scopes.at(Scope::all).f1());
    double m = mean(f1);
    ok &= expect(notes, f1.size() == 5 && m >= 0.85,
                 fmt("clean m2-io mean f1(All) %.4f below 0.85 over %zu seeds", m, f1.size()));
  }
  return ok;
}

bool criterion_determinism(Notes& notes) {
  const LabelSchema& schema = LabelSchema::paris_directories();
  if (!g_artifacts.ready) {
    notes.push_back("experiment artifacts unavailable; cannot compare reruns");
    return false;
  }
  ExperimentCell cell;
  cell.dataset = "clean";
  cell.strategy = Strategy::m2;
  cell.format = TagFormat::io;
  cell.seed = 0;

  fs::path rerun_dir = fs::temp_directory_path() / "nestag-acceptance-rerun";
  fs::remove_all(rerun_dir);
  CellResult r = run_cell(cell, g_artifacts.clean, schema, g_artifacts.train, g_artifacts.split,
                          rerun_dir.string());
  bool ok = expect(notes, r.ok, "rerun cell failed: " + r.error);
  if (!ok) return false;

  for (const char* suffix : {".model", ".scores.csv", ".confusion.csv"}) {
    fs::path first = g_artifacts.out_dir / "cells" / (cell.name() + suffix);
    fs::path second = rerun_dir / "cells" / (cell.name() + suffix);
    std::string a = read_bytes(first), b = read_bytes(second);
    ok &= expect(notes, !a.empty() && a == b,
                 fmt("%s differs between runs (%zu vs %zu bytes)", suffix, a.size(), b.size()));
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(Notes&)> run;
  };
  std::vector<Criterion> criteria = {
      {1, "tag codec fidelity", criterion_codec},
      {2, "round-trip laws", criterion_roundtrip},
      {3, "hierarchical loss correctness", criterion_hxe},
      {4, "metric parity", criterion_metrics},
      {5, "alignment and projection", criterion_projection},
      {6, "end-to-end direction of effect", criterion_experiment},
      {7, "determinism", criterion_determinism},
  };

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0, ran = 0;
  for (auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    Notes notes;
    bool ok = false;
    auto t0 = std::chrono::steady_clock::now();
    try {
      ok = c.run(notes);
    } catch (const std::exception& ex) {
      notes.push_back(std::string("unexpected exception: ") + ex.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d (%s): %s (%.1fs)\n", c.id, c.name, ok ? "PASS" : "FAIL", secs);
    for (const auto& n : notes) std::printf("  %s\n", n.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }

  if (g_artifacts.ready && failed == 0) {
    std::error_code ec;
    fs::remove_all(g_artifacts.out_dir, ec);
    fs::remove_all(fs::temp_directory_path() / "nestag-acceptance-rerun", ec);
  }
  std::printf("acceptance: %d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
