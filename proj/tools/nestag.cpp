// Command-line front end. Subcommands cover the full workflow: synthesize a
// corpus, corrupt and re-project it, convert formats, train and evaluate
// taggers, and run seed-averaged experiment matrices.
//
// Exit codes: 0 success, 1 bad input, 2 broken internal invariant.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nestag/align.h"
#include "nestag/corpus.h"
#include "nestag/experiment.h"
#include "nestag/metrics.h"
#include "nestag/schema.h"
#include "nestag/tagger.h"

using namespace nestag;

namespace {

LabelSchema load_schema(const std::string& path) {
  return path.empty() ? LabelSchema::paris_directories() : LabelSchema::load_file(path);
}

Lexicons load_lexicons(const std::string& dir) {
  return dir.empty() ? Lexicons::builtin() : Lexicons::load_dir(dir);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    size_t b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw std::invalid_argument("empty list: '" + s + "'");
  return out;
}

void apply_env_seed(TrainConfig& cfg) {
  const char* s = std::getenv("NESTED_TAGGER_SEED");
  if (!s || !*s) return;
  try {
    cfg.seed = std::stoull(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("NESTED_TAGGER_SEED must be an unsigned integer, got '" +
                                std::string(s) + "'");
  }
}

TrainConfig load_train_config(const std::string& path) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::load_file(path);
  apply_env_seed(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// report: re-render the seed-averaged table from an experiment's summary.csv

struct SummaryRow {
  std::string dataset, strategy, format, status;
  double f1[6] = {0, 0, 0, 0, 0, 0};
  long violations = 0;
};

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<SummaryRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 12)
      throw std::invalid_argument(path + ": malformed summary row: " + line);
    SummaryRow row;
    row.dataset = cells[0];
    row.strategy = cells[1];
    row.format = cells[2];
    row.status = cells[4];
    if (row.status == "ok") {
      for (int i = 0; i < 6; ++i) row.f1[i] = std::stod(cells[5 + i]);
      row.violations = std::stol(cells[11]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_rows_table(const std::vector<SummaryRow>& rows) {
  struct Group {
    std::string dataset, strategy, format;
    int ok = 0, failed = 0;
    double sums[6] = {0, 0, 0, 0, 0, 0};
    long violations = 0;
  };
  std::vector<Group> groups;
  for (const auto& row : rows) {
    Group* g = nullptr;
    for (auto& cand : groups)
      if (cand.dataset == row.dataset && cand.strategy == row.strategy &&
          cand.format == row.format)
        g = &cand;
    if (!g) {
      groups.push_back({row.dataset, row.strategy, row.format});
      g = &groups.back();
    }
    if (row.status != "ok") {
      ++g->failed;
      continue;
    }
    ++g->ok;
    for (int i = 0; i < 6; ++i) g->sums[i] += row.f1[i];
    g->violations += row.violations;
  }

  std::ostringstream out;
  std::string dataset;
  for (const auto& g : groups) {
    if (g.dataset != dataset) {
      dataset = g.dataset;
      out << "== " << dataset << " ==\n";
      out << "strategy  format  runs  ";
      for (Scope s : all_scopes()) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%-10s", to_string(s));
        out << buf;
      }
      out << "viol\n";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-10s%-8s%-6d", g.strategy.c_str(), g.format.c_str(), g.ok);
    out << buf;
    for (int i = 0; i < 6; ++i) {
      if (g.ok)
        std::snprintf(buf, sizeof(buf), "%-10.4f", g.sums[i] / g.ok);
      else
        std::snprintf(buf, sizeof(buf), "%-10s", "-");
      out << buf;
    }
    out << g.violations;
    if (g.failed) out << "  (" << g.failed << " failed)";
    out << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested named-entity sequence labeling toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ----- convert -----
  struct ConvertOpts {
    std::string in, out, from = "iob2", to = "iob2", mode = "joint", schema;
  };
  auto cv = std::make_shared<ConvertOpts>();
  {
    auto* sub = app.add_subcommand("convert", "Rewrite a corpus in another tag format");
    sub->add_option("--in", cv->in, "input corpus (tsv)")->required();
    sub->add_option("--out", cv->out, "output corpus (tsv)")->required();
    sub->add_option("--from-format", cv->from, "input tag format: io or iob2");
    sub->add_option("--to-format", cv->to, "output tag format: io or iob2");
    sub->add_option("--mode", cv->mode, "stream checked for merge loss: l1, l2 or joint");
    sub->add_option("--schema", cv->schema, "schema file (default: built-in directory schema)");
    sub->callback([cv] {
      LabelSchema schema = load_schema(cv->schema);
      TagFormat from = tag_format_from_string(cv->from);
      TagFormat to = tag_format_from_string(cv->to);
      TagMode mode = tag_mode_from_string(cv->mode);
      Corpus corpus = read_tsv_file(cv->in, schema, from);

      if (to == TagFormat::io) {
        // io cannot separate adjacent same-type entities; count what a
        // round trip through the target format would merge away
        long lost = 0, affected = 0;
        for (const auto& entry : corpus.entries) {
          TagSequence seq = mode == TagMode::flat ? encode(entry, to, mode, schema)
                                                  : encode_tags(entry, to, mode);
          AnnotatedEntry back = decode_entry(entry.source_id, entry.text, entry.tokens, seq);
          long before = 0;
          for (const auto& e : entry.entities)
            if (mode == TagMode::joint || (mode == TagMode::l1 && e.level == 1) ||
                (mode == TagMode::l2 && e.level == 2) || mode == TagMode::flat)
              ++before;
          long after = static_cast<long>(back.entities.size());
          if (after < before) {
            lost += before - after;
            ++affected;
          }
        }
        if (lost > 0)
          std::cerr << "io conversion merged " << lost << " adjacent entities away in "
                    << affected << " entries\n";
      }
      write_tsv_file(corpus, cv->out, to);
    });
  }

  // ----- project -----
  struct ProjectOpts {
    std::string gold, noisy_text, out, report, format = "iob2", schema;
  };
  auto pj = std::make_shared<ProjectOpts>();
  {
    auto* sub = app.add_subcommand("project",
                                   "Carry gold annotations over to noisy renderings of the text");
    sub->add_option("--gold", pj->gold, "gold corpus (tsv)")->required();
    sub->add_option("--noisy-text", pj->noisy_text, "noisy texts (jsonl: source_id, text)")
        ->required();
    sub->add_option("--out", pj->out, "projected corpus (tsv)")->required();
    sub->add_option("--report", pj->report, "write projection counts as JSON here");
    sub->add_option("--format", pj->format, "tsv tag format: io or iob2");
    sub->add_option("--schema", pj->schema, "schema file");
    sub->callback([pj] {
      LabelSchema schema = load_schema(pj->schema);
      TagFormat format = tag_format_from_string(pj->format);
      Corpus gold = read_tsv_file(pj->gold, schema, format);
      auto texts = read_texts_jsonl_file(pj->noisy_text);

      ProjectionStats stats;
      Corpus noisy = build_noisy_corpus(gold, texts, stats);
      write_tsv_file(noisy, pj->out, format);

      if (!pj->report.empty()) {
        nlohmann::ordered_json j;
        j["entries_in"] = stats.entries_in;
        j["entries_out"] = stats.entries_out;
        j["entries_dropped"] = stats.entries_dropped;
        j["entities_total"] = stats.entities_total;
        j["entities_projected"] = stats.entities_projected;
        j["entities_dropped"] = stats.entities_dropped;
        std::ofstream out(pj->report);
        if (!out) throw std::invalid_argument("cannot write " + pj->report);
        out << j.dump(2) << '\n';
      }
      std::cout << "projected " << stats.entities_projected << "/" << stats.entities_total
                << " entities, kept " << stats.entries_out << "/" << stats.entries_in
                << " entries\n";
    });
  }

  // ----- synth -----
  struct SynthOpts {
    int n = 1000;
    uint64_t seed = 0;
    std::string out, format = "iob2", schema, lexicons, noisy_out;
    NoiseConfig noise;
  };
  auto sy = std::make_shared<SynthOpts>();
  {
    auto* sub = app.add_subcommand("synth", "Generate a synthetic directory-entry corpus");
    sub->add_option("--n", sy->n, "number of entries")->required();
    sub->add_option("--seed", sy->seed, "generator seed");
    sub->add_option("--out", sy->out, "output corpus (tsv)")->required();
    sub->add_option("--format", sy->format, "tsv tag format: io or iob2");
    sub->add_option("--schema", sy->schema, "schema file");
    sub->add_option("--lexicons", sy->lexicons,
                    "directory with streets/professions/surnames/firstnames .txt files");
    sub->add_option("--noisy-out", sy->noisy_out, "also write noisy texts (jsonl) here");
    sub->add_option("--noise-rate", sy->noise.rate, "per-character edit probability");
    sub->add_option("--digit-bias", sy->noise.digit_bias, "edit rate multiplier on digits");
    sub->add_option("--noise-seed", sy->noise.seed, "noise seed");
    sub->callback([sy] {
      LabelSchema schema = load_schema(sy->schema);
      Lexicons lex = load_lexicons(sy->lexicons);
      TagFormat format = tag_format_from_string(sy->format);
      Corpus corpus = synth_generate(sy->n, sy->seed, schema, lex);
      write_tsv_file(corpus, sy->out, format);
      std::cout << "wrote " << corpus.entries.size() << " entries to " << sy->out << '\n';
      if (!sy->noisy_out.empty()) {
        auto texts = make_noisy_texts(corpus, sy->noise);
        std::ofstream out(sy->noisy_out);
        if (!out) throw std::invalid_argument("cannot write " + sy->noisy_out);
        write_texts_jsonl(texts, out);
        std::cout << "wrote noisy texts to " << sy->noisy_out << '\n';
      }
    });
  }

  // ----- train -----
  struct TrainOpts {
    std::string train_path, dev_path, strategy = "m2", format = "io", config, schema, out;
    std::string corpus_format = "iob2";
  };
  auto tr = std::make_shared<TrainOpts>();
  {
    auto* sub = app.add_subcommand("train", "Train a tagger and save the model");
    sub->add_option("--train", tr->train_path, "training corpus (tsv)")->required();
    sub->add_option("--dev", tr->dev_path, "development corpus for early stopping (tsv)");
    sub->add_option("--strategy", tr->strategy, "m1, m2, m3 or flat");
    sub->add_option("--format", tr->format, "tag format the model works in: io or iob2");
    sub->add_option("--corpus-format", tr->corpus_format, "tsv tag format of the input files");
    sub->add_option("--config", tr->config, "training config file (key = value lines)");
    sub->add_option("--schema", tr->schema, "schema file");
    sub->add_option("--out", tr->out, "model output path")->required();
    sub->callback([tr] {
      LabelSchema schema = load_schema(tr->schema);
      TagFormat corpus_format = tag_format_from_string(tr->corpus_format);
      TrainConfig cfg = load_train_config(tr->config);
      Corpus train_set = read_tsv_file(tr->train_path, schema, corpus_format);
      Corpus dev_set;
      if (!tr->dev_path.empty()) dev_set = read_tsv_file(tr->dev_path, schema, corpus_format);

      TrainResult result = train(strategy_from_string(tr->strategy),
                                 tag_format_from_string(tr->format), train_set, dev_set, schema,
                                 cfg);
      result.model.save(tr->out);
      for (const auto& h : result.heads) {
        std::cout << "head " << h.name << ": " << h.steps_run << " steps";
        if (h.best_step > 0)
          std::cout << ", best dev F1 " << h.best_dev_f1 << " at step " << h.best_step;
        std::cout << '\n';
      }
      std::cout << "saved model to " << tr->out << '\n';
    });
  }

  // ----- eval -----
  struct EvalOpts {
    std::string model, in, schema, report, confusion;
    std::string corpus_format = "iob2";
    bool fail_on_violations = false;
  };
  auto ev = std::make_shared<EvalOpts>();
  {
    auto* sub = app.add_subcommand("eval", "Score a model against a gold corpus");
    sub->add_option("--model", ev->model, "model file")->required();
    sub->add_option("--in", ev->in, "gold corpus (tsv)")->required();
    sub->add_option("--corpus-format", ev->corpus_format, "tsv tag format of the input");
    sub->add_option("--schema", ev->schema, "schema file");
    sub->add_option("--report", ev->report, "write scope and per-type scores as CSV here");
    sub->add_option("--confusion", ev->confusion, "write the token confusion matrix as CSV here");
    sub->add_flag("--fail-on-violations", ev->fail_on_violations,
                  "exit nonzero when predictions contain hierarchy violations");
    sub->callback([ev, &exit_code] {
      LabelSchema schema = load_schema(ev->schema);
      Model model = Model::load(ev->model, schema);
      Corpus gold = read_tsv_file(ev->in, schema, tag_format_from_string(ev->corpus_format));
      Corpus preds = predict_corpus(model, gold);
      EvalReport report = full_report(gold.entries, preds.entries, model.format, schema);

      std::cout << report_table(report);
      if (!ev->report.empty()) {
        std::ofstream out(ev->report);
        if (!out) throw std::invalid_argument("cannot write " + ev->report);
        write_report_csv(report, out);
      }
      if (!ev->confusion.empty()) {
        std::ofstream out(ev->confusion);
        if (!out) throw std::invalid_argument("cannot write " + ev->confusion);
        write_confusion_csv(report.confusion, out);
      }
      if (report.violations > 0 && ev->fail_on_violations) {
        std::cerr << report.violations << " hierarchy violations\n";
        exit_code = 1;
      }
    });
  }

  // ----- experiment -----
  struct ExperimentOpts {
    std::string corpus, noisy_corpus, strategies = "m1,m2,m3,flat", formats = "io,iob2";
    std::string seeds = "0,1,2,3,4", config, schema, out_dir;
    std::string corpus_format = "iob2";
    int jobs = 1;
    bool fail_on_violations = false;
  };
  auto ex = std::make_shared<ExperimentOpts>();
  {
    auto* sub = app.add_subcommand(
        "experiment", "Train and score a strategy x format x seed matrix, with aggregates");
    sub->add_option("--corpus", ex->corpus, "clean corpus (tsv)")->required();
    sub->add_option("--noisy-corpus", ex->noisy_corpus, "noisy corpus (tsv), adds a dataset");
    sub->add_option("--strategies", ex->strategies, "comma list from m1,m2,m3,flat");
    sub->add_option("--formats", ex->formats, "comma list from io,iob2");
    sub->add_option("--seeds", ex->seeds, "comma list of run seeds");
    sub->add_option("--config", ex->config, "training config file");
    sub->add_option("--schema", ex->schema, "schema file");
    sub->add_option("--corpus-format", ex->corpus_format, "tsv tag format of the input files");
    sub->add_option("--out-dir", ex->out_dir, "output directory")->required();
    sub->add_option("--jobs", ex->jobs, "cells trained concurrently");
    sub->add_flag("--fail-on-violations", ex->fail_on_violations,
                  "exit nonzero when any cell's predictions contain hierarchy violations");
    sub->callback([ex, &exit_code] {
      LabelSchema schema = load_schema(ex->schema);
      TagFormat corpus_format = tag_format_from_string(ex->corpus_format);

      ExperimentPlan plan;
      plan.datasets.emplace_back("clean", read_tsv_file(ex->corpus, schema, corpus_format));
      if (!ex->noisy_corpus.empty())
        plan.datasets.emplace_back("noisy", read_tsv_file(ex->noisy_corpus, schema,
                                                          corpus_format));
      for (const auto& s : split_csv(ex->strategies))
        plan.strategies.push_back(strategy_from_string(s));
      for (const auto& f : split_csv(ex->formats))
        plan.formats.push_back(tag_format_from_string(f));
      for (const auto& s : split_csv(ex->seeds)) plan.seeds.push_back(std::stoull(s));
      plan.train = load_train_config(ex->config);
      plan.out_dir = ex->out_dir;
      plan.jobs = ex->jobs;

      auto results = run_experiment(plan, schema);
      std::cout << experiment_table(results);

      long failed = 0;
      for (const auto& r : results)
        if (!r.ok) {
          ++failed;
          std::cerr << "cell " << r.cell.name() << " failed: " << r.error << '\n';
        }
      if (failed) exit_code = 1;
      if (ex->fail_on_violations && total_violations(results) > 0) {
        std::cerr << total_violations(results) << " hierarchy violations across the matrix\n";
        exit_code = 1;
      }
    });
  }

  // ----- report -----
  struct ReportOpts {
    std::string dir;
  };
  auto rp = std::make_shared<ReportOpts>();
  {
    auto* sub = app.add_subcommand("report",
                                   "Re-render the seed-averaged table of an experiment directory");
    sub->add_option("--dir", rp->dir, "experiment output directory")->required();
    sub->callback([rp] {
      std::string path = (std::filesystem::path(rp->dir) / "summary.csv").string();
      std::cout << summary_rows_table(read_summary_csv(path));
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
