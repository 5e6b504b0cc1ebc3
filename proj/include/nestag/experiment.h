#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nestag/corpus.h"
#include "nestag/metrics.h"
#include "nestag/tagger.h"

namespace nestag {

/// One point of the run matrix: dataset x strategy x format x seed.
struct ExperimentCell {
  std::string dataset;
  Strategy strategy = Strategy::m2;
  TagFormat format = TagFormat::io;
  uint64_t seed = 0;

  /// File-name stem, e.g. "clean_m2_io_s3".
  std::string name() const;
};

struct CellResult {
  ExperimentCell cell;
  bool ok = false;
  std::string error;  // set when a cell failed; the matrix still completes

  EvalReport report;  // scored on the held-out test split
  std::vector<HeadStats> heads;
};

struct ExperimentPlan {
  std::vector<std::pair<std::string, Corpus>> datasets;  // (name, corpus)
  std::vector<Strategy> strategies;
  std::vector<TagFormat> formats;
  std::vector<uint64_t> seeds;
  TrainConfig train;   // per-cell seed overrides train.seed
  SplitRatios split;   // applied per cell with the cell seed
  std::string out_dir;
  int jobs = 1;
};

/// Trains one cell on its dataset's train/dev splits, writes
/// <out_dir>/cells/<name>.model, .scores.csv and .confusion.csv, and scores
/// the test split. Exceptions are captured into the result, not thrown.
CellResult run_cell(const ExperimentCell& cell, const Corpus& corpus, const LabelSchema& schema,
                    const TrainConfig& base, SplitRatios split, const std::string& out_dir);

/// Runs the whole matrix (concurrently up to plan.jobs), then writes
/// summary.csv, mean_f1.csv and mean_per_type.csv under plan.out_dir.
/// Results come back in plan order regardless of scheduling, so reruns
/// produce byte-identical files.
std::vector<CellResult> run_experiment(const ExperimentPlan& plan, const LabelSchema& schema);

void write_summary_csv(const std::vector<CellResult>& results, std::ostream& out);
void write_mean_f1_csv(const std::vector<CellResult>& results, std::ostream& out);
void write_mean_per_type_csv(const std::vector<CellResult>& results, std::ostream& out);

/// Seed-averaged F1 table for terminals, one block per dataset.
std::string experiment_table(const std::vector<CellResult>& results);

long total_violations(const std::vector<CellResult>& results);

}  // namespace nestag
