#include "nestag/experiment.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nestag {

namespace {

std::string fmt6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

// keep error text CSV-safe without quoting rules
std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') c = ';';
  return out;
}

double scope_f1(const EvalReport& report, Scope s) {
  auto it = report.scopes.find(s);
  return it == report.scopes.end() ? 0.0 : it->second.f1();
}

struct GroupKey {
  std::string dataset;
  Strategy strategy;
  TagFormat format;
  bool operator<(const GroupKey& o) const {
    if (dataset != o.dataset) return dataset < o.dataset;
    if (strategy != o.strategy) return strategy < o.strategy;
    return format < o.format;
  }
  bool operator==(const GroupKey& o) const {
    return dataset == o.dataset && strategy == o.strategy && format == o.format;
  }
};

// groups in first-appearance order, which is plan order
std::vector<std::pair<GroupKey, std::vector<const CellResult*>>> group_results(
    const std::vector<CellResult>& results) {
  std::vector<std::pair<GroupKey, std::vector<const CellResult*>>> groups;
  for (const auto& r : results) {
    GroupKey key{r.cell.dataset, r.cell.strategy, r.cell.format};
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&r);
  }
  return groups;
}

}  // namespace

std::string ExperimentCell::name() const {
  return dataset + "_" + to_string(strategy) + "_" + to_string(format) + "_s" +
         std::to_string(seed);
}

CellResult run_cell(const ExperimentCell& cell, const Corpus& corpus, const LabelSchema& schema,
                    const TrainConfig& base, SplitRatios split, const std::string& out_dir) {
  CellResult result;
  result.cell = cell;
  try {
    TrainConfig cfg = base;
    cfg.seed = cell.seed;

    auto parts = split_corpus(corpus, split, cell.seed);
    TrainResult trained = train(cell.strategy, cell.format, parts[0], parts[1], schema, cfg);
    result.heads = trained.heads;

    Corpus preds = predict_corpus(trained.model, parts[2]);
    result.report = full_report(parts[2].entries, preds.entries, cell.format, schema);

    std::filesystem::path dir = std::filesystem::path(out_dir) / "cells";
    std::filesystem::create_directories(dir);
    std::string stem = (dir / cell.name()).string();
    trained.model.save(stem + ".model");
    {
      std::ofstream out(stem + ".scores.csv");
      if (!out) throw std::invalid_argument("cannot write " + stem + ".scores.csv");
      write_report_csv(result.report, out);
    }
    {
      std::ofstream out(stem + ".confusion.csv");
      if (!out) throw std::invalid_argument("cannot write " + stem + ".confusion.csv");
      write_confusion_csv(result.report.confusion, out);
    }
    result.ok = true;
  } catch (const std::exception& ex) {
    result.ok = false;
    result.error = ex.what();
  }
  return result;
}

std::vector<CellResult> run_experiment(const ExperimentPlan& plan, const LabelSchema& schema) {
  if (plan.datasets.empty()) throw std::invalid_argument("experiment needs at least one dataset");
  if (plan.strategies.empty() || plan.formats.empty() || plan.seeds.empty())
    throw std::invalid_argument("experiment needs at least one strategy, format and seed");

  struct Job {
    ExperimentCell cell;
    const Corpus* corpus;
  };
  std::vector<Job> jobs;
  for (const auto& [name, corpus] : plan.datasets)
    for (Strategy strategy : plan.strategies)
      for (TagFormat format : plan.formats)
        for (uint64_t seed : plan.seeds)
          jobs.push_back({{name, strategy, format, seed}, &corpus});

  std::filesystem::create_directories(std::filesystem::path(plan.out_dir) / "cells");

  std::vector<CellResult> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      results[i] =
          run_cell(jobs[i].cell, *jobs[i].corpus, schema, plan.train, plan.split, plan.out_dir);
    }
  };
  int n_threads = std::max(1, plan.jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  auto write_file = [&](const char* name, auto&& writer) {
    std::filesystem::path p = std::filesystem::path(plan.out_dir) / name;
    std::ofstream out(p);
    if (!out) throw std::invalid_argument("cannot write " + p.string());
    writer(out);
  };
  write_file("summary.csv", [&](std::ostream& o) { write_summary_csv(results, o); });
  write_file("mean_f1.csv", [&](std::ostream& o) { write_mean_f1_csv(results, o); });
  write_file("mean_per_type.csv",
             [&](std::ostream& o) { write_mean_per_type_csv(results, o); });
  return results;
}

void write_summary_csv(const std::vector<CellResult>& results, std::ostream& out) {
  out << "dataset,strategy,format,seed,status,all,l1,l2,l1l2,pl1pl2,flat,violations,heads\n";
  for (const auto& r : results) {
    out << r.cell.dataset << ',' << to_string(r.cell.strategy) << ','
        << to_string(r.cell.format) << ',' << r.cell.seed << ',';
    if (!r.ok) {
      out << "failed: " << sanitize(r.error) << ",,,,,,,,\n";
      continue;
    }
    out << "ok";
    for (Scope s : all_scopes()) out << ',' << fmt6(scope_f1(r.report, s));
    out << ',' << r.report.violations << ',';
    for (size_t i = 0; i < r.heads.size(); ++i) {
      if (i) out << ';';
      out << r.heads[i].name << '=' << fmt6(r.heads[i].best_dev_f1) << '@'
          << r.heads[i].best_step;
    }
    out << '\n';
  }
}

void write_mean_f1_csv(const std::vector<CellResult>& results, std::ostream& out) {
  out << "dataset,strategy,format,runs,failed,all,l1,l2,l1l2,pl1pl2,flat,violations\n";
  for (const auto& [key, members] : group_results(results)) {
    int ok = 0, failed = 0;
    std::map<Scope, double> sums;
    long violations = 0;
    for (const CellResult* r : members) {
      if (!r->ok) {
        ++failed;
        continue;
      }
      ++ok;
      for (Scope s : all_scopes()) sums[s] += scope_f1(r->report, s);
      violations += r->report.violations;
    }
    out << key.dataset << ',' << to_string(key.strategy) << ',' << to_string(key.format) << ','
        << ok << ',' << failed;
    for (Scope s : all_scopes()) out << ',' << (ok ? fmt6(sums[s] / ok) : std::string());
    out << ',' << violations << '\n';
  }
}

void write_mean_per_type_csv(const std::vector<CellResult>& results, std::ostream& out) {
  out << "dataset,strategy,format,type,runs,precision,recall,f1\n";
  for (const auto& [key, members] : group_results(results)) {
    std::set<std::string> types;
    for (const CellResult* r : members)
      if (r->ok)
        for (const auto& [type, prf] : r->report.per_type) types.insert(type);
    for (const auto& type : types) {
      int runs = 0;
      double p = 0, rc = 0, f = 0;
      for (const CellResult* r : members) {
        if (!r->ok) continue;
        auto it = r->report.per_type.find(type);
        if (it == r->report.per_type.end()) continue;
        ++runs;
        p += it->second.precision();
        rc += it->second.recall();
        f += it->second.f1();
      }
      if (!runs) continue;
      out << key.dataset << ',' << to_string(key.strategy) << ',' << to_string(key.format) << ','
          << type << ',' << runs << ',' << fmt6(p / runs) << ',' << fmt6(rc / runs) << ','
          << fmt6(f / runs) << '\n';
    }
  }
}

std::string experiment_table(const std::vector<CellResult>& results) {
  auto groups = group_results(results);
  std::vector<std::string> datasets;
  for (const auto& [key, members] : groups)
    if (std::find(datasets.begin(), datasets.end(), key.dataset) == datasets.end())
      datasets.push_back(key.dataset);

  std::ostringstream out;
  for (const auto& dataset : datasets) {
    out << "== " << dataset << " ==\n";
    out << "strategy  format  runs  ";
    for (Scope s : all_scopes()) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%-10s", to_string(s));
      out << buf;
    }
    out << "viol\n";
    for (const auto& [key, members] : groups) {
      if (key.dataset != dataset) continue;
      int ok = 0, failed = 0;
      std::map<Scope, double> sums;
      long violations = 0;
      for (const CellResult* r : members) {
        if (!r->ok) {
          ++failed;
          continue;
        }
        ++ok;
        for (Scope s : all_scopes()) sums[s] += scope_f1(r->report, s);
        violations += r->report.violations;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%-10s%-8s%-6d", to_string(key.strategy),
                    to_string(key.format), ok);
      out << buf;
      for (Scope s : all_scopes()) {
        if (ok)
          std::snprintf(buf, sizeof(buf), "%-10.4f", sums[s] / ok);
        else
          std::snprintf(buf, sizeof(buf), "%-10s", "-");
        out << buf;
      }
      out << violations;
      if (failed) out << "  (" << failed << " failed)";
      out << '\n';
    }
  }
  return out.str();
}

long total_violations(const std::vector<CellResult>& results) {
  long n = 0;
  for (const auto& r : results)
    if (r.ok) n += r.report.violations;
  return n;
}

}  // namespace nestag
