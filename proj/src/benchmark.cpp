#include "specid/benchmark.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "specid/evaluation.hpp"
#include "specid/rng.hpp"

namespace specid {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct FoldOutcome {
  std::vector<PredictionRecord> records;
  double chosen_c = 0.0;
  bool has_c = false;
  bool nonconverged = false;
  double ms = 0.0;
};

// Streams one machine-readable line per completed fold. Line order follows
// completion order, so it is scheduling-dependent under jobs > 1; the report
// files are the deterministic artifacts.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open log file: " + path.string());
  }

  void fold_line(const std::string& method, std::size_t fold,
                 const std::vector<std::string>& strains, const FoldOutcome& o) {
    ordered_json line;
    line["event"] = "fold";
    line["method"] = method;
    line["fold"] = fold;
    line["strains"] = strains;
    line["n_test"] = o.records.size();
    int correct = 0;
    for (const auto& r : o.records) correct += r.predicted == r.truth ? 1 : 0;
    line["n_correct"] = correct;
    if (o.has_c)
      line["chosen_c"] = o.chosen_c;
    else
      line["chosen_c"] = nullptr;
    line["ms"] = o.ms;
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << line.dump() << '\n';
    out_.flush();
  }

  void method_line(const std::string& method, double seconds) {
    ordered_json line;
    line["event"] = "method_done";
    line["method"] = method;
    line["seconds"] = seconds;
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << line.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

FoldOutcome run_fold(Method method, const MethodContext& ctx, const FoldPlan::Fold& fold,
                     int fold_index, const std::vector<double>& grid, int inner_folds,
                     std::uint64_t global_seed, std::uint64_t method_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const LabeledDataset& data = *ctx.data;
  const std::uint64_t fold_seed = mix_seed(method_seed, static_cast<std::uint64_t>(fold_index));
  // the inner partition depends on (global seed, outer fold) only, so every
  // method sees the same inner folds
  const std::uint64_t inner_seed =
      mix_seed(mix_seed(global_seed, static_cast<std::uint64_t>(fold_index)), 1);

  FoldOutcome out;
  double c = 0.0;
  if (method_uses_c(method)) {
    std::uint64_t call = 0;
    const TrainPredictFn fn = [&](std::span<const int> train_rows, std::span<const int> test_rows,
                                  double cc) {
      const std::uint64_t train_seed = mix_seed(fold_seed, 1000 + call++);
      const auto model = train_model(method, ctx, train_rows, cc, train_seed);
      std::vector<int> pred;
      pred.reserve(test_rows.size());
      for (int r : test_rows) pred.push_back(model->predict_one(data.spectra[static_cast<std::size_t>(r)]));
      return pred;
    };
    c = grid_search_c(data, fold.train_rows, grid, inner_folds, inner_seed, fn);
    out.chosen_c = c;
    out.has_c = true;
  }

  const auto model = train_model(method, ctx, fold.train_rows, c, mix_seed(fold_seed, 2));
  out.nonconverged = !model->converged();
  for (int r : fold.test_rows) {
    PredictionRecord rec;
    rec.spectrum = r;
    rec.strain = data.strain_ids[static_cast<std::size_t>(r)];
    rec.truth = data.labels[static_cast<std::size_t>(r)];
    rec.predicted = model->predict_one(data.spectra[static_cast<std::size_t>(r)]);
    rec.fold = fold_index;
    rec.chosen_c = c;
    rec.has_c = out.has_c;
    out.records.push_back(std::move(rec));
  }
  out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Runs one fold per task across cfg.jobs threads; outcomes land in fold
// order, so downstream aggregation is independent of scheduling.
std::vector<FoldOutcome> run_method(Method method, const MethodContext& ctx, const FoldPlan& plan,
                                    const std::vector<double>& grid, const BenchmarkConfig& cfg,
                                    std::uint64_t method_seed, RunLog& log) {
  std::vector<FoldOutcome> outcomes(plan.folds.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    while (true) {
      const std::size_t f = next.fetch_add(1);
      if (f >= plan.folds.size()) return;
      try {
        outcomes[f] = run_fold(method, ctx, plan.folds[f], static_cast<int>(f), grid,
                               cfg.inner_folds, cfg.seed, method_seed);
        log.fold_line(method_name(method), f, plan.folds[f].test_strains, outcomes[f]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return outcomes;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path.string());
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.epsilon <= 0.0) throw std::invalid_argument("run_benchmark: epsilon must be positive");
  if (cfg.methods.empty()) throw std::invalid_argument("run_benchmark: no methods selected");
  if (cfg.inner_folds < 2) throw std::invalid_argument("run_benchmark: need at least two inner folds");
  if (cfg.grid_exponents.empty()) throw std::invalid_argument("run_benchmark: empty C grid");
  LabeledDataset data = load_dataset(cfg.dataset_path);
  normalize_dataset(data);
  const TaxonomyTree tree = load_tree(cfg.tree_path);
  if (!(tree.species() == data.species))
    throw std::runtime_error("tree leaves do not match the dataset species");

  FoldPlan plan = make_loso_folds(data);
  std::vector<int> exponents = cfg.grid_exponents;
  if (cfg.smoke) {
    if (plan.folds.size() > 20) plan.folds.resize(20);
    exponents = {-2, 0, 2};
  }
  std::sort(exponents.begin(), exponents.end());
  std::vector<double> grid;
  grid.reserve(exponents.size());
  for (int e : exponents) grid.push_back(std::pow(10.0, e));

  MethodContext ctx;
  ctx.data = &data;
  ctx.tree = &tree;
  ctx.binary.tol = cfg.svm_tol;
  ctx.binary.max_iter = cfg.svm_max_iter;
  ctx.structured.epsilon = cfg.epsilon;
  ctx.structured.max_cuts = cfg.struct_max_cuts;
  ctx.rf.n_trees = cfg.rf_trees;

  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir / "predictions");
  RunLog log(out_dir / "run.log");

  BenchmarkResult result;
  std::vector<PredictionRecord> all_errors;

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t method_seed =
        mix_seed(cfg.seed, 0x100 + static_cast<std::uint64_t>(std::find(all_methods().begin(), all_methods().end(), method) -
                                                              all_methods().begin()));
    const auto outcomes = run_method(method, ctx, plan, grid, cfg, method_seed, log);

    MethodResult mr;
    mr.method = method;
    for (const auto& o : outcomes) {
      for (const auto& r : o.records) mr.records.push_back(r);
      mr.n_nonconverged += o.nonconverged ? 1 : 0;
    }
    mr.accuracy = nested_accuracy(mr.records, data.species.size());
    mr.severity = severity_breakdown(mr.records, tree);
    for (const auto& r : mr.records)
      if (r.predicted != r.truth) all_errors.push_back(r);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.method_line(method_name(method), seconds);
    std::fprintf(stderr, "specid: %s done in %.1fs, accuracy %.2f%%\n",
                 method_name(method).c_str(), seconds, 100.0 * mr.accuracy.overall);
    result.methods.push_back(std::move(mr));
  }

  // ---- report assembly -------------------------------------------------
  ordered_json report;
  report["format"] = 1;
  {
    ordered_json jc;
    jc["dataset"] = cfg.dataset_path;
    jc["tree"] = cfg.tree_path;
    std::vector<std::string> names;
    for (Method m : cfg.methods) names.push_back(method_name(m));
    jc["methods"] = names;
    jc["grid_exponents"] = exponents;
    jc["epsilon"] = cfg.epsilon;
    jc["seed"] = cfg.seed;
    jc["smoke"] = cfg.smoke;
    jc["inner_folds"] = cfg.inner_folds;
    jc["svm_tol"] = cfg.svm_tol;
    jc["svm_max_iter"] = cfg.svm_max_iter;
    jc["struct_max_cuts"] = cfg.struct_max_cuts;
    jc["rf_trees"] = cfg.rf_trees;
    report["config"] = std::move(jc);
  }
  {
    ordered_json jd;
    jd["n_spectra"] = data.size();
    jd["p"] = data.p;
    const auto summary = dataset_summary(data);
    int n_strains = 0;
    ordered_json species = ordered_json::array();
    for (const auto& s : summary) {
      n_strains += s.strains;
      ordered_json row;
      row["code"] = s.code;
      row["strains"] = s.strains;
      row["spectra"] = s.spectra;
      species.push_back(std::move(row));
    }
    jd["n_strains"] = n_strains;
    jd["n_species"] = data.species.size();
    jd["species"] = std::move(species);
    report["dataset"] = std::move(jd);
  }
  report["tree_hash"] = tree.hash();
  report["n_outer_folds"] = plan.folds.size();

  ordered_json jmethods;
  std::string table_csv = "method,accuracy,correct,within_genus,within_gram,distinct_gram\n";
  for (const auto& mr : result.methods) {
    ordered_json jm;
    jm["accuracy"] = mr.accuracy.overall;
    jm["accuracy_percent"] = 100.0 * mr.accuracy.overall;
    ordered_json counts;
    counts["correct"] = mr.severity.correct;
    counts["within_genus"] = mr.severity.within_genus;
    counts["within_gram"] = mr.severity.within_gram;
    counts["distinct_gram"] = mr.severity.distinct_gram;
    jm["counts"] = std::move(counts);
    ordered_json per_species;
    for (const auto& [sid, acc] : mr.accuracy.per_species) per_species[data.species.code_of(sid)] = acc;
    jm["per_species"] = std::move(per_species);
    ordered_json per_strain = ordered_json::array();
    for (const auto& [strain, acc] : mr.accuracy.per_strain)
      per_strain.push_back(ordered_json::array({strain, acc}));
    jm["per_strain"] = std::move(per_strain);
    if (method_uses_c(mr.method)) {
      ordered_json jcc;
      std::map<double, int> hist;
      std::map<int, bool> seen_fold;
      for (const auto& r : mr.records)
        if (!seen_fold[r.fold]) {
          seen_fold[r.fold] = true;
          ++hist[r.chosen_c];
        }
      for (const auto& [c, n] : hist) jcc[format_double(c)] = n;
      jm["chosen_c_folds"] = std::move(jcc);
    }
    jm["n_nonconverged_folds"] = mr.n_nonconverged;
    jmethods[method_name(mr.method)] = std::move(jm);

    table_csv += method_name(mr.method) + "," + format_double(100.0 * mr.accuracy.overall) + "," +
                 std::to_string(mr.severity.correct) + "," + std::to_string(mr.severity.within_genus) +
                 "," + std::to_string(mr.severity.within_gram) + "," +
                 std::to_string(mr.severity.distinct_gram) + "\n";
  }
  report["methods"] = std::move(jmethods);

  ordered_json jks = ordered_json::array();
  for (std::size_t i = 0; i < result.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < result.methods.size(); ++j) {
      std::vector<double> a, b;
      for (const auto& [sid, acc] : result.methods[i].accuracy.per_species) a.push_back(acc);
      for (const auto& [sid, acc] : result.methods[j].accuracy.per_species) b.push_back(acc);
      const KsResult ks = ks_two_sample(a, b);
      ordered_json row;
      row["a"] = method_name(result.methods[i].method);
      row["b"] = method_name(result.methods[j].method);
      row["d"] = ks.d;
      row["p"] = ks.p_value;
      jks.push_back(std::move(row));
    }
  }
  report["ks_species_accuracy"] = std::move(jks);

  const auto confusions = confusion_pairs(all_errors);
  std::string confusions_csv = "true_code,predicted_code,count\n";
  ordered_json jconf = ordered_json::array();
  for (std::size_t i = 0; i < confusions.size(); ++i) {
    const auto& c = confusions[i];
    confusions_csv += data.species.code_of(c.truth) + "," + data.species.code_of(c.predicted) +
                      "," + std::to_string(c.count) + "\n";
    if (i < 25) {
      ordered_json row;
      row["true"] = data.species.code_of(c.truth);
      row["predicted"] = data.species.code_of(c.predicted);
      row["count"] = c.count;
      jconf.push_back(std::move(row));
    }
  }
  report["top_confusions"] = std::move(jconf);

  // ---- files ------------------------------------------------------------
  write_file(out_dir / "report.json", report.dump(2) + "\n");
  write_file(out_dir / "table.csv", table_csv);
  write_file(out_dir / "confusions.csv", confusions_csv);
  for (const auto& mr : result.methods) {
    std::string csv = "spectrum_id,strain_id,fold,true_code,predicted_code,chosen_c\n";
    for (const auto& r : mr.records) {
      csv += data.spectrum_ids[static_cast<std::size_t>(r.spectrum)] + "," + r.strain + "," +
             std::to_string(r.fold) + "," + data.species.code_of(r.truth) + "," +
             data.species.code_of(r.predicted) + ",";
      if (r.has_c) csv += format_double(r.chosen_c);
      csv += "\n";
    }
    write_file(out_dir / "predictions" / (method_name(mr.method) + ".csv"), csv);
  }

  result.report = std::move(report);
  return result;
}

}  // namespace specid
