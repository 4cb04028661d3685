#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "specid/evaluation.hpp"
#include "specid/methods.hpp"

namespace specid {

struct BenchmarkConfig {
  std::string dataset_path;
  std::string tree_path;
  std::string out_dir = "out";
  std::vector<Method> methods = all_methods();
  std::vector<int> grid_exponents = {-6, -4, -2, 0, 2, 4, 6};  // powers of ten
  double epsilon = 0.1;    // structured cutting-plane precision
  std::uint64_t seed = 1;
  int jobs = 1;
  bool smoke = false;      // first 20 outer folds, 3-point grid
  int inner_folds = 10;
  double svm_tol = 1e-3;
  int svm_max_iter = 2000;
  int struct_max_cuts = 500;
  int rf_trees = 500;
};

struct MethodResult {
  Method method = Method::one_nn;
  NestedAccuracy accuracy;
  SeverityCounts severity;
  std::vector<PredictionRecord> records;
  int n_nonconverged = 0;
};

struct BenchmarkResult {
  nlohmann::ordered_json report;
  std::vector<MethodResult> methods;
};

// Runs the full strain-aware protocol: leave-one-strain-out outer loop,
// inner strain-grouped 10-fold grid search for the SVM-family methods, final
// per-fold training with the chosen C, prediction records, report emission
// (report.json, table.csv, confusions.csv, predictions/<method>.csv,
// run.log). Results are bit-identical across runs and across jobs counts for
// a fixed (config, seed).
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg);

}  // namespace specid
