#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specid/spectra.hpp"
#include "specid/taxonomy.hpp"

namespace specid {

// Strain-grouped cross-validation folds. Test sets partition the strains;
// spectra of one strain never straddle a fold boundary.
struct FoldPlan {
  struct Fold {
    std::vector<std::string> test_strains;
    std::vector<int> train_rows;
    std::vector<int> test_rows;
  };
  std::vector<Fold> folds;
};

// Leave-one-strain-out: one fold per strain, in sorted strain-id order.
FoldPlan make_loso_folds(const LabeledDataset& data);

// Strains of `rows` randomly partitioned into n_folds groups whose sizes
// differ by at most one. Throws when fewer strains than folds.
FoldPlan make_inner_folds(const LabeledDataset& data, std::span<const int> rows, int n_folds,
                          std::uint64_t seed);

struct PredictionRecord {
  int spectrum = -1;  // row index into the dataset
  std::string strain;
  int truth = -1;
  int predicted = -1;
  int fold = -1;
  double chosen_c = 0.0;
  bool has_c = false;
};

struct NestedAccuracy {
  std::vector<std::pair<std::string, double>> per_strain;  // sorted by strain id
  std::vector<std::pair<int, double>> per_species;         // sorted by species id
  double overall = 0.0;
};

// Strain accuracy = correct/total per strain; species accuracy = unweighted
// mean over its strains; overall = unweighted mean over species. When
// expected_species > 0, every species id in [0, expected_species) must
// appear among the records.
NestedAccuracy nested_accuracy(std::span<const PredictionRecord> records,
                               int expected_species = -1);

struct SeverityCounts {
  int correct = 0;
  int within_genus = 0;
  int within_gram = 0;
  int distinct_gram = 0;
  int total() const { return correct + within_genus + within_gram + distinct_gram; }
};

// Buckets every record by severity_category(tree_distance(truth, predicted)).
// Record species ids must agree with the tree's leaf table.
SeverityCounts severity_breakdown(std::span<const PredictionRecord> records,
                                  const TaxonomyTree& tree);

struct ConfusionCount {
  int truth = -1;
  int predicted = -1;
  int count = 0;
};

// Misclassified (truth, predicted) pairs, descending by count, ties in
// ascending (truth, predicted) order.
std::vector<ConfusionCount> confusion_pairs(std::span<const PredictionRecord> records);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test: D = sup |ECDF_a - ECDF_b|, two-sided
// p-value from the asymptotic Kolmogorov distribution at effective size
// n*m/(n+m).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Trains on train_rows, returns predicted labels for test_rows.
using TrainPredictFn =
    std::function<std::vector<int>(std::span<const int> train_rows,
                                   std::span<const int> test_rows, double c)>;

// Inner strain-grouped cross-validation over the C grid; returns the value
// maximizing nested accuracy, ties toward the smallest C. `scores`, when
// given, receives (C, accuracy) pairs in grid order.
double grid_search_c(const LabeledDataset& data, std::span<const int> rows,
                     std::span<const double> c_grid, int n_folds, std::uint64_t seed,
                     const TrainPredictFn& fn,
                     std::vector<std::pair<double, double>>* scores = nullptr);

}  // namespace specid
