#include "specid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "specid/rng.hpp"

namespace specid {

FoldPlan make_loso_folds(const LabeledDataset& data) {
  std::set<std::string> strains(data.strain_ids.begin(), data.strain_ids.end());
  FoldPlan plan;
  plan.folds.reserve(strains.size());
  for (const auto& s : strains) {
    FoldPlan::Fold f;
    f.test_strains.push_back(s);
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
      (data.strain_ids[static_cast<std::size_t>(i)] == s ? f.test_rows : f.train_rows).push_back(i);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

FoldPlan make_inner_folds(const LabeledDataset& data, std::span<const int> rows, int n_folds,
                          std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("make_inner_folds: need at least two folds");
  std::set<std::string> strain_set;
  for (int r : rows) strain_set.insert(data.strain_ids[static_cast<std::size_t>(r)]);
  std::vector<std::string> strains(strain_set.begin(), strain_set.end());
  if (static_cast<int>(strains.size()) < n_folds)
    throw std::invalid_argument("make_inner_folds: fewer strains than folds");

  Rng rng(seed);
  rng.shuffle(strains);

  // contiguous chunks of the shuffled order; sizes differ by at most one
  const int s = static_cast<int>(strains.size());
  const int base = s / n_folds;
  const int rem = s % n_folds;
  std::map<std::string, int> fold_of;
  int pos = 0;
  for (int f = 0; f < n_folds; ++f) {
    const int len = base + (f < rem ? 1 : 0);
    for (int i = 0; i < len; ++i) fold_of[strains[static_cast<std::size_t>(pos++)]] = f;
  }

  FoldPlan plan;
  plan.folds.resize(static_cast<std::size_t>(n_folds));
  for (auto& [strain, f] : fold_of)
    plan.folds[static_cast<std::size_t>(f)].test_strains.push_back(strain);
  for (int r : rows) {
    const int f = fold_of[data.strain_ids[static_cast<std::size_t>(r)]];
    for (int g = 0; g < n_folds; ++g)
      (g == f ? plan.folds[static_cast<std::size_t>(g)].test_rows
              : plan.folds[static_cast<std::size_t>(g)].train_rows)
          .push_back(r);
  }
  return plan;
}

NestedAccuracy nested_accuracy(std::span<const PredictionRecord> records, int expected_species) {
  if (records.empty()) throw std::invalid_argument("nested_accuracy: no records");

  struct StrainStat {
    int species = -1;
    int correct = 0;
    int total = 0;
  };
  std::map<std::string, StrainStat> strains;
  for (const auto& r : records) {
    auto& st = strains[r.strain];
    if (st.total > 0 && st.species != r.truth)
      throw std::invalid_argument("nested_accuracy: strain '" + r.strain +
                                  "' carries two species");
    st.species = r.truth;
    st.correct += r.predicted == r.truth ? 1 : 0;
    ++st.total;
  }

  NestedAccuracy out;
  std::map<int, std::pair<double, int>> species_acc;  // species -> (sum, strains)
  for (const auto& [strain, st] : strains) {
    const double acc = static_cast<double>(st.correct) / static_cast<double>(st.total);
    out.per_strain.emplace_back(strain, acc);
    auto& sa = species_acc[st.species];
    sa.first += acc;
    sa.second += 1;
  }
  if (expected_species > 0)
    for (int c = 0; c < expected_species; ++c)
      if (!species_acc.count(c))
        throw std::invalid_argument("nested_accuracy: species id " + std::to_string(c) +
                                    " has no strains in the records");

  double sum = 0.0;
  for (const auto& [species, sa] : species_acc) {
    const double acc = sa.first / static_cast<double>(sa.second);
    out.per_species.emplace_back(species, acc);
    sum += acc;
  }
  out.overall = sum / static_cast<double>(out.per_species.size());
  return out;
}

SeverityCounts severity_breakdown(std::span<const PredictionRecord> records,
                                  const TaxonomyTree& tree) {
  SeverityCounts c;
  for (const auto& r : records) {
    switch (severity_category(tree_distance(tree, r.truth, r.predicted))) {
      case Severity::correct: ++c.correct; break;
      case Severity::within_genus: ++c.within_genus; break;
      case Severity::within_gram: ++c.within_gram; break;
      case Severity::distinct_gram: ++c.distinct_gram; break;
    }
  }
  return c;
}

std::vector<ConfusionCount> confusion_pairs(std::span<const PredictionRecord> records) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& r : records)
    if (r.predicted != r.truth) ++counts[{r.truth, r.predicted}];
  std::vector<ConfusionCount> out;
  out.reserve(counts.size());
  for (const auto& [pair, n] : counts) out.push_back({pair.first, pair.second, n});
  std::stable_sort(out.begin(), out.end(), [](const ConfusionCount& a, const ConfusionCount& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.truth != b.truth) return a.truth < b.truth;
    return a.predicted < b.predicted;
  });
  return out;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double n = static_cast<double>(sa.size());
  const double m = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= t) ++i;
    while (j < sb.size() && sb[j] <= t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }

  // asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}
  const double ne = n * m / (n + m);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  const double a2 = -2.0 * lambda * lambda;
  double fac = 2.0, sum = 0.0, prev = 0.0;
  bool converged = false;
  for (int k = 1; k <= 100; ++k) {
    const double term = fac * std::exp(a2 * static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::fabs(term) <= 0.001 * prev || std::fabs(term) <= 1e-12 * std::fabs(sum)) {
      converged = true;
      break;
    }
    fac = -fac;
    prev = std::fabs(term);
  }
  const double p = converged ? std::min(1.0, std::max(0.0, sum)) : 1.0;
  return {d, p};
}

double grid_search_c(const LabeledDataset& data, std::span<const int> rows,
                     std::span<const double> c_grid, int n_folds, std::uint64_t seed,
                     const TrainPredictFn& fn, std::vector<std::pair<double, double>>* scores) {
  if (c_grid.empty()) throw std::invalid_argument("grid_search_c: empty grid");
  const FoldPlan plan = make_inner_folds(data, rows, n_folds, seed);

  double best_c = c_grid[0];
  double best_acc = -1.0;
  std::vector<PredictionRecord> records;
  for (double c : c_grid) {
    records.clear();
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
      const auto& fold = plan.folds[static_cast<std::size_t>(f)];
      if (fold.test_rows.empty()) continue;
      const auto predicted = fn(fold.train_rows, fold.test_rows, c);
      for (std::size_t t = 0; t < fold.test_rows.size(); ++t) {
        PredictionRecord r;
        r.spectrum = fold.test_rows[t];
        r.strain = data.strain_ids[static_cast<std::size_t>(fold.test_rows[t])];
        r.truth = data.labels[static_cast<std::size_t>(fold.test_rows[t])];
        r.predicted = predicted[t];
        r.fold = f;
        records.push_back(std::move(r));
      }
    }
    const double acc = nested_accuracy(records).overall;
    if (scores) scores->emplace_back(c, acc);
    if (acc > best_acc || (acc == best_acc && c < best_c)) {
      best_acc = acc;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace specid
