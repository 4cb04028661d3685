#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "specid/evaluation.hpp"
#include "specid/linear_svm.hpp"
#include "specid/rng.hpp"
#include "support/oracles.hpp"
#include "support/toys.hpp"

using namespace specid;

namespace {

PredictionRecord rec(const std::string& strain, int truth, int predicted) {
  PredictionRecord r;
  r.strain = strain;
  r.truth = truth;
  r.predicted = predicted;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("loso folds: one per strain, tests partition the spectra") {
  const auto d = toys::make_dataset({
      {"stA", "AAA", {1.0}},
      {"stA", "AAA", {1.1}},
      {"stB", "AAA", {0.9}},
      {"stB", "AAA", {1.2}},
      {"stC", "BBB", {0.0}},
  });
  const auto plan = make_loso_folds(d);
  REQUIRE(plan.folds.size() == 3);

  std::set<int> tested;
  for (const auto& f : plan.folds) {
    REQUIRE(f.test_strains.size() == 1);
    for (int r : f.test_rows) {
      CHECK(d.strain_ids[static_cast<std::size_t>(r)] == f.test_strains[0]);
      CHECK(tested.insert(r).second);  // disjoint
    }
    for (int r : f.train_rows) CHECK(d.strain_ids[static_cast<std::size_t>(r)] != f.test_strains[0]);
    CHECK(f.train_rows.size() + f.test_rows.size() == d.size());
  }
  CHECK(tested.size() == d.size());
}

TEST_CASE("inner folds: balanced strain groups, seeded, no straddling") {
  std::vector<std::tuple<std::string, std::string, Spectrum>> rows;
  for (int s = 0; s < 20; ++s) {
    rows.emplace_back("st" + std::to_string(s), s % 2 ? "AAA" : "BBB", Spectrum{double(s)});
    rows.emplace_back("st" + std::to_string(s), s % 2 ? "AAA" : "BBB", Spectrum{double(s) + 0.5});
  }
  const auto d = toys::make_dataset(rows);
  std::vector<int> all(d.size());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[static_cast<std::size_t>(i)] = i;

  const auto plan = make_inner_folds(d, all, 10, 42);
  REQUIRE(plan.folds.size() == 10);
  for (const auto& f : plan.folds) CHECK(f.test_strains.size() == 2);  // 20 strains / 10 folds

  // same seed -> identical partition; different seed -> allowed to differ
  const auto plan2 = make_inner_folds(d, all, 10, 42);
  for (std::size_t f = 0; f < plan.folds.size(); ++f)
    CHECK(plan.folds[f].test_strains == plan2.folds[f].test_strains);

  // strains never straddle: every strain's rows land in exactly one test fold
  std::map<std::string, std::set<std::size_t>> fold_of_strain;
  for (std::size_t f = 0; f < plan.folds.size(); ++f)
    for (int r : plan.folds[f].test_rows)
      fold_of_strain[d.strain_ids[static_cast<std::size_t>(r)]].insert(f);
  for (const auto& [strain, folds] : fold_of_strain) CHECK(folds.size() == 1);

  CHECK_THROWS_AS(make_inner_folds(d, all, 21, 1), std::invalid_argument);
}

TEST_CASE("nested accuracy hand cases") {
  // one species, two strains at accuracy 1.0 and 0.5
  std::vector<PredictionRecord> records{
      rec("s1", 0, 0), rec("s1", 0, 0), rec("s2", 0, 0), rec("s2", 0, 1),
  };
  const auto a = nested_accuracy(records);
  CHECK(a.per_strain.size() == 2);
  CHECK(a.per_species.size() == 1);
  CHECK(a.per_species[0].second == doctest::Approx(0.75));
  CHECK(a.overall == doctest::Approx(0.75));

  // all correct
  std::vector<PredictionRecord> perfect{rec("s1", 0, 0), rec("s2", 1, 1)};
  CHECK(nested_accuracy(perfect).overall == doctest::Approx(1.0));

  // nesting differs from the flat rate: species A strains (1.0, 1.0), B (0.0)
  std::vector<PredictionRecord> nested{rec("a1", 0, 0), rec("a2", 0, 0), rec("b1", 1, 0)};
  CHECK(nested_accuracy(nested).overall == doctest::Approx(0.5));
  // flat rate would be 2/3

  // species coverage requirement
  CHECK_THROWS_AS(nested_accuracy(nested, 3), std::invalid_argument);
  CHECK_NOTHROW(nested_accuracy(nested, 2));
}

TEST_CASE("nested accuracy equals flat accuracy on balanced data") {
  Rng rng(88);
  std::vector<PredictionRecord> records;
  int correct = 0, total = 0;
  for (int species = 0; species < 3; ++species)
    for (int strain = 0; strain < 4; ++strain)
      for (int spectrum = 0; spectrum < 5; ++spectrum) {
        const bool hit = rng.uniform() < 0.7;
        records.push_back(rec("sp" + std::to_string(species) + "_st" + std::to_string(strain),
                              species, hit ? species : (species + 1) % 3));
        correct += hit ? 1 : 0;
        ++total;
      }
  const double flat = static_cast<double>(correct) / static_cast<double>(total);
  CHECK(nested_accuracy(records).overall == doctest::Approx(flat).epsilon(1e-12));
}

TEST_CASE("severity breakdown buckets and sums") {
  const auto t = parse_tree(
      "(((A,B)g1,(C)g2)grampos,((D)g3)gramneg)root;");
  // depths: leaves at 3; within genus = 2; within gram = 4; cross = 6
  // (this toy panel maps 6 to within_gram, so use the micromass asset instead)
  const auto mm = load_tree(std::string(SPECID_SOURCE_DIR) + "/data/micromass_tree.newick");
  const int bac_ceu = mm.species().id_of("BAC.CEU");
  const int bac_thu = mm.species().id_of("BAC.THU");
  const int lis_isi = mm.species().id_of("LIS.ISI");
  const int esh_col = mm.species().id_of("ESH.COL");

  std::vector<PredictionRecord> records{
      rec("s1", bac_ceu, bac_ceu),  // correct
      rec("s2", bac_ceu, bac_thu),  // within genus
      rec("s3", bac_ceu, lis_isi),  // within gram (distance 6)
      rec("s4", bac_ceu, esh_col),  // distinct gram
      rec("s5", bac_thu, bac_thu),  // correct
  };
  const auto counts = severity_breakdown(records, mm);
  CHECK(counts.correct == 2);
  CHECK(counts.within_genus == 1);
  CHECK(counts.within_gram == 1);
  CHECK(counts.distinct_gram == 1);
  CHECK(counts.total() == static_cast<int>(records.size()));

  std::vector<PredictionRecord> all_correct{rec("s1", bac_ceu, bac_ceu), rec("s2", esh_col, esh_col)};
  const auto c2 = severity_breakdown(all_correct, mm);
  CHECK(c2.correct == 2);
  CHECK(c2.within_genus + c2.within_gram + c2.distinct_gram == 0);
  (void)t;
}

TEST_CASE("confusion pairs are ranked by count with lexicographic ties") {
  std::vector<PredictionRecord> none{rec("s", 0, 0)};
  CHECK(confusion_pairs(none).empty());

  std::vector<PredictionRecord> records{
      rec("s", 0, 1), rec("s", 0, 1), rec("s", 1, 0),
  };
  const auto pairs = confusion_pairs(records);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].truth == 0);
  CHECK(pairs[0].predicted == 1);
  CHECK(pairs[0].count == 2);
  CHECK(pairs[1].truth == 1);
  CHECK(pairs[1].predicted == 0);
  CHECK(pairs[1].count == 1);

  std::vector<PredictionRecord> tied{rec("s", 2, 0), rec("s", 0, 2), rec("s", 0, 1), rec("s", 0, 1)};
  const auto ranked = confusion_pairs(tied);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].count == 2);
  CHECK(ranked[1].truth == 0);  // (0,2) before (2,0) at equal counts
  CHECK(ranked[2].truth == 2);
}

TEST_CASE("ks two-sample: exact cases") {
  std::vector<double> a{0.1, 0.4, 0.7};
  const auto same = ks_two_sample(a, a);
  CHECK(same.d == 0.0);
  CHECK(same.p_value == doctest::Approx(1.0));

  std::vector<double> low(20), high(20);
  for (int i = 0; i < 20; ++i) {
    low[static_cast<std::size_t>(i)] = i;
    high[static_cast<std::size_t>(i)] = 100 + i;
  }
  const auto disjoint = ks_two_sample(low, high);
  CHECK(disjoint.d == doctest::Approx(1.0));
  CHECK(disjoint.p_value < 1e-6);

  CHECK_THROWS_AS(ks_two_sample({}, a), std::invalid_argument);
}

TEST_CASE("ks statistic matches the exhaustive ecdf oracle to 1e-12") {
  Rng rng(4711);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    const int m = 1 + static_cast<int>(rng.below(30));
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) a.push_back(static_cast<double>(rng.below(12)));  // ties likely
    for (int i = 0; i < m; ++i) b.push_back(static_cast<double>(rng.below(12)) + 0.5 * rng.uniform());
    const auto ks = ks_two_sample(a, b);
    const double oracle = oracles::ks_statistic_sweep(a, b);
    CHECK(std::fabs(ks.d - oracle) <= 1e-12);
    CHECK(ks.d >= 0.0);
    CHECK(ks.d <= 1.0);
    const auto sym = ks_two_sample(b, a);
    CHECK(sym.d == ks.d);
    CHECK(sym.p_value == ks.p_value);
  }
}

TEST_CASE("grid search: degenerate grids and ties") {
  const auto d = toys::cluster_dataset(2, 6, 2, 3, 0.2, 5);
  std::vector<int> all(d.size());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[static_cast<std::size_t>(i)] = i;

  // an oracle classifier independent of c: every value ties, smallest returned
  const TrainPredictFn perfect = [&](std::span<const int>, std::span<const int> test, double) {
    std::vector<int> out;
    for (int r : test) out.push_back(d.labels[static_cast<std::size_t>(r)]);
    return out;
  };
  const std::vector<double> grid{0.01, 1.0, 100.0};
  CHECK(grid_search_c(d, all, grid, 3, 9, perfect) == 0.01);

  const std::vector<double> single{7.5};
  CHECK(grid_search_c(d, all, single, 3, 9, perfect) == 7.5);

  CHECK_THROWS_AS(grid_search_c(d, all, {}, 3, 9, perfect), std::invalid_argument);
}

TEST_CASE("grid search picks the small C on a noisy high-dimensional toy") {
  // signal in coordinate 0; label noise on two strains; many per-spectrum
  // noise coordinates let a large C memorize the flipped strains and tilt
  // the boundary, so the small C wins the inner strain-grouped CV
  Rng rng(2025);
  std::vector<std::tuple<std::string, std::string, Spectrum>> rows;
  const int p = 24;
  for (int s = 0; s < 12; ++s) {
    const bool species_b = s >= 6;
    const bool flipped = s == 0 || s == 6;  // mislabeled strains
    for (int r = 0; r < 2; ++r) {
      Spectrum x(static_cast<std::size_t>(p));
      const double sign = species_b != flipped ? 1.0 : -1.0;
      x[0] = sign * (1.0 + 0.1 * rng.uniform());
      for (int j = 1; j < p; ++j) x[static_cast<std::size_t>(j)] = rng.normal();
      rows.emplace_back("st" + std::to_string(s), species_b ? "BBB" : "AAA", x);
    }
  }
  const auto d = toys::make_dataset(rows);
  std::vector<int> all(d.size());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[static_cast<std::size_t>(i)] = i;

  const TrainPredictFn svm = [&](std::span<const int> train, std::span<const int> test, double c) {
    BinaryTrainConfig cfg;
    cfg.C = c;
    cfg.seed = 99;
    std::vector<int> y;
    for (int r : train) y.push_back(d.labels[static_cast<std::size_t>(r)] == 0 ? 1 : -1);
    const auto m = train_binary(SparseMatrix::from_rows(d.spectra, train), y, cfg);
    std::vector<int> out;
    for (int r : test)
      out.push_back(decision_value(m, d.spectra[static_cast<std::size_t>(r)]) >= 0.0 ? 0 : 1);
    return out;
  };

  const std::vector<double> grid{1e-2, 1e6};
  std::vector<std::pair<double, double>> scores;
  const double chosen = grid_search_c(d, all, grid, 4, 31, svm, &scores);

  // brute-force replay of the inner evaluation confirms the argmax
  REQUIRE(scores.size() == 2);
  const auto plan = make_inner_folds(d, all, 4, 31);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<PredictionRecord> records;
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
      const auto& fold = plan.folds[static_cast<std::size_t>(f)];
      const auto pred = svm(fold.train_rows, fold.test_rows, grid[g]);
      for (std::size_t t = 0; t < fold.test_rows.size(); ++t) {
        PredictionRecord r = rec(d.strain_ids[static_cast<std::size_t>(fold.test_rows[t])],
                                 d.labels[static_cast<std::size_t>(fold.test_rows[t])], pred[t]);
        records.push_back(std::move(r));
      }
    }
    CHECK(nested_accuracy(records).overall == doctest::Approx(scores[g].second).epsilon(1e-12));
  }
  CHECK(scores[0].second > scores[1].second);  // overfitting hurts the large C
  CHECK(chosen == 1e-2);
}

TEST_SUITE_END();
