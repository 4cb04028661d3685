#include <doctest.h>

#include <cmath>

#include "specid/baselines.hpp"
#include "specid/rng.hpp"
#include "support/oracles.hpp"
#include "support/toys.hpp"

using namespace specid;

TEST_SUITE_BEGIN("baselines");

TEST_CASE("mtry defaults to floor(sqrt(p)), 36 at p=1300") {
  std::vector<std::tuple<std::string, std::string, Spectrum>> rows;
  for (int i = 0; i < 4; ++i) {
    Spectrum x(1300, 0.0);
    x[static_cast<std::size_t>(i)] = 1.0;
    rows.emplace_back("st" + std::to_string(i), i < 2 ? "AAA" : "BBB", x);
  }
  const auto d = toys::make_dataset(rows);
  std::vector<int> all{0, 1, 2, 3};
  RfConfig cfg;
  cfg.n_trees = 3;
  const auto m = train_rf(d, all, cfg);
  CHECK(m.mtry == 36);

  const auto d2 = toys::cluster_dataset(2, 2, 1, 10, 0.1, 3);
  std::vector<int> rows2{0, 1, 2, 3};
  const auto m2 = train_rf(d2, rows2, cfg);
  CHECK(m2.mtry == 3);  // floor(sqrt(10))
}

TEST_CASE("a perfectly splitting feature yields full vote accuracy at mtry=p") {
  // large enough that every bootstrap draw keeps both classes
  std::vector<std::tuple<std::string, std::string, Spectrum>> rows;
  Rng rng(17);
  for (int i = 0; i < 16; ++i) {
    const bool b = i >= 8;
    rows.emplace_back("st" + std::to_string(i), b ? "BBB" : "AAA",
                      Spectrum{(b ? 1.0 : 0.0) + 0.05 * rng.uniform(), rng.uniform()});
  }
  const auto d = toys::make_dataset(rows);
  std::vector<int> all(d.size());
  for (int i = 0; i < static_cast<int>(all.size()); ++i) all[static_cast<std::size_t>(i)] = i;
  RfConfig cfg;
  cfg.n_trees = 25;
  cfg.mtry = 2;
  cfg.seed = 5;
  const auto m = train_rf(d, all, cfg);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto votes = rf_votes(m, d.spectra[i]);
    CHECK(votes[static_cast<std::size_t>(d.labels[i])] == cfg.n_trees);
  }
}

TEST_CASE("forest training is reproducible for a fixed seed") {
  const auto d = toys::cluster_dataset(3, 3, 2, 6, 0.4, 21);
  std::vector<int> rows(d.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) rows[static_cast<std::size_t>(i)] = i;
  RfConfig cfg;
  cfg.n_trees = 11;
  cfg.seed = 909;
  const auto a = train_rf(d, rows, cfg);
  const auto b = train_rf(d, rows, cfg);
  CHECK(a.oob_counts == b.oob_counts);
  REQUIRE(a.trees.size() == b.trees.size());
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    Spectrum x(6);
    for (auto& v : x) v = rng.uniform();
    CHECK(predict_rf(a, x) == predict_rf(b, x));
    const auto votes = rf_votes(a, x);
    int sum = 0;
    for (int v : votes) sum += v;
    CHECK(sum == cfg.n_trees);  // every tree votes exactly once
  }
}

TEST_CASE("vote ties resolve to the lowest species id") {
  ForestModel m;
  m.p = 1;
  m.k = 10;
  DecisionTree leaf3, leaf7;
  leaf3.nodes.push_back({-1, 0.0, -1, -1, 3, {}});
  leaf7.nodes.push_back({-1, 0.0, -1, -1, 7, {}});
  m.trees = {leaf3, leaf7};
  CHECK(rf_votes(m, {0.0}) == std::vector<int>{0, 0, 0, 1, 0, 0, 0, 1, 0, 0});
  CHECK(predict_rf(m, {0.0}) == 3);

  m.trees = {leaf7, leaf7};
  CHECK(predict_rf(m, {0.0}) == 7);
}

TEST_CASE("out-of-bag counts concentrate near n_trees/e") {
  const auto d = toys::cluster_dataset(4, 5, 5, 5, 0.5, 77);  // 100 rows
  REQUIRE(d.size() == 100);
  std::vector<int> rows(d.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) rows[static_cast<std::size_t>(i)] = i;
  RfConfig cfg;
  cfg.n_trees = 500;
  cfg.mtry = 2;
  cfg.seed = 1234;
  const auto m = train_rf(d, rows, cfg);
  const double expect = 500.0 * std::exp(-1.0);
  for (int c : m.oob_counts) {
    CHECK(c >= 0.8 * expect);
    CHECK(c <= 1.2 * expect);
  }
}

TEST_CASE("1-nn agrees with an exhaustive scan on random data") {
  const auto d = toys::cluster_dataset(5, 5, 2, 7, 1.5, 314);  // 50 rows, noisy
  std::vector<int> rows(d.size());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) rows[static_cast<std::size_t>(i)] = i;
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    Spectrum x(7);
    for (auto& v : x) v = 2.0 * rng.uniform();
    CHECK(predict_1nn(d, rows, x) == oracles::nn_label_scan(d, x));
  }
}

TEST_CASE("1-nn basics: self match, nearer point wins, tie to lowest index") {
  const auto d = toys::make_dataset({
      {"st0", "AAA", {0.0, 0.0}},
      {"st1", "BBB", {1.0, 0.0}},
      {"st2", "CCC", {3.0, 0.0}},
  });
  std::vector<int> rows{0, 1, 2};
  CHECK(predict_1nn(d, rows, {1.0, 0.0}) == d.species.id_of("BBB"));  // exact self
  CHECK(predict_1nn(d, rows, {1.8, 0.0}) == d.species.id_of("BBB"));  // dist 0.8 vs 1.2
  CHECK(predict_1nn(d, rows, {0.5, 0.0}) == d.species.id_of("AAA"));  // tie -> first row

  // leave-one-out view: excluding the query row itself
  std::vector<int> loo{1, 2};
  CHECK(predict_1nn(d, loo, d.spectra[0]) == d.species.id_of("BBB"));
}

TEST_CASE("centroids are coordinate-wise medians") {
  const auto d = toys::make_dataset({
      {"st0", "AAA", {0.0, 0.0}},
      {"st1", "AAA", {0.0, 2.0}},
      {"st2", "AAA", {2.0, 0.0}},
      {"st3", "BBB", {5.0, 5.0}},
  });
  std::vector<int> rows{0, 1, 2, 3};
  const auto m = train_centroid(d, rows);
  REQUIRE(m.centroids.size() == 2);
  CHECK(m.centroids[0] == Spectrum{0.0, 0.0});  // median of {0,0,2} per coordinate
  CHECK(m.centroids[1] == Spectrum{5.0, 5.0});  // single spectrum species

  CHECK(predict_centroid(m, {0.1, 0.1}) == d.species.id_of("AAA"));
  CHECK(predict_centroid(m, {5.0, 5.0}) == d.species.id_of("BBB"));
}

TEST_CASE("even-count medians average the middle pair; uniform duplication is neutral") {
  const auto d = toys::make_dataset({
      {"st0", "AAA", {0.0}},
      {"st1", "AAA", {1.0}},
      {"st2", "AAA", {5.0}},
      {"st3", "AAA", {9.0}},
  });
  std::vector<int> rows{0, 1, 2, 3};
  const auto m = train_centroid(d, rows);
  CHECK(m.centroids[0][0] == doctest::Approx(3.0));  // (1 + 5) / 2

  // duplicating every spectrum the same number of times keeps the median
  std::vector<std::tuple<std::string, std::string, Spectrum>> tripled;
  for (int copy = 0; copy < 3; ++copy)
    for (int i = 0; i < 4; ++i)
      tripled.emplace_back("st" + std::to_string(i), "AAA", d.spectra[static_cast<std::size_t>(i)]);
  const auto d3 = toys::make_dataset(tripled);
  std::vector<int> rows3(d3.size());
  for (int i = 0; i < static_cast<int>(rows3.size()); ++i) rows3[static_cast<std::size_t>(i)] = i;
  const auto m3 = train_centroid(d3, rows3);
  CHECK(m3.centroids[0][0] == doctest::Approx(3.0));
}

TEST_CASE("centroid prediction ties resolve to the lowest species id") {
  CentroidModel m;
  m.p = 1;
  m.species_ids = {2, 5};
  m.centroids = {{1.0}, {3.0}};
  CHECK(predict_centroid(m, {2.0}) == 2);  // equidistant
}

TEST_SUITE_END();
