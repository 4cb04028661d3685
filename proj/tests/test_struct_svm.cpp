#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "specid/rng.hpp"
#include "specid/struct_svm.hpp"
#include "support/toys.hpp"

using namespace specid;

namespace {

StructTrainConfig toy_config(int k, double c = 1.0) {
  StructTrainConfig cfg;
  cfg.C = c;
  cfg.loss = LossMatrix::zero_one(k);
  return cfg;
}

// three linearly separable classes in the plane
void three_class_toy(std::vector<Spectrum>& x, std::vector<int>& y) {
  x = {{1.0, 0.0}, {0.9, 0.1},  {1.1, -0.1}, {0.0, 1.0}, {0.1, 0.9},
       {-0.1, 1.1}, {-1.0, -1.0}, {-0.9, -1.1}, {-1.1, -0.9}};
  y = {0, 0, 0, 1, 1, 1, 2, 2, 2};
}

SpeciesTable numbered_species(int k) {
  std::vector<std::string> codes;
  for (int i = 0; i < k; ++i) codes.push_back("SP" + std::to_string(i));
  return SpeciesTable::from_codes(codes);
}

}  // namespace

TEST_SUITE_BEGIN("struct_svm");

TEST_CASE("joint_feature with the class-indicator map") {
  const auto map = JointFeatureMap::class_indicator(3, 2);
  const auto psi = joint_feature(map, {1.0, 2.0}, 1);
  CHECK(psi == std::vector<double>{0, 0, 1, 2, 0, 0});
  CHECK_THROWS_AS(joint_feature(map, {1.0, 2.0}, 7), std::out_of_range);
}

TEST_CASE("joint_feature with the tree-path map") {
  const auto tree = parse_tree("((A,B)g,(C)h)r;");
  const auto map = JointFeatureMap::tree_path(tree, 2);
  CHECK(map.n_blocks == tree.n_nodes());
  const int a = tree.species().id_of("A");
  const auto& blocks = map.blocks_of_class[static_cast<std::size_t>(a)];
  CHECK(blocks.size() == 3);  // leaf, genus, root
  const auto psi = joint_feature(map, {1.0, 2.0}, a);
  int active = 0;
  for (int b = 0; b < map.n_blocks; ++b) {
    const bool on = psi[static_cast<std::size_t>(2 * b)] != 0.0;
    active += on ? 1 : 0;
    if (on) {
      CHECK(psi[static_cast<std::size_t>(2 * b)] == 1.0);
      CHECK(psi[static_cast<std::size_t>(2 * b + 1)] == 2.0);
    }
  }
  CHECK(active == 3);
}

TEST_CASE("tree-path sparsity is depth+1 on the micromass asset and random trees") {
  const auto mm = load_tree(std::string(SPECID_SOURCE_DIR) + "/data/micromass_tree.newick");
  const auto map = JointFeatureMap::tree_path(mm, 4);
  for (int y = 0; y < map.n_classes; ++y)
    CHECK(map.blocks_of_class[static_cast<std::size_t>(y)].size() == 7);

  Rng rng(31337);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t = toys::random_tree(2 + static_cast<int>(rng.below(10)), rng);
    const auto m = JointFeatureMap::tree_path(t, 3);
    for (int y = 0; y < m.n_classes; ++y) {
      const int depth = t.node(t.leaf_of_species(y)).depth;
      CHECK(m.blocks_of_class[static_cast<std::size_t>(y)].size() ==
            static_cast<std::size_t>(depth + 1));
    }
  }
}

TEST_CASE("score agrees with the dense joint dot product") {
  Rng rng(8);
  const auto tree = parse_tree("((A,B)g,(C,D)h)r;");
  const auto map = JointFeatureMap::tree_path(tree, 5);
  StructuredModel m;
  m.map = map;
  m.species = tree.species();
  m.weights.resize(map.joint_dim());
  for (auto& w : m.weights) w = rng.normal();

  // dense weight vector in block-major layout
  std::vector<double> dense(map.joint_dim());
  for (int b = 0; b < map.n_blocks; ++b) {
    const auto wb = m.block_weights(b);
    std::copy(wb.begin(), wb.end(), dense.begin() + static_cast<std::ptrdiff_t>(b) * map.p);
  }

  for (int trial = 0; trial < 20; ++trial) {
    Spectrum x(5);
    for (auto& v : x) v = rng.normal();
    for (int y = 0; y < map.n_classes; ++y) {
      const auto psi = joint_feature(map, x, y);
      double expect = 0.0;
      for (std::size_t d = 0; d < psi.size(); ++d) expect += psi[d] * dense[d];
      CHECK(score(m, x, y) == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  // zero weights score zero everywhere
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  for (int y = 0; y < map.n_classes; ++y) CHECK(score(m, {1, 2, 3, 4, 5}, y) == 0.0);
}

TEST_CASE("predict breaks ties toward the lowest species id") {
  StructuredModel m;
  m.map = JointFeatureMap::class_indicator(4, 2);
  m.weights.assign(m.map.joint_dim(), 0.0);
  CHECK(predict(m, {1.0, 1.0}) == 0);

  // make class 2 strictly maximal
  m.weights[static_cast<std::size_t>(0 * m.map.n_blocks + 2)] = 1.0;  // feature 0, block 2
  CHECK(predict(m, {1.0, 0.0}) == 2);
}

TEST_CASE("separation oracle with zero weights maximizes the loss") {
  const auto mm = load_tree(std::string(SPECID_SOURCE_DIR) + "/data/micromass_tree.newick");
  StructuredModel m;
  m.map = JointFeatureMap::tree_path(mm, 3);
  m.species = mm.species();
  m.weights.assign(m.map.joint_dim(), 0.0);

  StructTrainConfig cfg;
  cfg.loss = loss_matrix(mm);
  cfg.rescaling = Rescaling::slack;

  const int esh = mm.species().id_of("ESH.COL");  // Gram-negative
  const auto [yhat, h] = separation_oracle(m, {0.1, 0.2, 0.3}, esh, cfg);
  CHECK(h == doctest::Approx(12.0));  // slack rescaling at zero scores = max loss
  CHECK(cfg.loss.at(esh, yhat) == 12);
  CHECK(severity_category(tree_distance(mm, esh, yhat)) == Severity::distinct_gram);
}

TEST_CASE("slack and margin rescaling coincide under 0/1 loss") {
  Rng rng(77);
  StructuredModel m;
  m.map = JointFeatureMap::class_indicator(5, 3);
  m.species = numbered_species(5);
  m.weights.resize(m.map.joint_dim());

  StructTrainConfig slack_cfg = toy_config(5);
  StructTrainConfig margin_cfg = slack_cfg;
  slack_cfg.rescaling = Rescaling::slack;
  margin_cfg.rescaling = Rescaling::margin;

  for (int trial = 0; trial < 50; ++trial) {
    for (auto& w : m.weights) w = rng.normal();
    Spectrum x(3);
    for (auto& v : x) v = rng.normal();
    const int y = static_cast<int>(rng.below(5));
    const auto a = separation_oracle(m, x, y, slack_cfg);
    const auto b = separation_oracle(m, x, y, margin_cfg);
    CHECK(a.first == b.first);
    CHECK(a.second == doctest::Approx(b.second).epsilon(1e-12));
  }
}

TEST_CASE("perfectly fitted model has nonpositive margin-rescaled violation") {
  StructuredModel m;
  m.map = JointFeatureMap::class_indicator(3, 2);
  m.species = numbered_species(3);
  m.weights.assign(m.map.joint_dim(), 0.0);
  // weights put class 0 at score 3, others at 0 for x = (1, 0)
  m.weights[0] = 3.0;  // feature 0, block 0
  StructTrainConfig cfg = toy_config(3);
  cfg.rescaling = Rescaling::margin;
  const auto [yhat, h] = separation_oracle(m, {1.0, 0.0}, 0, cfg);
  CHECK(h <= 0.0);  // margins exceed 1, so every H(y) = 1 - margin <= 0
}

TEST_CASE("one-slack training separates a 3-class toy with few cuts") {
  std::vector<Spectrum> x;
  std::vector<int> y;
  three_class_toy(x, y);
  const auto species = numbered_species(3);
  const auto map = JointFeatureMap::class_indicator(3, 2);
  StructTrainConfig cfg = toy_config(3, 1e6);
  const auto m = train_one_slack(x, y, species, map, cfg);
  CHECK(m.converged);
  CHECK(m.n_cuts <= 50);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(predict(m, x[i]) == y[i]);

  // restricted dual objective is monotone along the run
  for (std::size_t t = 1; t < m.dual_objective_curve.size(); ++t)
    CHECK(m.dual_objective_curve[t] >=
          m.dual_objective_curve[t - 1] - 1e-9 * std::max(1.0, std::fabs(m.dual_objective_curve[t])));
}

TEST_CASE("a single training example converges within two cuts") {
  const auto species = numbered_species(3);
  const auto map = JointFeatureMap::class_indicator(3, 2);
  StructTrainConfig cfg = toy_config(3, 1e3);
  const auto m = train_one_slack({{1.0, 0.5}}, {1}, species, map, cfg);
  CHECK(m.converged);
  CHECK(m.n_cuts <= 2);
  CHECK(predict(m, {1.0, 0.5}) == 1);
}

TEST_CASE("epsilon certificate holds at termination") {
  // mean slack-rescaled violation <= xi + epsilon over the training set
  std::vector<Spectrum> x;
  std::vector<int> y;
  three_class_toy(x, y);
  // overlap: relabel one point so the problem is not separable
  y[2] = 1;
  const auto species = numbered_species(3);
  const auto map = JointFeatureMap::class_indicator(3, 2);
  const auto tree = parse_tree("((SP0,SP1)a,(SP2)b)r;");
  StructTrainConfig cfg;
  cfg.C = 10.0;
  cfg.loss = loss_matrix(tree);
  cfg.epsilon = 0.05;
  const auto m = train_one_slack(x, y, species, map, cfg);
  REQUIRE(m.converged);

  double mean_violation = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [yhat, h] = separation_oracle(m, x[i], y[i], cfg);
    mean_violation += std::max(0.0, h);
  }
  mean_violation /= static_cast<double>(x.size());
  CHECK(mean_violation <= m.slack + cfg.epsilon + 1e-9);
  CHECK(m.final_gap <= cfg.epsilon + 1e-12);
}

TEST_CASE("class-indicator instantiation matches independent per-class scorers") {
  // on a separable toy, both one-slack multiclass and the per-class view of
  // its own weights achieve zero training error
  std::vector<Spectrum> x;
  std::vector<int> y;
  three_class_toy(x, y);
  const auto species = numbered_species(3);
  const auto map = JointFeatureMap::class_indicator(3, 2);
  const auto m = train_one_slack(x, y, species, map, toy_config(3, 1e6));
  for (std::size_t i = 0; i < x.size(); ++i) {
    // score(x, y) equals w_y . x for the indicator map
    const auto wy = m.block_weights(y[i]);
    double s = 0.0;
    for (std::size_t j = 0; j < wy.size(); ++j) s += wy[j] * x[i][j];
    CHECK(score(m, x[i], y[i]) == doctest::Approx(s).epsilon(1e-12));
    CHECK(predict(m, x[i]) == y[i]);
  }
}

TEST_CASE("adding a constant to the root block leaves tree-path predictions unchanged") {
  Rng rng(11);
  const auto tree = parse_tree("((A,B)g,(C,D)h)r;");
  const auto map = JointFeatureMap::tree_path(tree, 4);
  StructuredModel m;
  m.map = map;
  m.species = tree.species();
  m.weights.resize(map.joint_dim());
  for (auto& w : m.weights) w = rng.normal();

  StructuredModel shifted = m;
  const int root_block = tree.root();
  for (int j = 0; j < map.p; ++j)
    shifted.weights[static_cast<std::size_t>(j) * static_cast<std::size_t>(map.n_blocks) +
                    static_cast<std::size_t>(root_block)] += rng.normal();

  for (int trial = 0; trial < 100; ++trial) {
    Spectrum x(4);
    for (auto& v : x) v = rng.normal();
    CHECK(predict(m, x) == predict(shifted, x));
  }
}

TEST_CASE("max_cuts cap returns a non-converged model") {
  std::vector<Spectrum> x;
  std::vector<int> y;
  three_class_toy(x, y);
  StructTrainConfig cfg = toy_config(3, 1e6);
  cfg.max_cuts = 1;
  const auto m = train_one_slack(x, y, numbered_species(3), JointFeatureMap::class_indicator(3, 2), cfg);
  CHECK_FALSE(m.converged);
  CHECK(m.n_cuts == 1);
}

TEST_SUITE_END();
