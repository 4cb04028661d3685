#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "specid/spectra.hpp"

namespace specid {

struct RfConfig {
  int n_trees = 500;
  int mtry = 0;  // 0 = floor(sqrt(p))
  std::uint64_t seed = 1;
};

struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_class = -1;
    std::vector<int> counts;  // class distribution at the leaf
  };
  std::vector<Node> nodes;  // root at index 0

  int walk(const Spectrum& x) const;  // leaf majority class
};

struct ForestModel {
  int p = 0;
  int k = 0;
  int mtry = 0;
  std::uint64_t seed = 1;
  std::vector<DecisionTree> trees;
  std::vector<int> oob_counts;  // per training row: trees whose bootstrap missed it
  SpeciesTable species;
};

// Breiman-style forest: every tree grows on a bootstrap sample (N draws with
// replacement) with Gini splits over mtry features drawn uniformly without
// replacement at each node, until nodes are pure or admit no separating
// split. Per-tree RNG streams derive from (seed, tree index).
ForestModel train_rf(const LabeledDataset& data, std::span<const int> rows, const RfConfig& cfg);

std::vector<int> rf_votes(const ForestModel& m, const Spectrum& x);
// Plurality vote; ties toward the lowest species id.
int predict_rf(const ForestModel& m, const Spectrum& x);

// Label of the Euclidean-nearest training spectrum; ties toward the lowest
// training index.
int predict_1nn(const LabeledDataset& data, std::span<const int> rows, const Spectrum& x);

struct CentroidModel {
  int p = 0;
  std::vector<int> species_ids;  // ascending; species present in training
  std::vector<Spectrum> centroids;
  SpeciesTable species;
};

// Per-species coordinate-wise median spectra (even counts average the two
// middle order statistics).
CentroidModel train_centroid(const LabeledDataset& data, std::span<const int> rows);
// Nearest centroid; ties toward the lowest species id.
int predict_centroid(const CentroidModel& m, const Spectrum& x);

}  // namespace specid
