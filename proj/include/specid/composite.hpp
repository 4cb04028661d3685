#pragma once

#include <span>
#include <vector>

#include "specid/linear_svm.hpp"
#include "specid/spectra.hpp"
#include "specid/taxonomy.hpp"

namespace specid {

// One-vs-all: K binary SVMs, prediction by the largest decision value.
struct OvaModel {
  int p = 0;
  std::vector<LinearModel> models;  // one per species id
  SpeciesTable species;
};

OvaModel train_ova(const LabeledDataset& data, std::span<const int> rows,
                   const BinaryTrainConfig& cfg);
int predict_ova(const OvaModel& m, const Spectrum& x);

// One-vs-one: K(K-1)/2 binary SVMs over unordered class pairs. For the pair
// (a, b) with a < b the positive class is a; a zero decision value votes a.
struct OvoModel {
  int p = 0;
  int k = 0;
  std::vector<LinearModel> models;  // indexed by pair_index
  SpeciesTable species;

  static int pair_index(int k, int a, int b);  // requires a < b
};

OvoModel train_ovo(const LabeledDataset& data, std::span<const int> rows,
                   const BinaryTrainConfig& cfg);
// Vote counts per class; they always sum to K(K-1)/2.
std::vector<int> ovo_votes(const OvoModel& m, const Spectrum& x);
// Plurality of votes; vote ties go to the largest summed |decision value|
// over the tied classes, then to the lowest species id.
int predict_ovo(const OvoModel& m, const Spectrum& x);

// Cascade: a child-selector SVM at every internal node of the tree, applied
// top-down until a leaf. Nodes with two children use a single signed binary
// model; nodes with more use a one-vs-all bank over the children.
struct CascadeModel {
  struct NodeModel {
    int node = -1;
    std::vector<int> children;        // tree node ids, in tree order
    std::vector<char> reachable;      // child subtree had training spectra
    std::vector<LinearModel> models;  // 1 = signed binary, n = ova bank, 0 = passthrough
  };

  TaxonomyTree tree;
  std::vector<int> model_of_node;  // tree node -> index into node_models, -1 for leaves
  std::vector<NodeModel> node_models;
  std::vector<int> species_of_leaf;  // tree node -> dataset species id (-1 internal)
  int p = 0;
  SpeciesTable species;
};

CascadeModel train_cascade(const TaxonomyTree& tree, const LabeledDataset& data,
                           std::span<const int> rows, const BinaryTrainConfig& cfg);
int predict_cascade(const CascadeModel& m, const Spectrum& x);

// Complete-linkage agglomerative clustering of per-species prototype spectra
// (coordinate-wise medians) under the Euclidean distance. Returns the binary
// merge tree with species codes at the leaves. Merge ties break toward the
// lexicographically smallest pair of cluster indices, clusters being numbered
// by creation order (leaves first, in species-id order).
TaxonomyTree build_dendrogram(const LabeledDataset& data, std::span<const int> rows);

}  // namespace specid
