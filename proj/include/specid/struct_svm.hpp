#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "specid/linear_svm.hpp"
#include "specid/spectra.hpp"
#include "specid/taxonomy.hpp"

namespace specid {

enum class FeatureMapKind { class_indicator, tree_path };

// Joint input-output feature map Psi(x, y). The input vector is repeated as
// one block per output unit: one block per class for the class-indicator
// map, one block per tree node for the tree-path map (the blocks of label y
// are the nodes on the root-to-leaf path of y, root included).
struct JointFeatureMap {
  FeatureMapKind kind = FeatureMapKind::class_indicator;
  int p = 0;
  int n_classes = 0;
  int n_blocks = 0;
  std::vector<std::vector<int>> blocks_of_class;  // ascending block ids per class
  std::uint64_t tree_hash = 0;                    // tree_path only

  static JointFeatureMap class_indicator(int n_classes, int p);
  static JointFeatureMap tree_path(const TaxonomyTree& tree, int p);

  std::size_t joint_dim() const { return static_cast<std::size_t>(n_blocks) * static_cast<std::size_t>(p); }
};

// Dense Psi(x, y); blocks of y hold a copy of x, all other blocks are zero.
// Block-major layout (block b occupies [b*p, (b+1)*p)).
std::vector<double> joint_feature(const JointFeatureMap& map, const Spectrum& x, int y);

enum class Rescaling { slack, margin };

struct StructTrainConfig {
  double C = 1.0;
  double epsilon = 0.1;  // cutting-plane precision
  Rescaling rescaling = Rescaling::slack;
  LossMatrix loss;
  int max_cuts = 1000;
  double qp_tol = 1e-8;   // restricted-dual KKT tolerance
  int prune_after = 50;   // drop cuts inactive this many consecutive solves
};

struct StructuredModel {
  JointFeatureMap map;
  // feature-major: weight of feature j in block b sits at j*n_blocks + b
  // (keeps the per-example block activations contiguous)
  std::vector<double> weights;
  SpeciesTable species;

  bool converged = true;
  int n_cuts = 0;         // constraints added over the run
  double slack = 0.0;     // xi at termination
  double final_gap = 0.0; // most-violated mean violation minus xi
  std::vector<double> dual_objective_curve;  // restricted dual after each solve

  std::vector<double> block_weights(int block) const;  // length p slice
};

// w . Psi(x, y), computed over the active blocks only.
double score(const StructuredModel& m, const Spectrum& x, int y);

// Scores of every class in one pass.
std::vector<double> scores_all(const StructuredModel& m, const Spectrum& x);

// argmax_y score(m, x, y); ties broken toward the lowest species id.
int predict(const StructuredModel& m, const Spectrum& x);

// Most violated wrong label for one example:
//   margin rescaling: H(y) = loss(t,y) + score(x,y) - score(x,t)
//   slack  rescaling: H(y) = loss(t,y) * (1 + score(x,y) - score(x,t))
// Returns (argmax over y != y_true, its H). Exhaustive over the classes.
std::pair<int, double> separation_oracle(const StructuredModel& m, const Spectrum& x, int y_true,
                                         const StructTrainConfig& cfg);

// 1-slack cutting-plane training of
//   min 1/2 ||w||^2 + C xi
// over joint constraints built from per-example most-violated labelings
// (mean loss-weighted feature difference, mean loss). The restricted dual is
// re-solved by SMO-style pairwise ascent over the cut weights after every
// added cut; termination when the aggregated violation exceeds xi by at most
// epsilon. Hitting max_cuts first returns the model with converged=false.
StructuredModel train_one_slack(const std::vector<Spectrum>& x, const std::vector<int>& labels,
                                const SpeciesTable& species, const JointFeatureMap& map,
                                const StructTrainConfig& cfg);

StructuredModel train_one_slack(const LabeledDataset& data, std::span<const int> rows,
                                const JointFeatureMap& map, const StructTrainConfig& cfg);

}  // namespace specid
