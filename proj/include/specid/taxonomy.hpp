#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specid/spectra.hpp"

namespace specid {

// Rooted tree over the species panel. Leaves carry species codes; distances
// are edge counts (branch lengths in the input are ignored).
class TaxonomyTree {
 public:
  struct Node {
    int parent = -1;
    int depth = 0;
    std::string name;
    std::vector<int> children;
    bool is_leaf() const { return children.empty(); }
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int root() const { return root_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_leaves() const { return species_.size(); }

  const SpeciesTable& species() const { return species_; }
  int leaf_of_species(int species_id) const { return leaf_of_species_[static_cast<std::size_t>(species_id)]; }

  int lca(int a, int b) const;           // lowest common ancestor of two nodes
  std::string to_newick() const;         // canonical serialization
  std::uint64_t hash() const;            // FNV-1a over to_newick()

  friend TaxonomyTree parse_tree(const std::string& text);
  friend class DendrogramBuilder;

 private:
  void finalize();  // computes depths, species table, leaf map; validates

  std::vector<Node> nodes_;
  int root_ = -1;
  SpeciesTable species_;
  std::vector<int> leaf_of_species_;
};

// Parses a Newick-style serialization: nested parentheses, leaf names =
// species codes, optional internal names, optional branch lengths (ignored),
// terminating semicolon optional. Throws on malformed text, duplicate or
// unnamed leaves.
TaxonomyTree parse_tree(const std::string& text);

// Reads a Newick file from disk.
TaxonomyTree load_tree(const std::string& path);

// Number of edges on the leaf-to-leaf path between two species.
int tree_distance(const TaxonomyTree& t, int species_a, int species_b);

// Node ids from the species leaf up to (and including) the root.
std::vector<int> path_to_root(const TaxonomyTree& t, int species_id);

// K x K matrix of pairwise tree distances.
class LossMatrix {
 public:
  LossMatrix() = default;
  LossMatrix(int k, std::vector<int> delta) : k_(k), delta_(std::move(delta)) {}

  static LossMatrix zero_one(int k);

  int size() const { return k_; }
  int at(int i, int j) const { return delta_[static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(j)]; }
  int max_off_diagonal() const;
  int min_off_diagonal() const;

  // zero diagonal, symmetric, positive off-diagonal, triangle inequality
  void validate() const;

 private:
  int k_ = 0;
  std::vector<int> delta_;
};

LossMatrix loss_matrix(const TaxonomyTree& t);

// Error-severity buckets of the MicroMass panel (uniform leaf depth 6).
enum class Severity { correct, within_genus, within_gram, distinct_gram };

// 0 -> correct, 2 -> within_genus, even 2<d<12 -> within_gram,
// 12 -> distinct_gram. Anything else is not representable on the panel tree
// and throws.
Severity severity_category(int delta);

const char* severity_name(Severity s);

}  // namespace specid
