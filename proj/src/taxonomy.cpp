#include "specid/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace specid {

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' ||
         c == '+' || c == '/';
}

struct NewickParser {
  const std::string& text;
  std::size_t pos = 0;
  std::vector<TaxonomyTree::Node> nodes;

  explicit NewickParser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error("newick parse error at offset " + std::to_string(pos) + ": " + what);
  }

  std::string read_name() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && is_name_char(text[pos])) ++pos;
    return text.substr(start, pos - start);
  }

  void skip_branch_length() {
    if (peek() == ':') {
      ++pos;
      skip_ws();
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
              text[pos] == '-' || text[pos] == '+' || text[pos] == 'e' || text[pos] == 'E'))
        ++pos;
      if (pos == start) fail("expected branch length after ':'");
    }
  }

  int parse_node() {
    int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (peek() == '(') {
      ++pos;
      while (true) {
        int child = parse_node();
        nodes[static_cast<std::size_t>(child)].parent = id;
        nodes[static_cast<std::size_t>(id)].children.push_back(child);
        char c = peek();
        if (c == ',') {
          ++pos;
          continue;
        }
        if (c == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
      nodes[static_cast<std::size_t>(id)].name = read_name();
    } else {
      std::string name = read_name();
      if (name.empty()) fail("expected leaf name");
      nodes[static_cast<std::size_t>(id)].name = std::move(name);
    }
    skip_branch_length();
    return id;
  }

  int parse_tree() {
    int root = parse_node();
    char c = peek();
    if (c == ';') {
      ++pos;
      c = peek();
    }
    if (c != '\0') fail("trailing characters after tree");
    return root;
  }
};

void write_newick(const TaxonomyTree& t, int node, std::string& out) {
  const auto& n = t.node(node);
  if (!n.children.empty()) {
    out += '(';
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      if (i) out += ',';
      write_newick(t, n.children[i], out);
    }
    out += ')';
  }
  out += n.name;
}

}  // namespace

void TaxonomyTree::finalize() {
  if (nodes_.empty()) throw std::runtime_error("empty tree");

  // depths via parent links; parents always precede children by construction
  std::vector<std::string> leaf_codes;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    n.depth = n.parent < 0 ? 0 : nodes_[static_cast<std::size_t>(n.parent)].depth + 1;
    if (n.is_leaf()) {
      if (n.name.empty()) throw std::runtime_error("unnamed leaf in tree");
      leaf_codes.push_back(n.name);
    }
  }
  std::vector<std::string> uniq = leaf_codes;
  std::sort(uniq.begin(), uniq.end());
  if (std::adjacent_find(uniq.begin(), uniq.end()) != uniq.end())
    throw std::runtime_error("duplicate species leaf in tree");

  species_ = SpeciesTable::from_codes(std::move(uniq));
  leaf_of_species_.assign(static_cast<std::size_t>(species_.size()), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf())
      leaf_of_species_[static_cast<std::size_t>(species_.id_of(nodes_[i].name))] = static_cast<int>(i);
}

TaxonomyTree parse_tree(const std::string& text) {
  NewickParser p(text);
  TaxonomyTree t;
  t.root_ = p.parse_tree();
  t.nodes_ = std::move(p.nodes);
  t.finalize();
  return t;
}

TaxonomyTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open tree file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tree(ss.str());
}

int TaxonomyTree::lca(int a, int b) const {
  while (node(a).depth > node(b).depth) a = node(a).parent;
  while (node(b).depth > node(a).depth) b = node(b).parent;
  while (a != b) {
    a = node(a).parent;
    b = node(b).parent;
  }
  return a;
}

std::string TaxonomyTree::to_newick() const {
  std::string out;
  write_newick(*this, root_, out);
  out += ';';
  return out;
}

std::uint64_t TaxonomyTree::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : to_newick()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

int tree_distance(const TaxonomyTree& t, int species_a, int species_b) {
  if (species_a < 0 || species_a >= t.n_leaves() || species_b < 0 || species_b >= t.n_leaves())
    throw std::out_of_range("unknown species label");
  const int la = t.leaf_of_species(species_a);
  const int lb = t.leaf_of_species(species_b);
  const int anc = t.lca(la, lb);
  return t.node(la).depth + t.node(lb).depth - 2 * t.node(anc).depth;
}

std::vector<int> path_to_root(const TaxonomyTree& t, int species_id) {
  if (species_id < 0 || species_id >= t.n_leaves())
    throw std::out_of_range("unknown species label");
  std::vector<int> path;
  for (int n = t.leaf_of_species(species_id); n >= 0; n = t.node(n).parent) path.push_back(n);
  return path;
}

LossMatrix LossMatrix::zero_one(int k) {
  std::vector<int> d(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 1);
  for (int i = 0; i < k; ++i) d[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(i)] = 0;
  return LossMatrix(k, std::move(d));
}

int LossMatrix::max_off_diagonal() const {
  int m = 0;
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      if (i != j) m = std::max(m, at(i, j));
  return m;
}

int LossMatrix::min_off_diagonal() const {
  int m = k_ > 1 ? at(0, 1) : 0;
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      if (i != j) m = std::min(m, at(i, j));
  return m;
}

void LossMatrix::validate() const {
  for (int i = 0; i < k_; ++i) {
    if (at(i, i) != 0) throw std::runtime_error("loss matrix diagonal must be zero");
    for (int j = 0; j < k_; ++j) {
      if (at(i, j) != at(j, i)) throw std::runtime_error("loss matrix must be symmetric");
      if (i != j && at(i, j) <= 0)
        throw std::runtime_error("loss matrix off-diagonal must be positive");
      for (int l = 0; l < k_; ++l)
        if (at(i, j) > at(i, l) + at(l, j))
          throw std::runtime_error("loss matrix violates the triangle inequality");
    }
  }
}

LossMatrix loss_matrix(const TaxonomyTree& t) {
  const int k = t.n_leaves();
  std::vector<int> d(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const int dist = tree_distance(t, i, j);
      d[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)] = dist;
      d[static_cast<std::size_t>(j) * static_cast<std::size_t>(k) + static_cast<std::size_t>(i)] = dist;
    }
  return LossMatrix(k, std::move(d));
}

Severity severity_category(int delta) {
  if (delta == 0) return Severity::correct;
  if (delta == 2) return Severity::within_genus;
  if (delta == 12) return Severity::distinct_gram;
  if (delta > 2 && delta < 12 && delta % 2 == 0) return Severity::within_gram;
  throw std::runtime_error("tree loss " + std::to_string(delta) +
                           " is not representable on the panel tree");
}

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::correct: return "correct";
    case Severity::within_genus: return "within_genus";
    case Severity::within_gram: return "within_gram";
    case Severity::distinct_gram: return "distinct_gram";
  }
  return "?";
}

}  // namespace specid
