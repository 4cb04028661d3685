#include "specid/composite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "specid/rng.hpp"

namespace specid {

OvaModel train_ova(const LabeledDataset& data, std::span<const int> rows,
                   const BinaryTrainConfig& cfg) {
  if (rows.empty()) throw std::invalid_argument("train_ova: empty training set");
  OvaModel m;
  m.p = data.p;
  m.species = data.species;
  const int k = data.species.size();
  const SparseMatrix sx = SparseMatrix::from_rows(data.spectra, rows);
  std::vector<int> y(rows.size());
  m.models.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      y[i] = data.labels[static_cast<std::size_t>(rows[i])] == c ? 1 : -1;
    BinaryTrainConfig sub = cfg;
    sub.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(c));
    m.models.push_back(train_binary(sx, y, sub));
  }
  return m;
}

int predict_ova(const OvaModel& m, const Spectrum& x) {
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(m.models.size()); ++c) {
    const double v = decision_value(m.models[static_cast<std::size_t>(c)], x);
    if (v > best_v) {
      best_v = v;
      best = c;
    }
  }
  return best;
}

int OvoModel::pair_index(int k, int a, int b) {
  // pairs (0,1), (0,2), ..., (0,k-1), (1,2), ...
  return a * k - a * (a + 1) / 2 + (b - a - 1);
}

OvoModel train_ovo(const LabeledDataset& data, std::span<const int> rows,
                   const BinaryTrainConfig& cfg) {
  if (rows.empty()) throw std::invalid_argument("train_ovo: empty training set");
  OvoModel m;
  m.p = data.p;
  m.k = data.species.size();
  m.species = data.species;
  m.models.resize(static_cast<std::size_t>(m.k) * static_cast<std::size_t>(m.k - 1) / 2);

  std::vector<std::vector<int>> rows_of_class(static_cast<std::size_t>(m.k));
  for (int r : rows) rows_of_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])].push_back(r);

  std::vector<int> pair_rows;
  std::vector<int> y;
  for (int a = 0; a < m.k; ++a) {
    for (int b = a + 1; b < m.k; ++b) {
      pair_rows.clear();
      y.clear();
      for (int r : rows_of_class[static_cast<std::size_t>(a)]) {
        pair_rows.push_back(r);
        y.push_back(1);
      }
      for (int r : rows_of_class[static_cast<std::size_t>(b)]) {
        pair_rows.push_back(r);
        y.push_back(-1);
      }
      const int idx = OvoModel::pair_index(m.k, a, b);
      BinaryTrainConfig sub = cfg;
      sub.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(idx));
      m.models[static_cast<std::size_t>(idx)] =
          train_binary(SparseMatrix::from_rows(data.spectra, pair_rows), y, sub);
    }
  }
  return m;
}

std::vector<int> ovo_votes(const OvoModel& m, const Spectrum& x) {
  std::vector<int> votes(static_cast<std::size_t>(m.k), 0);
  for (int a = 0; a < m.k; ++a)
    for (int b = a + 1; b < m.k; ++b) {
      const double v = decision_value(m.models[static_cast<std::size_t>(OvoModel::pair_index(m.k, a, b))], x);
      ++votes[static_cast<std::size_t>(v >= 0.0 ? a : b)];
    }
  return votes;
}

int predict_ovo(const OvoModel& m, const Spectrum& x) {
  std::vector<double> margin_sum(static_cast<std::size_t>(m.k), 0.0);
  std::vector<int> votes(static_cast<std::size_t>(m.k), 0);
  for (int a = 0; a < m.k; ++a)
    for (int b = a + 1; b < m.k; ++b) {
      const double v = decision_value(m.models[static_cast<std::size_t>(OvoModel::pair_index(m.k, a, b))], x);
      ++votes[static_cast<std::size_t>(v >= 0.0 ? a : b)];
      margin_sum[static_cast<std::size_t>(a)] += std::fabs(v);
      margin_sum[static_cast<std::size_t>(b)] += std::fabs(v);
    }
  int best = 0;
  for (int c = 1; c < m.k; ++c) {
    if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)] ||
        (votes[static_cast<std::size_t>(c)] == votes[static_cast<std::size_t>(best)] &&
         margin_sum[static_cast<std::size_t>(c)] > margin_sum[static_cast<std::size_t>(best)]))
      best = c;
  }
  return best;
}

CascadeModel train_cascade(const TaxonomyTree& tree, const LabeledDataset& data,
                           std::span<const int> rows, const BinaryTrainConfig& cfg) {
  if (rows.empty()) throw std::invalid_argument("train_cascade: empty training set");
  CascadeModel m;
  m.tree = tree;
  m.p = data.p;
  m.species = data.species;
  const int n_nodes = tree.n_nodes();
  m.model_of_node.assign(static_cast<std::size_t>(n_nodes), -1);
  m.species_of_leaf.assign(static_cast<std::size_t>(n_nodes), -1);

  // dataset species id for each leaf; every leaf must be a known species
  for (int v = 0; v < n_nodes; ++v) {
    if (!tree.node(v).is_leaf()) continue;
    const int sid = data.species.id_of(tree.node(v).name);
    if (sid < 0)
      throw std::runtime_error("train_cascade: tree leaf '" + tree.node(v).name +
                               "' is not a species of the dataset");
    m.species_of_leaf[static_cast<std::size_t>(v)] = sid;
  }

  // which child of an internal node leads to each species
  const int k = data.species.size();
  std::vector<std::vector<int>> child_of(static_cast<std::size_t>(n_nodes));
  for (int v = 0; v < n_nodes; ++v)
    if (!tree.node(v).is_leaf()) child_of[static_cast<std::size_t>(v)].assign(static_cast<std::size_t>(k), -1);
  for (int leaf = 0; leaf < n_nodes; ++leaf) {
    const int sid = m.species_of_leaf[static_cast<std::size_t>(leaf)];
    if (sid < 0) continue;
    int child = leaf;
    for (int up = tree.node(leaf).parent; up >= 0; child = up, up = tree.node(up).parent) {
      const auto& kids = tree.node(up).children;
      const int ci = static_cast<int>(std::find(kids.begin(), kids.end(), child) - kids.begin());
      child_of[static_cast<std::size_t>(up)][static_cast<std::size_t>(sid)] = ci;
    }
  }

  std::vector<int> node_rows;
  std::vector<int> y;
  for (int v = 0; v < n_nodes; ++v) {
    if (tree.node(v).is_leaf()) continue;
    const auto& kids = tree.node(v).children;
    CascadeModel::NodeModel nm;
    nm.node = v;
    nm.children = kids;
    nm.reachable.assign(kids.size(), 0);

    node_rows.clear();
    std::vector<int> child_idx;  // per node row, the child it belongs to
    for (int r : rows) {
      const int ci = child_of[static_cast<std::size_t>(v)][static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])];
      if (ci < 0) continue;
      node_rows.push_back(r);
      child_idx.push_back(ci);
      nm.reachable[static_cast<std::size_t>(ci)] = 1;
    }

    const int n_reachable = static_cast<int>(std::count(nm.reachable.begin(), nm.reachable.end(), 1));
    if (kids.size() >= 2 && n_reachable >= 2 && !node_rows.empty()) {
      const SparseMatrix sx = SparseMatrix::from_rows(data.spectra, node_rows);
      if (kids.size() == 2) {
        y.resize(node_rows.size());
        for (std::size_t i = 0; i < node_rows.size(); ++i) y[i] = child_idx[i] == 0 ? 1 : -1;
        BinaryTrainConfig sub = cfg;
        sub.seed = mix_seed(cfg.seed, 0);
        nm.models.push_back(train_binary(sx, y, sub));
      } else {
        y.resize(node_rows.size());
        for (std::size_t c = 0; c < kids.size(); ++c) {
          for (std::size_t i = 0; i < node_rows.size(); ++i)
            y[i] = child_idx[i] == static_cast<int>(c) ? 1 : -1;
          BinaryTrainConfig sub = cfg;
          sub.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(c));
          nm.models.push_back(train_binary(sx, y, sub));
        }
      }
    }
    // single child, a single reachable child or no data: passthrough, no model

    m.model_of_node[static_cast<std::size_t>(v)] = static_cast<int>(m.node_models.size());
    m.node_models.push_back(std::move(nm));
  }
  return m;
}

int predict_cascade(const CascadeModel& m, const Spectrum& x) {
  int node = m.tree.root();
  while (!m.tree.node(node).is_leaf()) {
    const auto& nm = m.node_models[static_cast<std::size_t>(m.model_of_node[static_cast<std::size_t>(node)])];
    int chosen = 0;
    if (nm.models.size() == 1) {
      const double v = decision_value(nm.models[0], x);
      chosen = v >= 0.0 ? 0 : 1;
      if (!nm.reachable[static_cast<std::size_t>(chosen)] && nm.reachable[static_cast<std::size_t>(1 - chosen)])
        chosen = 1 - chosen;
    } else if (nm.models.size() > 1) {
      double best = -std::numeric_limits<double>::infinity();
      int best_c = -1;
      for (std::size_t c = 0; c < nm.models.size(); ++c) {
        if (!nm.reachable[c]) continue;
        const double v = decision_value(nm.models[c], x);
        if (v > best) {
          best = v;
          best_c = static_cast<int>(c);
        }
      }
      chosen = best_c >= 0 ? best_c : 0;
    } else {
      // passthrough: the unique reachable child, else the first child
      chosen = 0;
      for (std::size_t c = 0; c < nm.children.size(); ++c)
        if (nm.reachable[c]) {
          chosen = static_cast<int>(c);
          break;
        }
    }
    node = nm.children[static_cast<std::size_t>(chosen)];
  }
  return m.species_of_leaf[static_cast<std::size_t>(node)];
}

TaxonomyTree build_dendrogram(const LabeledDataset& data, std::span<const int> rows) {
  // per-species prototypes: coordinate-wise medians (even counts average the
  // two middle order statistics)
  const int k = data.species.size();
  std::vector<std::vector<int>> rows_of_class(static_cast<std::size_t>(k));
  for (int r : rows) rows_of_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])].push_back(r);

  std::vector<int> present;
  for (int c = 0; c < k; ++c)
    if (!rows_of_class[static_cast<std::size_t>(c)].empty()) present.push_back(c);
  if (present.size() < 2) throw std::invalid_argument("build_dendrogram: need at least two species");

  std::vector<Spectrum> proto;
  std::vector<double> column;
  for (int c : present) {
    const auto& rc = rows_of_class[static_cast<std::size_t>(c)];
    Spectrum med(static_cast<std::size_t>(data.p));
    for (int j = 0; j < data.p; ++j) {
      column.clear();
      for (int r : rc) column.push_back(data.spectra[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]);
      std::sort(column.begin(), column.end());
      const std::size_t n = column.size();
      med[static_cast<std::size_t>(j)] =
          n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    proto.push_back(std::move(med));
  }

  const int n0 = static_cast<int>(present.size());
  auto euclid = [&](const Spectrum& a, const Spectrum& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double d = a[j] - b[j];
      s += d * d;
    }
    return std::sqrt(s);
  };

  // clusters are numbered by creation order: leaves 0..n0-1, merges onward
  const int total = 2 * n0 - 1;
  std::vector<std::string> fragment(static_cast<std::size_t>(total));
  std::vector<char> active(static_cast<std::size_t>(total), 0);
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(total));
  for (auto& row : dist) row.assign(static_cast<std::size_t>(total), 0.0);

  for (int i = 0; i < n0; ++i) {
    fragment[static_cast<std::size_t>(i)] = data.species.code_of(present[static_cast<std::size_t>(i)]);
    active[static_cast<std::size_t>(i)] = 1;
  }
  for (int i = 0; i < n0; ++i)
    for (int j = i + 1; j < n0; ++j)
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
          euclid(proto[static_cast<std::size_t>(i)], proto[static_cast<std::size_t>(j)]);

  for (int next = n0; next < total; ++next) {
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < next; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < next; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] < best) {
          best = dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          bi = i;
          bj = j;
        }
      }
    }
    active[static_cast<std::size_t>(bi)] = active[static_cast<std::size_t>(bj)] = 0;
    active[static_cast<std::size_t>(next)] = 1;
    fragment[static_cast<std::size_t>(next)] =
        "(" + fragment[static_cast<std::size_t>(bi)] + "," + fragment[static_cast<std::size_t>(bj)] + ")";
    for (int i = 0; i < next; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      const double d = std::max(dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(bi)],
                                dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(bj)]);
      dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(next)] = d;
      dist[static_cast<std::size_t>(next)][static_cast<std::size_t>(i)] = d;
    }
  }

  return parse_tree(fragment[static_cast<std::size_t>(total - 1)] + ";");
}

}  // namespace specid
