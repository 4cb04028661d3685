#include "specid/struct_svm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace specid {

JointFeatureMap JointFeatureMap::class_indicator(int n_classes, int p) {
  JointFeatureMap m;
  m.kind = FeatureMapKind::class_indicator;
  m.p = p;
  m.n_classes = n_classes;
  m.n_blocks = n_classes;
  m.blocks_of_class.resize(static_cast<std::size_t>(n_classes));
  for (int y = 0; y < n_classes; ++y) m.blocks_of_class[static_cast<std::size_t>(y)] = {y};
  return m;
}

JointFeatureMap JointFeatureMap::tree_path(const TaxonomyTree& tree, int p) {
  JointFeatureMap m;
  m.kind = FeatureMapKind::tree_path;
  m.p = p;
  m.n_classes = tree.n_leaves();
  m.n_blocks = tree.n_nodes();
  m.tree_hash = tree.hash();
  m.blocks_of_class.resize(static_cast<std::size_t>(m.n_classes));
  for (int y = 0; y < m.n_classes; ++y) {
    auto path = path_to_root(tree, y);
    std::sort(path.begin(), path.end());
    m.blocks_of_class[static_cast<std::size_t>(y)] = std::move(path);
  }
  return m;
}

std::vector<double> joint_feature(const JointFeatureMap& map, const Spectrum& x, int y) {
  if (static_cast<int>(x.size()) != map.p) throw std::invalid_argument("joint_feature: dimension mismatch");
  if (y < 0 || y >= map.n_classes) throw std::out_of_range("joint_feature: unknown label");
  std::vector<double> out(map.joint_dim(), 0.0);
  for (int b : map.blocks_of_class[static_cast<std::size_t>(y)])
    std::copy(x.begin(), x.end(), out.begin() + static_cast<std::ptrdiff_t>(b) * map.p);
  return out;
}

std::vector<double> StructuredModel::block_weights(int block) const {
  std::vector<double> out(static_cast<std::size_t>(map.p));
  for (int j = 0; j < map.p; ++j)
    out[static_cast<std::size_t>(j)] = weights[static_cast<std::size_t>(j) * static_cast<std::size_t>(map.n_blocks) + static_cast<std::size_t>(block)];
  return out;
}

std::vector<double> scores_all(const StructuredModel& m, const Spectrum& x) {
  if (static_cast<int>(x.size()) != m.map.p) throw std::invalid_argument("scores_all: dimension mismatch");
  const int nb = m.map.n_blocks;
  std::vector<double> act(static_cast<std::size_t>(nb), 0.0);
  for (int j = 0; j < m.map.p; ++j) {
    const double v = x[static_cast<std::size_t>(j)];
    if (v == 0.0) continue;
    const double* wr = m.weights.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(nb);
    for (int b = 0; b < nb; ++b) act[static_cast<std::size_t>(b)] += v * wr[b];
  }
  std::vector<double> s(static_cast<std::size_t>(m.map.n_classes), 0.0);
  for (int y = 0; y < m.map.n_classes; ++y) {
    double t = 0.0;
    for (int b : m.map.blocks_of_class[static_cast<std::size_t>(y)]) t += act[static_cast<std::size_t>(b)];
    s[static_cast<std::size_t>(y)] = t;
  }
  return s;
}

double score(const StructuredModel& m, const Spectrum& x, int y) {
  if (y < 0 || y >= m.map.n_classes) throw std::out_of_range("score: unknown label");
  if (static_cast<int>(x.size()) != m.map.p) throw std::invalid_argument("score: dimension mismatch");
  const int nb = m.map.n_blocks;
  double s = 0.0;
  for (int b : m.map.blocks_of_class[static_cast<std::size_t>(y)])
    for (int j = 0; j < m.map.p; ++j)
      s += x[static_cast<std::size_t>(j)] * m.weights[static_cast<std::size_t>(j) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)];
  return s;
}

int predict(const StructuredModel& m, const Spectrum& x) {
  const auto s = scores_all(m, x);
  int best = 0;
  for (int y = 1; y < static_cast<int>(s.size()); ++y)
    if (s[static_cast<std::size_t>(y)] > s[static_cast<std::size_t>(best)]) best = y;
  return best;
}

namespace {

inline double violation_value(Rescaling r, double loss, double margin_diff) {
  return r == Rescaling::slack ? loss * (1.0 + margin_diff) : loss + margin_diff;
}

}  // namespace

std::pair<int, double> separation_oracle(const StructuredModel& m, const Spectrum& x, int y_true,
                                         const StructTrainConfig& cfg) {
  const auto s = scores_all(m, x);
  const double s_true = s[static_cast<std::size_t>(y_true)];
  int best = -1;
  double best_h = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < m.map.n_classes; ++y) {
    if (y == y_true) continue;
    const double h = violation_value(cfg.rescaling, cfg.loss.at(y_true, y), s[static_cast<std::size_t>(y)] - s_true);
    if (h > best_h) {
      best_h = h;
      best = y;
    }
  }
  if (best < 0) throw std::invalid_argument("separation_oracle: need at least two classes");
  return {best, best_h};
}

namespace {

struct Cut {
  std::vector<double> g;  // feature-major joint vector
  double b = 0.0;
  double alpha = 0.0;
  int inactive = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// maximize  sum_t alpha_t b_t - 1/2 || sum_t alpha_t g_t ||^2
// s.t. alpha >= 0, sum_t alpha_t <= C.
// SMO-style pairwise ascent; the slack of the sum constraint is carried as a
// phantom coordinate with a zero cut, turning the feasible set into a simplex.
void solve_restricted_dual(std::vector<Cut>& cuts, const std::vector<std::vector<double>>& gram,
                           double c, double tol, long max_steps) {
  const int t = static_cast<int>(cuts.size());
  std::vector<double> r(static_cast<std::size_t>(t), 0.0);  // r_t = (sum alpha g) . g_t
  double used = 0.0;
  for (int i = 0; i < t; ++i) {
    used += cuts[static_cast<std::size_t>(i)].alpha;
    for (int j = 0; j < t; ++j)
      r[static_cast<std::size_t>(i)] += cuts[static_cast<std::size_t>(j)].alpha * gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  double phantom = std::max(0.0, c - used);

  auto grad = [&](int i) { return i < 0 ? 0.0 : cuts[static_cast<std::size_t>(i)].b - r[static_cast<std::size_t>(i)]; };
  auto alpha_of = [&](int i) -> double& { return i < 0 ? phantom : cuts[static_cast<std::size_t>(i)].alpha; };

  for (long step = 0; step < max_steps; ++step) {
    int up = -1;
    double gmax = 0.0;  // phantom gradient
    for (int i = 0; i < t; ++i)
      if (grad(i) > gmax) {
        gmax = grad(i);
        up = i;
      }
    int down = phantom > 0.0 ? -1 : -2;
    double gmin = phantom > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    for (int i = 0; i < t; ++i)
      if (cuts[static_cast<std::size_t>(i)].alpha > 0.0 && grad(i) < gmin) {
        gmin = grad(i);
        down = i;
      }
    if (down == -2 || up == down || gmax - gmin <= tol) break;

    const auto gij = [&](int i, int j) {
      if (i < 0 || j < 0) return 0.0;
      return gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    };
    const double eta = gij(up, up) + gij(down, down) - 2.0 * gij(up, down);
    double delta = eta > 0.0 ? (gmax - gmin) / eta : std::numeric_limits<double>::infinity();
    delta = std::min(delta, alpha_of(down));
    if (!(delta > 0.0)) break;

    alpha_of(up) += delta;
    alpha_of(down) -= delta;
    for (int i = 0; i < t; ++i)
      r[static_cast<std::size_t>(i)] += delta * (gij(i, up) - gij(i, down));
  }
}

}  // namespace

StructuredModel train_one_slack(const std::vector<Spectrum>& x, const std::vector<int>& labels,
                                const SpeciesTable& species, const JointFeatureMap& map,
                                const StructTrainConfig& cfg) {
  const int n = static_cast<int>(x.size());
  if (n == 0 || labels.size() != x.size())
    throw std::invalid_argument("train_one_slack: need a nonempty dataset with labels");
  if (cfg.loss.size() != map.n_classes)
    throw std::invalid_argument("train_one_slack: loss matrix size does not match the class count");
  if (cfg.epsilon <= 0.0 || cfg.C <= 0.0)
    throw std::invalid_argument("train_one_slack: C and epsilon must be positive");
  for (int y : labels)
    if (y < 0 || y >= map.n_classes) throw std::out_of_range("train_one_slack: label out of range");

  std::vector<int> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  const SparseMatrix sx = SparseMatrix::from_rows(x, all);

  const int nb = map.n_blocks;
  const int k = map.n_classes;
  const std::size_t dim = map.joint_dim();

  StructuredModel m;
  m.map = map;
  m.species = species;
  m.weights.assign(dim, 0.0);
  std::vector<double>& w = m.weights;

  // per ordered class pair: blocks gained / lost when swapping true -> wrong
  std::vector<std::vector<int>> plus(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
  std::vector<std::vector<int>> minus(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      const auto& ba = map.blocks_of_class[static_cast<std::size_t>(a)];
      const auto& bb = map.blocks_of_class[static_cast<std::size_t>(b)];
      auto& pl = plus[static_cast<std::size_t>(a) * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)];
      auto& mi = minus[static_cast<std::size_t>(a) * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)];
      std::set_difference(ba.begin(), ba.end(), bb.begin(), bb.end(), std::back_inserter(pl));
      std::set_difference(bb.begin(), bb.end(), ba.begin(), ba.end(), std::back_inserter(mi));
    }

  std::vector<Cut> cuts;
  std::vector<std::vector<double>> gram;
  std::vector<double> act(static_cast<std::size_t>(nb));
  std::vector<double> scores(static_cast<std::size_t>(k));
  std::vector<double> gacc(dim);

  const double inv_n = 1.0 / static_cast<double>(n);
  bool converged = false;
  double xi = 0.0, viol = 0.0;

  while (m.n_cuts < cfg.max_cuts) {
    // most violated joint constraint under the current weights
    std::fill(gacc.begin(), gacc.end(), 0.0);
    double bacc = 0.0, vsum = 0.0;
    for (int i = 0; i < n; ++i) {
      std::fill(act.begin(), act.end(), 0.0);
      for (std::size_t e = sx.offsets[static_cast<std::size_t>(i)]; e < sx.offsets[static_cast<std::size_t>(i) + 1]; ++e) {
        const double v = sx.vals[e];
        const double* wr = w.data() + static_cast<std::size_t>(sx.cols[e]) * static_cast<std::size_t>(nb);
        for (int b = 0; b < nb; ++b) act[static_cast<std::size_t>(b)] += v * wr[b];
      }
      for (int y = 0; y < k; ++y) {
        double t = 0.0;
        for (int b : map.blocks_of_class[static_cast<std::size_t>(y)]) t += act[static_cast<std::size_t>(b)];
        scores[static_cast<std::size_t>(y)] = t;
      }
      const int yt = labels[static_cast<std::size_t>(i)];
      const double st = scores[static_cast<std::size_t>(yt)];
      int yhat = -1;
      double hbest = 0.0;  // the y_true labeling contributes zero violation
      for (int y = 0; y < k; ++y) {
        if (y == yt) continue;
        const double h = violation_value(cfg.rescaling, cfg.loss.at(yt, y), scores[static_cast<std::size_t>(y)] - st);
        if (h > hbest) {
          hbest = h;
          yhat = y;
        }
      }
      if (yhat < 0) continue;

      const double loss = cfg.loss.at(yt, yhat);
      const double lambda = cfg.rescaling == Rescaling::slack ? loss : 1.0;
      const auto& pl = plus[static_cast<std::size_t>(yt) * static_cast<std::size_t>(k) + static_cast<std::size_t>(yhat)];
      const auto& mi = minus[static_cast<std::size_t>(yt) * static_cast<std::size_t>(k) + static_cast<std::size_t>(yhat)];
      for (std::size_t e = sx.offsets[static_cast<std::size_t>(i)]; e < sx.offsets[static_cast<std::size_t>(i) + 1]; ++e) {
        const double lv = lambda * sx.vals[e];
        double* gr = gacc.data() + static_cast<std::size_t>(sx.cols[e]) * static_cast<std::size_t>(nb);
        for (int b : pl) gr[b] += lv;
        for (int b : mi) gr[b] -= lv;
      }
      bacc += loss;
      vsum += hbest;
    }
    viol = vsum * inv_n;

    // current slack of the working set
    xi = 0.0;
    for (const Cut& cut : cuts) xi = std::max(xi, cut.b - dot(w, cut.g));

    if (viol <= xi + cfg.epsilon) {
      converged = true;
      break;
    }

    Cut cut;
    cut.g.assign(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) cut.g[d] = gacc[d] * inv_n;
    cut.b = bacc * inv_n;
    cuts.push_back(std::move(cut));
    ++m.n_cuts;

    gram.emplace_back(cuts.size(), 0.0);
    for (std::size_t t = 0; t + 1 < cuts.size(); ++t) {
      const double gv = dot(cuts[t].g, cuts.back().g);
      gram.back()[t] = gv;
      gram[t].push_back(gv);
    }
    gram.back().back() = dot(cuts.back().g, cuts.back().g);

    solve_restricted_dual(cuts, gram, cfg.C, cfg.qp_tol, 2000L * static_cast<long>(cuts.size()) + 10000L);

    std::fill(w.begin(), w.end(), 0.0);
    for (const Cut& c : cuts)
      if (c.alpha != 0.0)
        for (std::size_t d = 0; d < dim; ++d) w[d] += c.alpha * c.g[d];

    double obj = -0.5 * dot(w, w);
    for (const Cut& c : cuts) obj += c.alpha * c.b;
    assert(m.dual_objective_curve.empty() ||
           obj >= m.dual_objective_curve.back() - 1e-7 * std::max(1.0, std::fabs(obj)));
    m.dual_objective_curve.push_back(obj);

    // drop cuts that stayed inactive for prune_after consecutive solves
    bool removed = false;
    for (auto& c : cuts) c.inactive = c.alpha < 1e-12 ? c.inactive + 1 : 0;
    for (std::size_t t = cuts.size(); t-- > 0;) {
      if (cuts[t].inactive >= cfg.prune_after) {
        cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(t));
        gram.erase(gram.begin() + static_cast<std::ptrdiff_t>(t));
        for (auto& row : gram) row.erase(row.begin() + static_cast<std::ptrdiff_t>(t));
        removed = true;
      }
    }
    if (removed) {
      std::fill(w.begin(), w.end(), 0.0);
      for (const Cut& c : cuts)
        if (c.alpha != 0.0)
          for (std::size_t d = 0; d < dim; ++d) w[d] += c.alpha * c.g[d];
    }
  }

  m.converged = converged;
  m.slack = xi;
  m.final_gap = viol - xi;
  return m;
}

StructuredModel train_one_slack(const LabeledDataset& data, std::span<const int> rows,
                                const JointFeatureMap& map, const StructTrainConfig& cfg) {
  std::vector<Spectrum> x;
  std::vector<int> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (int r : rows) {
    x.push_back(data.spectra[static_cast<std::size_t>(r)]);
    y.push_back(data.labels[static_cast<std::size_t>(r)]);
  }
  return train_one_slack(x, y, data.species, map, cfg);
}

}  // namespace specid
