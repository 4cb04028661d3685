#include "specid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "specid/rng.hpp"

namespace specid {

int DecisionTree::walk(const Spectrum& x) const {
  int v = 0;
  while (nodes[static_cast<std::size_t>(v)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(v)];
    v = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(v)].leaf_class;
}

namespace {

struct TreeBuilder {
  const std::vector<double>& columns;  // p x n column-major feature matrix
  const std::vector<int>& labels;      // n local labels
  int n;
  int p;
  int k;
  int mtry;
  Rng& rng;
  DecisionTree& tree;

  std::vector<int> feature_perm;
  std::vector<std::pair<double, int>> sorted;  // (value, label) scratch
  std::vector<int> left_counts;

  double gini_sum(const std::vector<int>& counts, int total) const {
    // total^2 * (1 - gini) to stay in exact integer-like arithmetic
    double s = 0.0;
    for (int c : counts) s += static_cast<double>(c) * static_cast<double>(c);
    return total > 0 ? s / static_cast<double>(total) : 0.0;
  }

  int build(std::vector<int>& samples) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int s : samples) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(s)])];
    const int total = static_cast<int>(samples.size());
    int majority = 0;
    bool pure = false;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(majority)]) majority = c;
      if (counts[static_cast<std::size_t>(c)] == total) pure = true;
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -1.0;  // sum of child (count^2/total) terms, larger = better

    if (!pure && total >= 2) {
      // sample mtry distinct features
      for (int d = 0; d < mtry; ++d) {
        const int swap_with = d + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - d)));
        std::swap(feature_perm[static_cast<std::size_t>(d)], feature_perm[static_cast<std::size_t>(swap_with)]);
      }
      const double parent_score = gini_sum(counts, total);
      for (int d = 0; d < mtry; ++d) {
        const int f = feature_perm[static_cast<std::size_t>(d)];
        const double* col = columns.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(n);
        sorted.clear();
        for (int s : samples) sorted.emplace_back(col[s], labels[static_cast<std::size_t>(s)]);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (sorted.front().first == sorted.back().first) continue;

        std::fill(left_counts.begin(), left_counts.end(), 0);
        double left_sq = 0.0;
        double right_sq = 0.0;
        for (int c = 0; c < k; ++c)
          right_sq += static_cast<double>(counts[static_cast<std::size_t>(c)]) * counts[static_cast<std::size_t>(c)];

        for (int i = 0; i + 1 < total; ++i) {
          const int c = sorted[static_cast<std::size_t>(i)].second;
          const double lc = left_counts[static_cast<std::size_t>(c)];
          const double rc = counts[static_cast<std::size_t>(c)] - lc;
          left_sq += 2.0 * lc + 1.0;
          right_sq -= 2.0 * rc - 1.0;
          ++left_counts[static_cast<std::size_t>(c)];
          if (sorted[static_cast<std::size_t>(i)].first == sorted[static_cast<std::size_t>(i) + 1].first) continue;
          const int nl = i + 1;
          const int nr = total - nl;
          const double score = left_sq / nl + right_sq / nr;
          if (score > best_score + 1e-12 && score > parent_score + 1e-12) {
            best_score = score;
            best_feature = f;
            best_threshold =
                0.5 * (sorted[static_cast<std::size_t>(i)].first + sorted[static_cast<std::size_t>(i) + 1].first);
          }
        }
        std::fill(left_counts.begin(), left_counts.end(), 0);
      }
    }

    if (best_feature < 0) {
      auto& node = tree.nodes[static_cast<std::size_t>(id)];
      node.leaf_class = majority;
      node.counts = std::move(counts);
      return id;
    }

    std::vector<int> left, right;
    const double* col = columns.data() + static_cast<std::size_t>(best_feature) * static_cast<std::size_t>(n);
    for (int s : samples)
      (col[s] <= best_threshold ? left : right).push_back(s);
    samples.clear();
    samples.shrink_to_fit();

    const int li = build(left);
    const int ri = build(right);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = li;
    node.right = ri;
    return id;
  }
};

}  // namespace

ForestModel train_rf(const LabeledDataset& data, std::span<const int> rows, const RfConfig& cfg) {
  if (rows.empty()) throw std::invalid_argument("train_rf: empty training set");
  ForestModel m;
  m.p = data.p;
  m.k = data.species.size();
  m.seed = cfg.seed;
  m.mtry = cfg.mtry > 0 ? cfg.mtry
                        : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(data.p)))));
  m.species = data.species;

  const int n = static_cast<int>(rows.size());
  // column-major copy of the training block for fast per-feature gathers
  std::vector<double> columns(static_cast<std::size_t>(data.p) * static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = data.labels[static_cast<std::size_t>(rows[i])];
    const Spectrum& s = data.spectra[static_cast<std::size_t>(rows[i])];
    for (int j = 0; j < data.p; ++j)
      columns[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(j)];
  }

  m.oob_counts.assign(static_cast<std::size_t>(n), 0);
  m.trees.resize(static_cast<std::size_t>(cfg.n_trees));
  std::vector<char> in_bag(static_cast<std::size_t>(n));
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> sample(static_cast<std::size_t>(n));
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      sample[static_cast<std::size_t>(i)] = r;
      in_bag[static_cast<std::size_t>(r)] = 1;
    }
    for (int i = 0; i < n; ++i)
      if (!in_bag[static_cast<std::size_t>(i)]) ++m.oob_counts[static_cast<std::size_t>(i)];

    TreeBuilder builder{columns, labels, n, data.p, m.k, m.mtry, rng, m.trees[static_cast<std::size_t>(t)],
                        {},      {},     {}};
    builder.feature_perm.resize(static_cast<std::size_t>(data.p));
    std::iota(builder.feature_perm.begin(), builder.feature_perm.end(), 0);
    builder.left_counts.assign(static_cast<std::size_t>(m.k), 0);
    builder.build(sample);
  }
  return m;
}

std::vector<int> rf_votes(const ForestModel& m, const Spectrum& x) {
  if (static_cast<int>(x.size()) != m.p) throw std::invalid_argument("rf_votes: dimension mismatch");
  std::vector<int> votes(static_cast<std::size_t>(m.k), 0);
  for (const auto& t : m.trees) ++votes[static_cast<std::size_t>(t.walk(x))];
  return votes;
}

int predict_rf(const ForestModel& m, const Spectrum& x) {
  const auto votes = rf_votes(m, x);
  int best = 0;
  for (int c = 1; c < m.k; ++c)
    if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
  return best;
}

int predict_1nn(const LabeledDataset& data, std::span<const int> rows, const Spectrum& x) {
  if (rows.empty()) throw std::invalid_argument("predict_1nn: empty training set");
  if (static_cast<int>(x.size()) != data.p) throw std::invalid_argument("predict_1nn: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  int best_row = rows[0];
  for (int r : rows) {
    const Spectrum& s = data.spectra[static_cast<std::size_t>(r)];
    double d = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double diff = s[j] - x[j];
      d += diff * diff;
    }
    if (d < best) {
      best = d;
      best_row = r;
    }
  }
  return data.labels[static_cast<std::size_t>(best_row)];
}

CentroidModel train_centroid(const LabeledDataset& data, std::span<const int> rows) {
  if (rows.empty()) throw std::invalid_argument("train_centroid: empty training set");
  CentroidModel m;
  m.p = data.p;
  m.species = data.species;

  std::vector<std::vector<int>> rows_of_class(static_cast<std::size_t>(data.species.size()));
  for (int r : rows) rows_of_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])].push_back(r);

  std::vector<double> column;
  for (int c = 0; c < data.species.size(); ++c) {
    const auto& rc = rows_of_class[static_cast<std::size_t>(c)];
    if (rc.empty()) continue;
    Spectrum centroid(static_cast<std::size_t>(data.p));
    for (int j = 0; j < data.p; ++j) {
      column.clear();
      for (int r : rc) column.push_back(data.spectra[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]);
      std::sort(column.begin(), column.end());
      const std::size_t cn = column.size();
      centroid[static_cast<std::size_t>(j)] =
          cn % 2 ? column[cn / 2] : 0.5 * (column[cn / 2 - 1] + column[cn / 2]);
    }
    m.species_ids.push_back(c);
    m.centroids.push_back(std::move(centroid));
  }
  return m;
}

int predict_centroid(const CentroidModel& m, const Spectrum& x) {
  if (m.centroids.empty()) throw std::invalid_argument("predict_centroid: no centroids");
  if (static_cast<int>(x.size()) != m.p) throw std::invalid_argument("predict_centroid: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  int best_id = m.species_ids[0];
  for (std::size_t i = 0; i < m.centroids.size(); ++i) {
    const Spectrum& c = m.centroids[i];
    double d = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double diff = c[j] - x[j];
      d += diff * diff;
    }
    if (d < best) {
      best = d;
      best_id = m.species_ids[i];
    }
  }
  return best_id;
}

}  // namespace specid
