#include "specid/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "specid/rng.hpp"

namespace specid {

SparseMatrix SparseMatrix::from_rows(const std::vector<Spectrum>& spectra,
                                     std::span<const int> rows) {
  SparseMatrix m;
  m.n = static_cast<int>(rows.size());
  m.p = spectra.empty() ? 0 : static_cast<int>(spectra[0].size());
  m.offsets.reserve(rows.size() + 1);
  m.offsets.push_back(0);
  for (int r : rows) {
    const Spectrum& s = spectra[static_cast<std::size_t>(r)];
    double sq = 0.0;
    for (int j = 0; j < static_cast<int>(s.size()); ++j) {
      const double v = s[static_cast<std::size_t>(j)];
      if (v != 0.0) {
        m.cols.push_back(j);
        m.vals.push_back(v);
        sq += v * v;
      }
    }
    m.offsets.push_back(m.cols.size());
    m.sqnorm.push_back(sq);
  }
  return m;
}

SparseMatrix SparseMatrix::from_all(const std::vector<Spectrum>& spectra) {
  std::vector<int> rows(spectra.size());
  std::iota(rows.begin(), rows.end(), 0);
  return from_rows(spectra, rows);
}

namespace {

// Projected gradient of dual coordinate i at the box [0, C].
inline double projected_gradient(double g, double alpha, double c) {
  if (alpha <= 0.0) return std::min(g, 0.0);
  if (alpha >= c) return std::max(g, 0.0);
  return g;
}

}  // namespace

LinearModel train_binary(const SparseMatrix& x, std::span<const int> y,
                         const BinaryTrainConfig& cfg) {
  const int n = x.n;
  if (n <= 0 || static_cast<int>(y.size()) != n)
    throw std::invalid_argument("train_binary: need at least one example and |X| == |y|");
  if (cfg.C <= 0.0 || cfg.tol <= 0.0) throw std::invalid_argument("train_binary: C and tol must be positive");
  for (int v : y)
    if (v != 1 && v != -1) throw std::invalid_argument("train_binary: labels must be +1/-1");

  LinearModel m;
  m.weights.assign(static_cast<std::size_t>(x.p), 0.0);

  const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
  if (!has_pos || !has_neg) {
    m.degenerate = true;
    m.bias = has_pos ? 1.0 : -1.0;
    return m;
  }

  const double c = cfg.C;
  const double bs = cfg.bias_scale;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double>& w = m.weights;
  double wbias = 0.0;  // weight of the augmented bias feature

  std::vector<double> qii(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) qii[static_cast<std::size_t>(i)] = x.sqnorm[static_cast<std::size_t>(i)] + bs * bs;

  auto gradient = [&](int i) {
    return static_cast<double>(y[static_cast<std::size_t>(i)]) * (x.dot_row(i, w) + wbias * bs) - 1.0;
  };

  std::vector<int> index(static_cast<std::size_t>(n));
  std::iota(index.begin(), index.end(), 0);
  int active = n;
  const double inf = std::numeric_limits<double>::infinity();
  double pgmax_old = inf, pgmin_old = -inf;
  Rng rng(cfg.seed);

  int epoch = 0;
  bool converged = false;
  while (epoch < cfg.max_iter) {
    double pgmax = -inf, pgmin = inf;
    // permute the active prefix
    for (int s = active; s > 1; --s)
      std::swap(index[static_cast<std::size_t>(s - 1)], index[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(s)))]);

    for (int s = 0; s < active; ++s) {
      const int i = index[static_cast<std::size_t>(s)];
      const double g = gradient(i);
      const double a = alpha[static_cast<std::size_t>(i)];

      double pg = 0.0;
      if (a == 0.0) {
        if (g > pgmax_old) {  // shrink: stuck at the lower bound
          --active;
          std::swap(index[static_cast<std::size_t>(s)], index[static_cast<std::size_t>(active)]);
          --s;
          continue;
        }
        if (g < 0.0) pg = g;
      } else if (a == c) {
        if (g < pgmin_old) {  // shrink: stuck at the upper bound
          --active;
          std::swap(index[static_cast<std::size_t>(s)], index[static_cast<std::size_t>(active)]);
          --s;
          continue;
        }
        if (g > 0.0) pg = g;
      } else {
        pg = g;
      }
      pgmax = std::max(pgmax, pg);
      pgmin = std::min(pgmin, pg);

      if (std::fabs(pg) > 1e-12) {
        const double a_new = std::min(std::max(a - g / qii[static_cast<std::size_t>(i)], 0.0), c);
        alpha[static_cast<std::size_t>(i)] = a_new;
        const double d = (a_new - a) * static_cast<double>(y[static_cast<std::size_t>(i)]);
        if (d != 0.0) {
          x.add_row(i, d, w);
          wbias += d * bs;
        }
      }
    }
    ++epoch;

    const double viol = std::max({pgmax == -inf ? 0.0 : pgmax, pgmin == inf ? 0.0 : -pgmin, 0.0});
    if (viol <= cfg.tol) {
      if (active < n) {  // re-examine the shrunk coordinates
        active = n;
        pgmax_old = inf;
        pgmin_old = -inf;
        continue;
      }
      // certify against the frozen weights: the in-epoch gradients are stale
      double exact = 0.0;
      for (int i = 0; i < n; ++i)
        exact = std::max(exact, std::fabs(projected_gradient(gradient(i), alpha[static_cast<std::size_t>(i)], c)));
      if (exact <= cfg.tol) {
        converged = true;
        break;
      }
      pgmax_old = inf;
      pgmin_old = -inf;
      continue;
    }
    pgmax_old = pgmax <= 0.0 ? inf : pgmax;
    pgmin_old = pgmin >= 0.0 ? -inf : pgmin;
  }

  m.converged = converged;
  m.epochs = epoch;
  m.bias = wbias * bs;

  double wsq = wbias * wbias;
  for (double v : w) wsq += v * v;
  double hinge = 0.0, asum = 0.0;
  for (int i = 0; i < n; ++i) {
    hinge += std::max(0.0, -gradient(i));  // -g = 1 - y f
    asum += alpha[static_cast<std::size_t>(i)];
  }
  m.primal_objective = 0.5 * wsq + c * hinge;
  m.dual_objective = asum - 0.5 * wsq;
  m.duality_gap = m.primal_objective - m.dual_objective;
  m.alpha = std::move(alpha);
  return m;
}

LinearModel train_binary(const std::vector<Spectrum>& x, const std::vector<int>& y,
                         const BinaryTrainConfig& cfg) {
  return train_binary(SparseMatrix::from_all(x), y, cfg);
}

double decision_value(const LinearModel& m, const Spectrum& x) {
  if (x.size() != m.weights.size())
    throw std::invalid_argument("decision_value: dimension mismatch");
  double s = m.bias;
  for (std::size_t j = 0; j < x.size(); ++j) s += m.weights[j] * x[j];
  return s;
}

}  // namespace specid
