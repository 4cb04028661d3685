#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "specid/spectra.hpp"

namespace specid {

// Row-compressed view of a set of spectra. Peak lists are sparse (typically
// 50-150 peaks out of 1300 bins), so the solvers iterate nonzeros only.
struct SparseMatrix {
  int n = 0;
  int p = 0;
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<double> sqnorm;  // per-row squared Euclidean norm

  static SparseMatrix from_rows(const std::vector<Spectrum>& spectra, std::span<const int> rows);
  static SparseMatrix from_all(const std::vector<Spectrum>& spectra);

  double dot_row(int r, const std::vector<double>& w) const {
    double s = 0.0;
    for (std::size_t k = offsets[static_cast<std::size_t>(r)]; k < offsets[static_cast<std::size_t>(r) + 1]; ++k)
      s += vals[k] * w[static_cast<std::size_t>(cols[k])];
    return s;
  }
  void add_row(int r, double scale, std::vector<double>& w) const {
    for (std::size_t k = offsets[static_cast<std::size_t>(r)]; k < offsets[static_cast<std::size_t>(r) + 1]; ++k)
      w[static_cast<std::size_t>(cols[k])] += scale * vals[k];
  }
};

struct BinaryTrainConfig {
  double C = 1.0;
  double tol = 1e-3;        // max |projected gradient| at convergence
  int max_iter = 100000;    // epochs over the dual coordinates
  double bias_scale = 1.0;  // augmented bias feature; 0 disables the bias
  std::uint64_t seed = 1;   // coordinate-visit permutation seed
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  bool degenerate = false;  // one-class training set; constant output
  bool converged = true;
  int epochs = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  std::vector<double> alpha;  // final dual coefficients (diagnostics only)
};

// L2-regularized L1-hinge binary SVM,
//   min_w 1/2 ||w||^2 + C sum_i max(0, 1 - y_i (w.x_i + b)),
// trained by dual coordinate descent with shrinking. The box 0 <= alpha <= C
// holds throughout; convergence is certified by a final full pass with the
// frozen weight vector. A one-class training set yields the constant
// classifier for that class with the degenerate flag set.
LinearModel train_binary(const SparseMatrix& x, std::span<const int> y,
                         const BinaryTrainConfig& cfg);

// Convenience overload over dense spectra.
LinearModel train_binary(const std::vector<Spectrum>& x, const std::vector<int>& y,
                         const BinaryTrainConfig& cfg);

// w.x + b. Throws on dimension mismatch.
double decision_value(const LinearModel& m, const Spectrum& x);

}  // namespace specid
