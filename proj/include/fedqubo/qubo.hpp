#pragma once

#include <cstdint>
#include <vector>

namespace fedqubo {

// Dense symmetric QUBO instance. Diagonal entries hold the linear terms;
// every off-diagonal mirror pair holds half of the pairwise coefficient, so
// the energy counts each unordered pair once as Q_ij + Q_ji.
class QuboMatrix {
 public:
  explicit QuboMatrix(int n);

  int size() const { return n_; }

  double at(int i, int j) const {
    return coeffs_[static_cast<std::size_t>(i) * n_ + j];
  }

  // Writes v into (i, j) and (j, i). Coefficients must be finite.
  void set(int i, int j, double v);

  // Stores total/2 in both mirrors so at(i,j) + at(j,i) == total.
  void set_pair(int i, int j, double total);

  double pair_coefficient(int i, int j) const { return at(i, j) + at(j, i); }

  double max_abs_coefficient() const;

  const double* row(int i) const {
    return coeffs_.data() + static_cast<std::size_t>(i) * n_;
  }

 private:
  int n_ = 0;
  std::vector<double> coeffs_;
};

// Binary assignment x, one entry in {0,1} per QUBO variable.
using BitVector = std::vector<std::uint8_t>;

// Annealing schedule. Non-positive initial_temperature or sweeps select the
// instance-adaptive defaults (max |coefficient| and 100*n respectively).
struct AnnealParams {
  double initial_temperature = 0.0;
  double final_temperature = 1e-3;
  int sweeps = 0;
  int restarts = 4;
  std::uint64_t seed = 0;
};

// x^T Q x under the symmetric-storage convention:
// sum_i Q_ii x_i + sum_{i<j} (Q_ij + Q_ji) x_i x_j.
double energy(const QuboMatrix& q, const BitVector& x);

// True when sum_i a_i 2^i < sum_i b_i 2^i. Used as the global tie-break.
bool lower_encoding(const BitVector& a, const BitVector& b);

inline constexpr int kExactSolverMaxN = 22;

// Exhaustive global minimizer; ties broken by lowest integer encoding.
BitVector solve_exact(const QuboMatrix& q);

// Single-flip Metropolis annealing with geometric cooling and restarts.
// Deterministic given (q, params).
BitVector solve_sa(const QuboMatrix& q, const AnnealParams& params);

}  // namespace fedqubo
