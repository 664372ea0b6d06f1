#pragma once

// Small sparse helpers shared by the stepper and the adjoint. Internal.

#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "bouss/error.hpp"
#include "bouss/forms.hpp"

namespace bouss::detail {

inline Eigen::VectorXd gather(const Eigen::VectorXd& full, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[idx[i]];
  return out;
}

inline void scatter_add(Eigen::VectorXd& full, const std::vector<int>& idx, const Eigen::VectorXd& v) {
  for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] += v[static_cast<Eigen::Index>(i)];
}

/// Accumulates shifted copies of sparse blocks into one matrix.
class BlockBuilder {
 public:
  BlockBuilder(Eigen::Index rows, Eigen::Index cols) : rows_(rows), cols_(cols) {}

  void add(const SparseMatrix& m, Eigen::Index r0, Eigen::Index c0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        entries_.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  }
  void add_transpose(const SparseMatrix& m, Eigen::Index r0, Eigen::Index c0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        entries_.emplace_back(r0 + it.col(), c0 + it.row(), it.value());
  }
  void add_identity(Eigen::Index start, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) entries_.emplace_back(start + i, start + i, 1.0);
  }
  SparseMatrix build() const {
    SparseMatrix m(rows_, cols_);
    m.setFromTriplets(entries_.begin(), entries_.end());
    return m;
  }

 private:
  Eigen::Index rows_, cols_;
  std::vector<Eigen::Triplet<double>> entries_;
};

/// Sparse LU solve with one step of iterative refinement when the relative
/// residual exceeds tol. Throws LinearSolveFailed.
inline Eigen::VectorXd solve_checked(const SparseMatrix& k, const Eigen::VectorXd& b, double tol,
                                     const char* what) {
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(k);
  lu.factorize(k);
  if (lu.info() != Eigen::Success) throw LinearSolveFailed(std::string(what) + ": factorization failed");
  Eigen::VectorXd x = lu.solve(b);
  const double bn = b.norm();
  Eigen::VectorXd r = b - k * x;
  if (r.norm() > tol * bn) {
    x += lu.solve(r);
    r = b - k * x;
  }
  if (!(r.norm() <= tol * bn))
    throw LinearSolveFailed(std::string(what) + ": residual " + std::to_string(r.norm() / bn) +
                            " above tolerance");
  return x;
}

}  // namespace bouss::detail
