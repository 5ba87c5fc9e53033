/**
 * @file   linear_solver.hpp
 *
 * @brief  Sparse direct solves. Symmetric systems go through a simplicial
 *         LDL^T factorization whose symbolic analysis is reused while the
 *         sparsity pattern stays fixed; anything else falls back to
 *         supernodal LU.
 */
#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "pfls/fe.hpp"

namespace pfls {

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool is_symmetric(const SparseMatrix& a) {
  if (a.rows() != a.cols()) return false;
  const SparseMatrix diff = a - SparseMatrix(a.transpose());
  if (diff.nonZeros() == 0) return true;
  const double scale = a.nonZeros() ? a.coeffs().cwiseAbs().maxCoeff() : 0.0;
  return diff.coeffs().cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, scale);
}

inline void check_solution(const Vector& x) {
  if (!x.allFinite()) throw SingularSystemError("direct solve produced non-finite values");
}

}  // namespace detail

class DirectSolver {
 public:
  Vector solve(const SparseMatrix& a, const Vector& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) throw std::invalid_argument("direct solve: dimension mismatch");
    if (a.rows() == 0) return Vector();
    if (detail::is_symmetric(a)) {
      if (!pattern_matches(a)) {
        ldlt_.analyzePattern(a);
        pattern_rows_ = a.rows();
        pattern_nnz_ = a.nonZeros();
      }
      ldlt_.factorize(a);
      if (ldlt_.info() == Eigen::Success && (ldlt_.vectorD().array() != 0.0).all()) {
        Vector x = ldlt_.solve(b);
        if (x.allFinite()) return x;
      }
    }
    return solve_lu(a, b);
  }

 private:
  bool pattern_matches(const SparseMatrix& a) const {
    return pattern_rows_ == a.rows() && pattern_nnz_ == a.nonZeros();
  }

  static Vector solve_lu(const SparseMatrix& a, const Vector& b) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    SparseMatrix compressed = a;
    compressed.makeCompressed();
    lu.analyzePattern(compressed);
    lu.factorize(compressed);
    if (lu.info() != Eigen::Success) throw SingularSystemError("sparse LU failed: " + lu.lastErrorMessage());
    Vector x = lu.solve(b);
    detail::check_solution(x);
    return x;
  }

  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Eigen::Index pattern_rows_ = -1;
  Eigen::Index pattern_nnz_ = -1;
};

inline Vector sparse_direct_solve(const SparseMatrix& a, const Vector& b) {
  DirectSolver solver;
  return solver.solve(a, b);
}

}  // namespace pfls
