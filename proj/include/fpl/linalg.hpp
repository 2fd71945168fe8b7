#pragma once

// Small dense helpers shared across modules. Everything here is generic in the
// Eigen scalar type.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fpl/common.hpp"

namespace fpl {

template <typename Derived>
typename Derived::RealScalar hermitian_defect(const Eigen::MatrixBase<Derived>& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& a, double tol) {
  return a.rows() == a.cols() && (a.rows() == 0 || hermitian_defect(a) <= tol);
}

/// Hermitian and idempotent up to `tol` in max-norm.
template <typename Derived>
bool is_orthogonal_projector(const Eigen::MatrixBase<Derived>& p, double tol) {
  if (p.rows() != p.cols()) return false;
  if (p.rows() == 0) return true;
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  M pe = p;
  return hermitian_defect(pe) <= tol && (pe * pe - pe).cwiseAbs().maxCoeff() <= tol;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> submatrix(
    const Eigen::MatrixBase<Derived>& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

/// Determinant of the minor with the given rows and columns (1 for the empty minor).
template <typename Derived>
typename Derived::Scalar minor_det(const Eigen::MatrixBase<Derived>& a, const std::vector<int>& rows,
                                   const std::vector<int>& cols) {
  if (rows.size() != cols.size()) fail(Errc::DimensionMismatch, "minor must be square");
  if (rows.empty()) return typename Derived::Scalar(1);
  auto m = submatrix(a, rows, cols);
  if (m.rows() <= 4) return m.determinant();
  return m.partialPivLu().determinant();
}

template <typename Derived>
typename Derived::Scalar det(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 0) return typename Derived::Scalar(1);
  if (a.rows() <= 4) return a.determinant();
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return Eigen::PartialPivLU<M>(a).determinant();
}

/// (-1)^(i_1+...+i_g + g(g+1)/2) with the i_k counted from 1. Takes 0-based indices.
inline int multi_index_sign(const std::vector<int>& zero_based) {
  long g = static_cast<long>(zero_based.size());
  long s = g + g * (g + 1) / 2;
  for (int i : zero_based) s += i;
  return (s % 2 == 0) ? 1 : -1;
}

/// Complement of `idx` in {0, ..., n-1}, ascending.
inline std::vector<int> complement(const std::vector<int>& idx, int n) {
  std::vector<int> out;
  std::vector<char> used(n, 0);
  for (int i : idx) used[i] = 1;
  for (int i = 0; i < n; ++i)
    if (!used[i]) out.push_back(i);
  return out;
}

/// All ascending g-subsets of {0, ..., n-1} in lexicographic order.
inline std::vector<std::vector<int>> subsets(int n, int g) {
  std::vector<std::vector<int>> out;
  if (g < 0 || g > n) return out;
  std::vector<int> cur(g);
  for (int i = 0; i < g; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int k = g - 1;
    while (k >= 0 && cur[k] == n - g + k) --k;
    if (k < 0) break;
    ++cur[k];
    for (int j = k + 1; j < g; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

}  // namespace fpl
