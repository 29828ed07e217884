#pragma once

// Cointegrating matrices and spaces for vectors of excursion functionals
// evaluated at several thresholds.
//
// Each space is the orthogonal complement of a small constraint matrix whose
// rows are chaos loadings (phi(u), u phi(u), (u^2-1) phi(u), phi(u) He_k(u), ...)
// across levels. A vector gamma is cointegrating when gamma' C' = 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphcoint/diagnostics.hpp"
#include "sphcoint/functionals.hpp"

namespace sphcoint {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class CointCase {
  area_case_a,
  area_case_b,
  area_qstar,
  length_case_a,
  length_case_b,
  length_boundary,
  joint_a,
  joint_b,
  joint_boundary,
  remark_three_level,
  custom
};

inline std::string to_string(CointCase c) {
  switch (c) {
    case CointCase::area_case_a: return "area_case_a";
    case CointCase::area_case_b: return "area_case_b";
    case CointCase::area_qstar: return "area_qstar";
    case CointCase::length_case_a: return "length_case_a";
    case CointCase::length_case_b: return "length_case_b";
    case CointCase::length_boundary: return "length_boundary";
    case CointCase::joint_a: return "joint_a";
    case CointCase::joint_b: return "joint_b";
    case CointCase::joint_boundary: return "joint_boundary";
    case CointCase::remark_three_level: return "remark_three_level";
    case CointCase::custom: return "custom";
  }
  return "unknown";
}

/// Memory regime relative to the boundary d_0 = 2 d_* - 1/2.
enum class MemoryCase { a, b, boundary };

/// Orthonormal basis of {gamma : gamma' C' = 0}; one basis vector per row.
struct CointBasis {
  Matrix constraint;
  Matrix basis;
  CointCase label = CointCase::custom;
  std::vector<double> levels;
  int rank = 0;                // numerical rank of the constraint
  double condition = 1.0;      // largest / smallest retained singular value
  int cointegrating_rank() const { return static_cast<int>(basis.rows()); }

  /// max |basis * constraint'|.
  double annihilation_error() const {
    if (basis.rows() == 0 || constraint.rows() == 0) return 0.0;
    return (basis * constraint.transpose()).cwiseAbs().maxCoeff();
  }

  /// Distance from gamma to its projection onto the basis span.
  double projection_residual(const Vector& gamma) const {
    if (basis.rows() == 0) return gamma.norm();
    const Vector proj = basis.transpose() * (basis * gamma);
    return (gamma - proj).norm();
  }
};

namespace detail {

inline void require_distinct(const std::vector<double>& levels, const char* who) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = i + 1; j < levels.size(); ++j)
      if (levels[i] == levels[j]) throw std::domain_error(std::string(who) + ": duplicate levels");
}

inline void require_nonzero(const std::vector<double>& levels, const char* who) {
  for (double u : levels)
    if (u == 0.0) throw std::domain_error(std::string(who) + ": levels must be nonzero");
}

inline Matrix rows_of(const std::vector<std::vector<double>>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) out(r, c) = rows[r][c];
  return out;
}

}  // namespace detail

/// Rows (1, 0, ..., -phi(u_1)/phi(u_{i+1}), ..., 0), i = 1..p-1.
inline Matrix gamma1(const std::vector<double>& levels) {
  if (levels.size() < 2) throw std::domain_error("gamma1: need at least two levels");
  detail::require_distinct(levels, "gamma1");
  const auto p = static_cast<Eigen::Index>(levels.size());
  Matrix g = Matrix::Zero(p - 1, p);
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    g(i, 0) = 1.0;
    g(i, i + 1) = -phi(levels[0]) / phi(levels[i + 1]);
  }
  return g;
}

/// Rows (1, 0, ..., -u_1 phi(u_1) / (u_{i+1} phi(u_{i+1})), ..., 0).
inline Matrix gamma1_tilde(const std::vector<double>& levels) {
  if (levels.size() < 2) throw std::domain_error("gamma1_tilde: need at least two levels");
  detail::require_nonzero(levels, "gamma1_tilde");
  detail::require_distinct(levels, "gamma1_tilde");
  const auto p = static_cast<Eigen::Index>(levels.size());
  Matrix g = Matrix::Zero(p - 1, p);
  const double lead = levels[0] * phi(levels[0]);
  for (Eigen::Index i = 0; i + 1 < p; ++i) {
    g(i, 0) = 1.0;
    g(i, i + 1) = -lead / (levels[i + 1] * phi(levels[i + 1]));
  }
  return g;
}

/// Smallest chaos order whose autocovariance is summable: floor(1/(1-2d_*)) + 1.
inline int qstar(double d_star) {
  if (!(d_star > 0.0 && d_star < 0.5)) throw std::domain_error("qstar: d_star must lie in (0, 1/2)");
  return static_cast<int>(std::floor(1.0 / (1.0 - 2.0 * d_star))) + 1;
}

/// Row k = 0..q: (phi(u_j) He_k(u_j))_j.
inline Matrix xa_matrix(const std::vector<double>& levels, int q) {
  if (q < 0) throw std::domain_error("xa_matrix: negative order");
  if (levels.empty()) throw std::domain_error("xa_matrix: no levels");
  const auto p = static_cast<Eigen::Index>(levels.size());
  if (p < q + 2) {
    std::ostringstream msg;
    msg << "xa_matrix: " << p << " levels for q = " << q << " leaves no cointegrating vector (need p >= q + 2)";
    warn(msg.str());
  }
  Matrix x(q + 1, p);
  for (int k = 0; k <= q; ++k)
    for (Eigen::Index j = 0; j < p; ++j) x(k, j) = phi(levels[j]) * hermite(k, levels[j]);
  return x;
}

/// Orthonormal null space of the constraint rows via SVD, with singular
/// values below 1e-10 times the largest treated as zero.
inline CointBasis coint_basis(const Matrix& constraint, CointCase label = CointCase::custom,
                              std::vector<double> levels = {}) {
  if (constraint.size() == 0) throw std::domain_error("coint_basis: empty constraint matrix");
  const Eigen::Index p = constraint.cols();
  Eigen::JacobiSVD<Matrix> svd(constraint, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * top && sv(i) > 0.0) ++rank;
  CointBasis out;
  out.constraint = constraint;
  out.label = label;
  out.levels = std::move(levels);
  out.rank = rank;
  out.condition = rank > 0 ? top / sv(rank - 1) : 1.0;
  if (rank > 0 && out.condition > 1e8) {
    std::ostringstream msg;
    msg << "coint_basis(" << to_string(label) << "): constraint is nearly singular, condition ~ " << out.condition;
    warn(msg.str());
  }
  const Matrix& v = svd.matrixV();
  out.basis = v.rightCols(p - rank).transpose();
  return out;
}

namespace detail {

inline CointBasis checked_basis(const Matrix& constraint, CointCase label, std::vector<double> levels,
                                int expected_dim) {
  CointBasis b = coint_basis(constraint, label, std::move(levels));
  if (b.cointegrating_rank() != expected_dim) {
    std::ostringstream msg;
    msg << to_string(label) << ": level set is degenerate (cointegrating rank " << b.cointegrating_rank()
        << ", expected " << expected_dim << ")";
    throw std::domain_error(msg.str());
  }
  return b;
}

}  // namespace detail

/// Area vector: case a annihilates the first chaos (phi(u_i)), rank p-1;
/// case b annihilates the second chaos (u_i phi(u_i)), rank p-1.
inline CointBasis area_coint_space(const std::vector<double>& levels, MemoryCase memory_case) {
  if (levels.size() < 2) throw std::domain_error("area_coint_space: need at least two levels");
  detail::require_distinct(levels, "area_coint_space");
  const auto p = static_cast<int>(levels.size());
  std::vector<double> row(levels.size());
  CointCase label = CointCase::area_case_a;
  if (memory_case == MemoryCase::a) {
    for (std::size_t j = 0; j < levels.size(); ++j) row[j] = phi(levels[j]);
  } else if (memory_case == MemoryCase::b) {
    detail::require_nonzero(levels, "area_coint_space");
    for (std::size_t j = 0; j < levels.size(); ++j) row[j] = levels[j] * phi(levels[j]);
    label = CointCase::area_case_b;
  } else {
    throw std::domain_error("area_coint_space: no boundary case for the area");
  }
  return detail::checked_basis(detail::rows_of({row}), label, levels, p - 1);
}

/// Vectors annihilating chaoses 0..q*-1 of the area loadings: null space of
/// X_A(q*). Residuals are short memory.
inline CointBasis area_qstar_space(const std::vector<double>& levels, double d_star) {
  detail::require_distinct(levels, "area_qstar_space");
  const int q = qstar(d_star);
  const Matrix x = xa_matrix(levels, q);
  CointBasis b = coint_basis(x, CointCase::area_qstar, levels);
  const int expected = std::max(0, static_cast<int>(levels.size()) - (q + 1));
  if (b.cointegrating_rank() != expected) warn("area_qstar_space: X_A rank below q*+1 for this level set");
  return b;
}

/// Two-chaos cancellation for three levels (first component fixed at 1).
inline Vector gamma2_three(double u1, double u2, double u3) {
  const double den = hermite(1, u3) - hermite(1, u2);
  if (den == 0.0) throw std::domain_error("gamma2_three: u2 and u3 must differ");
  Vector g(3);
  g(0) = 1.0;
  g(1) = (phi(u1) / phi(u2)) * ((hermite(1, u1) - hermite(1, u3)) / den);
  g(2) = -(phi(u1) / phi(u3)) * ((hermite(1, u1) - hermite(1, u2)) / den);
  return g;
}

/// Null space of X_A(q = 1) for three levels.
inline CointBasis remark_three_level_space(double u1, double u2, double u3) {
  const std::vector<double> levels{u1, u2, u3};
  detail::require_distinct(levels, "remark_three_level_space");
  return detail::checked_basis(xa_matrix(levels, 1), CointCase::remark_three_level, levels, 1);
}

namespace detail {

inline std::vector<double> loading(const std::vector<double>& levels, double (*f)(double)) {
  std::vector<double> out(levels.size());
  for (std::size_t j = 0; j < levels.size(); ++j) out[j] = f(levels[j]);
  return out;
}

inline double phi_load(double v) { return phi(v); }
inline double u_phi_load(double v) { return v * phi(v); }
inline double he2_phi_load(double v) { return (v * v - 1.0) * phi(v); }

inline int constraint_rows(MemoryCase c) { return c == MemoryCase::a ? 1 : (c == MemoryCase::b ? 2 : 3); }

inline std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace detail

/// Length vector: case a orthogonal to (v phi(v)), rank p-1; case b orthogonal
/// to (phi(v)) and ((v^2-1) phi(v)), rank p-2; boundary adds (v phi(v)), rank p-3.
inline CointBasis length_coint_space(const std::vector<double>& levels, MemoryCase memory_case) {
  using namespace detail;
  const int k = constraint_rows(memory_case);
  const auto p = static_cast<int>(levels.size());
  if (p < k + 1) throw std::domain_error("length_coint_space: too few levels for this case");
  require_nonzero(levels, "length_coint_space");
  require_distinct(levels, "length_coint_space");
  std::vector<std::vector<double>> rows;
  CointCase label = CointCase::length_case_a;
  switch (memory_case) {
    case MemoryCase::a: rows = {loading(levels, u_phi_load)}; break;
    case MemoryCase::b:
      rows = {loading(levels, phi_load), loading(levels, he2_phi_load)};
      label = CointCase::length_case_b;
      break;
    case MemoryCase::boundary:
      rows = {loading(levels, phi_load), loading(levels, u_phi_load), loading(levels, he2_phi_load)};
      label = CointCase::length_boundary;
      break;
  }
  return checked_basis(rows_of(rows), label, levels, p - k);
}

/// Joint (area levels u, length levels v) vector with the constraint rows as
/// displayed for the joint process; columns are the p1 area levels followed
/// by the p2 length levels.
inline CointBasis joint_coint_space(const std::vector<double>& u_levels, const std::vector<double>& v_levels,
                                    MemoryCase memory_case) {
  using namespace detail;
  if (u_levels.empty() || v_levels.empty()) throw std::domain_error("joint_coint_space: need area and length levels");
  const int k = constraint_rows(memory_case);
  const auto p = static_cast<int>(u_levels.size() + v_levels.size());
  if (p < k + 1) throw std::domain_error("joint_coint_space: too few levels for this case");
  require_distinct(u_levels, "joint_coint_space");
  require_distinct(v_levels, "joint_coint_space");
  const auto row_a = concat(loading(u_levels, phi_load), loading(v_levels, u_phi_load));
  const auto row_b1 = concat(loading(u_levels, he2_phi_load), loading(v_levels, phi_load));
  const auto row_b2 = concat(std::vector<double>(u_levels.size(), he2_phi_load(u_levels.front())),
                             loading(v_levels, he2_phi_load));
  std::vector<std::vector<double>> rows;
  CointCase label = CointCase::joint_a;
  switch (memory_case) {
    case MemoryCase::a: rows = {row_a}; break;
    case MemoryCase::b:
      rows = {row_b1, row_b2};
      label = CointCase::joint_b;
      break;
    case MemoryCase::boundary:
      rows = {row_a, row_b1, row_b2};
      label = CointCase::joint_boundary;
      break;
  }
  return checked_basis(rows_of(rows), label, concat(u_levels, v_levels), p - k);
}

/// t-wise gamma' (X_1(t), ..., X_p(t)). The result is centered (by
/// gamma' centering) exactly when every input is.
inline FunctionalSeries residual_series(const std::vector<FunctionalSeries>& columns, const Vector& gamma) {
  if (columns.empty() || static_cast<Eigen::Index>(columns.size()) != gamma.size())
    throw std::invalid_argument("residual_series: gamma length must match the number of series");
  const std::size_t n = columns.front().length();
  FunctionalSeries out;
  out.kind = FunctionalKind::coint_residual;
  out.level = columns.front().level;
  out.values.assign(n, 0.0);
  out.centered = true;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].length() != n) throw std::invalid_argument("residual_series: series lengths differ");
    out.centered = out.centered && columns[c].centered;
    out.centering += gamma(static_cast<Eigen::Index>(c)) * columns[c].centering;
  }
  for (std::size_t t = 0; t < n; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < columns.size(); ++c) s += gamma(static_cast<Eigen::Index>(c)) * columns[c].values[t];
    out.values[t] = s;
  }
  if (!out.centered) out.centering = 0.0;
  return out;
}

}  // namespace sphcoint
