#pragma once

/// \file
/// Small dense linear algebra: numeric square matrices backed by Eigen, and
/// inversion of matrices whose entries are jets.

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <vector>

#include "cartanlab/errors.hpp"
#include "cartanlab/jet.hpp"

namespace cartanlab {

using SquareMatrix = Eigen::MatrixXd;

inline constexpr double kConditionBound = 1e12;

/// Inverse of a well-conditioned matrix. Symmetric input is required unless
/// `require_symmetric` is false.
inline SquareMatrix invert(const SquareMatrix& m, bool require_symmetric = true) {
  if (m.rows() != m.cols()) throw ConditioningError("invert: matrix is not square");
  const double scale = m.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConditioningError("invert: zero or non-finite matrix");
  if (require_symmetric && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConditioningError("invert: matrix is not symmetric");
  }
  Eigen::FullPivLU<SquareMatrix> lu(m);
  const auto& packed = lu.matrixLU();
  Eigen::Index worst = 0;
  for (Eigen::Index k = 1; k < packed.rows(); ++k) {
    if (std::abs(packed(k, k)) < std::abs(packed(worst, worst))) worst = k;
  }
  const double rcond = lu.rcond();
  if (!lu.isInvertible() || !(rcond > 0.0) || 1.0 / rcond > kConditionBound) {
    std::ostringstream os;
    os << "invert: ill-conditioned matrix (condition estimate "
       << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << ", worst pivot " << packed(worst, worst)
       << " at elimination step " << worst << ")";
    throw ConditioningError(os.str());
  }
  return lu.inverse();
}

/// Row-major n x n matrix of jets.
class JetMatrix {
 public:
  explicit JetMatrix(int n = 0) : n_(n), data_(static_cast<std::size_t>(n * n)) {}
  int dim() const { return n_; }
  Jet& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * n_ + j)]; }
  const Jet& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * n_ + j)]; }

  SquareMatrix values() const {
    SquareMatrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j).value();
    return m;
  }

  friend JetMatrix operator*(const JetMatrix& a, const JetMatrix& b) {
    JetMatrix r(a.n_);
    for (int i = 0; i < a.n_; ++i)
      for (int j = 0; j < a.n_; ++j) {
        Jet s(0.0);
        for (int k = 0; k < a.n_; ++k) s += a(i, k) * b(k, j);
        r(i, j) = s;
      }
    return r;
  }

 private:
  int n_;
  std::vector<Jet> data_;
};

/// Inverse of a jet matrix: M = M0 + E with E vanishing at the expansion
/// point, so M^-1 = sum_k (-M0^-1 E)^k M0^-1 terminates at the jet order.
inline JetMatrix invert(const JetMatrix& m, bool require_symmetric = true) {
  const int n = m.dim();
  const SquareMatrix inv0 = invert(m.values(), require_symmetric);
  int order = Jet::kConstantOrder;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) order = std::min(order, m(i, j).order());
  JetMatrix a0(n);
  JetMatrix step(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a0(i, j) = Jet(inv0(i, j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet s(0.0);
      for (int k = 0; k < n; ++k) {
        Jet e = m(k, j) - m(k, j).value();
        s += -inv0(i, k) * e;
      }
      step(i, j) = s;
    }
  JetMatrix result = a0;
  JetMatrix term = a0;
  const int terms = order == Jet::kConstantOrder ? 0 : order;
  for (int k = 0; k < terms; ++k) {
    term = step * term;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) result(i, j) += term(i, j);
  }
  return result;
}

}  // namespace cartanlab
