#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "msmi/errors.hpp"

namespace msmi {

/// Standard logistic function 1 / (1 + e^-z).
template <typename Scalar>
Scalar logistic(Scalar z) {
  if (z >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-z));
  }
  // Mirror form for large negative z so exp never overflows.
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// Softmax of a vector expression, computed with max-subtraction.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Vector<Scalar, Eigen::Dynamic> shifted =
      (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

/// Cosine similarity a.b / (|a||b|). Returns 0 when either norm is zero.
/// Throws DataError on length mismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: vector lengths differ (" +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) {
    return Scalar(0);
  }
  return a.dot(b) / (na * nb);
}

/// Index of the largest coefficient; ties resolve to the lowest index.
template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v(i) > v(best)) {
      best = i;
    }
  }
  return best;
}

}  // namespace msmi
