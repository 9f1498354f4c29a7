#pragma once

#include <complex>

#include <Eigen/Sparse>

#include "zpf/field.hpp"

namespace zpf {

template <typename Scalar>
using ComplexSparse = Eigen::SparseMatrix<std::complex<Scalar>>;

/// Real-linear amplitude map alpha' = A alpha + B conj(alpha). Every source
/// and optical element in the chain is of this form, so the ensemble second
/// moments of the output follow from (A, B) without sampling.
template <typename Scalar>
struct LinearAntilinearMap {
  ComplexSparse<Scalar> linear;
  ComplexSparse<Scalar> antilinear;

  static LinearAntilinearMap identity(Eigen::Index n) {
    LinearAntilinearMap map{ComplexSparse<Scalar>(n, n), ComplexSparse<Scalar>(n, n)};
    map.linear.setIdentity();
    return map;
  }

  Eigen::Index size() const noexcept { return linear.rows(); }

  AmplitudeVector<Scalar> apply(const AmplitudeVector<Scalar>& alpha) const {
    AmplitudeVector<Scalar> out = linear * alpha;
    if (antilinear.nonZeros() > 0) out += antilinear * alpha.conjugate();
    return out;
  }

  /// `next` applied after `*this`.
  LinearAntilinearMap then(const LinearAntilinearMap& next) const {
    ComplexSparse<Scalar> a = next.linear * linear;
    ComplexSparse<Scalar> b = next.linear * antilinear;
    if (next.antilinear.nonZeros() > 0) {
      a += next.antilinear * ComplexSparse<Scalar>(antilinear.conjugate());
      b += next.antilinear * ComplexSparse<Scalar>(linear.conjugate());
    }
    a.prune(std::complex<Scalar>(0));
    b.prune(std::complex<Scalar>(0));
    return {std::move(a), std::move(b)};
  }
};

using LinearAntilinearMapd = LinearAntilinearMap<double>;

}  // namespace zpf
