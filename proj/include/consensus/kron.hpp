#pragma once

#include <Eigen/Dense>

namespace consensus {

// Kronecker product a (x) b for dense Eigen expressions. Returns a plain
// matrix of the promoted scalar type; accepts any pair of dense expressions
// (matrices, vectors, row vectors, integer or double).
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b)
    -> Eigen::Matrix<decltype(typename DerivedA::Scalar{} * typename DerivedB::Scalar{}),
                     Eigen::Dynamic, Eigen::Dynamic> {
    using Scalar = decltype(typename DerivedA::Scalar{} * typename DerivedB::Scalar{});
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                              a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                Scalar(a(i, j)) * b.template cast<Scalar>();
    return out;
}

} // namespace consensus
