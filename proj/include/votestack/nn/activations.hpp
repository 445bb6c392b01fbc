#pragma once

#include <Eigen/Dense>

namespace votestack::nn {

// Elementwise activations as expression-friendly free functions; all accept
// any dense Eigen expression and return a matrix expression.

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

template <typename Derived>
auto tanh_act(const Eigen::MatrixBase<Derived>& x) {
    return x.array().tanh().matrix();
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    return x.array().max(S(0)).matrix();
}

// Derivatives expressed in terms of the activation VALUE (as cached by the
// forward passes), not the pre-activation.
template <typename Derived>
auto sigmoid_grad_from_value(const Eigen::MatrixBase<Derived>& s) {
    using S = typename Derived::Scalar;
    return (s.array() * (S(1) - s.array())).matrix();
}

template <typename Derived>
auto tanh_grad_from_value(const Eigen::MatrixBase<Derived>& t) {
    using S = typename Derived::Scalar;
    return (S(1) - t.array().square()).matrix();
}

}  // namespace votestack::nn
