#pragma once

#include <cassert>

#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Fully connected layer, row convention: out[i,:] = x[i,:] * w + b.
// x: (batch x in), w: (in x out), b: (1 x out).
template <typename Scalar>
Mat<Scalar> dense_forward(const Mat<Scalar>& x, const Mat<Scalar>& w, const Mat<Scalar>& b) {
    if (x.cols() != w.rows()) {
        throw ShapeError("dense_forward: x " + shape_of(x) + " does not match w " + shape_of(w));
    }
    require_shape(b, 1, w.cols(), "dense_forward: bias");
    Mat<Scalar> out = (x * w).rowwise() + b.row(0);
    assert(out.allFinite() && "dense_forward produced non-finite values");
    return out;
}

template <typename Scalar>
struct DenseGrads {
    Mat<Scalar> x;  // (batch x in)
    Mat<Scalar> w;  // (in x out)
    Mat<Scalar> b;  // (1 x out)
};

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Mat<Scalar>& grad_out, const Mat<Scalar>& x,
                                  const Mat<Scalar>& w) {
    if (grad_out.rows() != x.rows() || grad_out.cols() != w.cols() || x.cols() != w.rows()) {
        throw ShapeError("dense_backward: grad " + shape_of(grad_out) + ", x " + shape_of(x) +
                         ", w " + shape_of(w) + " disagree");
    }
    DenseGrads<Scalar> g;
    g.x = grad_out * w.transpose();
    g.w = x.transpose() * grad_out;
    g.b = grad_out.colwise().sum();
    return g;
}

}  // namespace votestack::nn
