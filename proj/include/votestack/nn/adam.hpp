#pragma once

#include <cmath>

#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Bias-corrected Adam over a fixed list of parameter matrices. Accumulators
// start at zero; t counts completed steps.
template <typename Scalar>
struct AdamState {
    Scalar lr = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);
    long t = 0;
    std::vector<Mat<Scalar>> m, v;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const ParamList<Scalar>& params, Scalar lr = Scalar(1e-3)) {
    AdamState<Scalar> state;
    state.lr = lr;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Mat<Scalar>* p : params) {
        state.m.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
        state.v.push_back(Mat<Scalar>::Zero(p->rows(), p->cols()));
    }
    return state;
}

template <typename Scalar>
void adam_step(const ParamList<Scalar>& params, const ConstParamList<Scalar>& grads,
               AdamState<Scalar>& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state counts disagree");
    }
    state.t += 1;
    const Scalar bc1 = Scalar(1) - Scalar(std::pow(static_cast<double>(state.beta1), state.t));
    const Scalar bc2 = Scalar(1) - Scalar(std::pow(static_cast<double>(state.beta2), state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Mat<Scalar>& p = *params[i];
        const Mat<Scalar>& g = *grads[i];
        if (p.rows() != g.rows() || p.cols() != g.cols()) {
            throw ShapeError("adam_step: param " + shape_of(p) + " vs grad " + shape_of(g));
        }
        state.m[i] = state.beta1 * state.m[i] + (Scalar(1) - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i].array().matrix() +
                     (Scalar(1) - state.beta2) * g.cwiseProduct(g);
        auto m_hat = state.m[i].array() / bc1;
        auto v_hat = state.v[i].array() / bc2;
        p.array() -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

}  // namespace votestack::nn
