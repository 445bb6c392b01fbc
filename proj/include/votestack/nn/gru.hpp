#pragma once

#include <cassert>
#include <vector>

#include "votestack/common.hpp"
#include "votestack/nn/activations.hpp"
#include "votestack/nn/types.hpp"

namespace votestack::nn {

// GRU with reset gate r and update gate z. Update convention (fixed for
// reproducibility; the other convention swaps the roles of z and 1-z):
//   r = sigmoid(x*W_r + h*U_r + b_r)
//   z = sigmoid(x*W_z + h*U_z + b_z)
//   g = tanh(x*W_h + (r .* h)*U_h + b_h)
//   h_t = (1 - z) .* h_{t-1} + z .* g
// with h_0 = 0, so a saturated-low z carries the previous state through.
template <typename Scalar>
struct GruParams {
    Mat<Scalar> w_r, w_z, w_h;  // (input_dim x hidden)
    Mat<Scalar> u_r, u_z, u_h;  // (hidden x hidden)
    Mat<Scalar> b_r, b_z, b_h;  // (1 x hidden)

    int input_dim() const { return static_cast<int>(w_r.rows()); }
    int hidden_size() const { return static_cast<int>(w_r.cols()); }

    static GruParams zeros(int input_dim, int hidden) {
        GruParams p;
        for (Mat<Scalar>* w : {&p.w_r, &p.w_z, &p.w_h}) w->setZero(input_dim, hidden);
        for (Mat<Scalar>* u : {&p.u_r, &p.u_z, &p.u_h}) u->setZero(hidden, hidden);
        for (Mat<Scalar>* b : {&p.b_r, &p.b_z, &p.b_h}) b->setZero(1, hidden);
        return p;
    }

    ParamList<Scalar> param_refs() { return {&w_r, &w_z, &w_h, &u_r, &u_z, &u_h, &b_r, &b_z, &b_h}; }
    ConstParamList<Scalar> param_refs() const {
        return {&w_r, &w_z, &w_h, &u_r, &u_z, &u_h, &b_r, &b_z, &b_h};
    }
};

template <typename Scalar>
struct GruCache {
    std::vector<Mat<Scalar>> r, z, g, h;
    int steps = 0;
};

template <typename Scalar>
Mat<Scalar> gru_forward(const Mat<Scalar>& seq, const GruParams<Scalar>& p, int true_length,
                        GruCache<Scalar>* cache = nullptr) {
    if (seq.cols() != p.input_dim()) {
        throw ShapeError("gru_forward: sequence " + shape_of(seq) + " does not match input dim " +
                         std::to_string(p.input_dim()));
    }
    if (true_length < 0 || true_length > seq.rows()) {
        throw ArgumentError("gru_forward: true_length out of range");
    }
    const int hidden = p.hidden_size();
    Mat<Scalar> h = Mat<Scalar>::Zero(1, hidden);
    if (cache) {
        *cache = GruCache<Scalar>{};
        cache->steps = true_length;
    }
    for (int t = 0; t < true_length; ++t) {
        auto x = seq.row(t);
        Mat<Scalar> r = sigmoid(x * p.w_r + h * p.u_r + p.b_r);
        Mat<Scalar> z = sigmoid(x * p.w_z + h * p.u_z + p.b_z);
        Mat<Scalar> g = tanh_act(x * p.w_h + r.cwiseProduct(h) * p.u_h + p.b_h);
        h = (Mat<Scalar>::Ones(1, hidden) - z).cwiseProduct(h) + z.cwiseProduct(g);
        if (cache) {
            cache->r.push_back(r);
            cache->z.push_back(z);
            cache->g.push_back(g);
            cache->h.push_back(h);
        }
    }
    assert(h.allFinite() && "gru_forward produced non-finite values");
    return h;
}

template <typename Scalar>
Mat<Scalar> gru_backward(const Mat<Scalar>& grad_h_final, const Mat<Scalar>& seq,
                         const GruParams<Scalar>& p, const GruCache<Scalar>& cache,
                         GruParams<Scalar>& grads) {
    const int hidden = p.hidden_size();
    require_shape(grad_h_final, 1, hidden, "gru_backward: grad");

    Mat<Scalar> grad_seq = Mat<Scalar>::Zero(seq.rows(), seq.cols());
    Mat<Scalar> dh = grad_h_final;

    for (int t = cache.steps - 1; t >= 0; --t) {
        const auto st = static_cast<std::size_t>(t);
        const Mat<Scalar>& r = cache.r[st];
        const Mat<Scalar>& z = cache.z[st];
        const Mat<Scalar>& g = cache.g[st];
        Mat<Scalar> h_prev = t > 0 ? cache.h[st - 1] : Mat<Scalar>(Mat<Scalar>::Zero(1, hidden));

        Mat<Scalar> dz = dh.cwiseProduct(g - h_prev);
        Mat<Scalar> da_z = dz.cwiseProduct(sigmoid_grad_from_value(z));
        Mat<Scalar> dg = dh.cwiseProduct(z);
        Mat<Scalar> da_g = dg.cwiseProduct(tanh_grad_from_value(g));

        Mat<Scalar> dh_prev = dh.cwiseProduct(Mat<Scalar>::Ones(1, hidden) - z);
        Mat<Scalar> d_rh = da_g * p.u_h.transpose();  // grad w.r.t. (r .* h_prev)
        Mat<Scalar> dr = d_rh.cwiseProduct(h_prev);
        dh_prev += d_rh.cwiseProduct(r);
        Mat<Scalar> da_r = dr.cwiseProduct(sigmoid_grad_from_value(r));

        auto x = seq.row(t);
        grads.w_r += x.transpose() * da_r;
        grads.w_z += x.transpose() * da_z;
        grads.w_h += x.transpose() * da_g;
        grads.u_r += h_prev.transpose() * da_r;
        grads.u_z += h_prev.transpose() * da_z;
        grads.u_h += (r.cwiseProduct(h_prev)).transpose() * da_g;
        grads.b_r += da_r;
        grads.b_z += da_z;
        grads.b_h += da_g;

        grad_seq.row(t) =
            da_r * p.w_r.transpose() + da_z * p.w_z.transpose() + da_g * p.w_h.transpose();
        dh = dh_prev + da_r * p.u_r.transpose() + da_z * p.u_z.transpose();
    }
    return grad_seq;
}

}  // namespace votestack::nn
