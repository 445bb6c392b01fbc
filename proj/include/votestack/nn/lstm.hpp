#pragma once

#include <cassert>
#include <vector>

#include "votestack/common.hpp"
#include "votestack/nn/activations.hpp"
#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Standard LSTM gate parameterization (input, forget, output gates and cell
// candidate), row convention:
//   a_g = x_t * W_g + h_{t-1} * U_g + b_g
//   i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o);  g = tanh(a_c)
//   c_t = f .* c_{t-1} + i .* g;  h_t = o .* tanh(c_t)
// with h_0 = c_0 = 0.
template <typename Scalar>
struct LstmParams {
    Mat<Scalar> w_i, w_f, w_o, w_c;  // (input_dim x hidden)
    Mat<Scalar> u_i, u_f, u_o, u_c;  // (hidden x hidden)
    Mat<Scalar> b_i, b_f, b_o, b_c;  // (1 x hidden)

    int input_dim() const { return static_cast<int>(w_i.rows()); }
    int hidden_size() const { return static_cast<int>(w_i.cols()); }

    static LstmParams zeros(int input_dim, int hidden) {
        LstmParams p;
        for (Mat<Scalar>* w : {&p.w_i, &p.w_f, &p.w_o, &p.w_c}) w->setZero(input_dim, hidden);
        for (Mat<Scalar>* u : {&p.u_i, &p.u_f, &p.u_o, &p.u_c}) u->setZero(hidden, hidden);
        for (Mat<Scalar>* b : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) b->setZero(1, hidden);
        return p;
    }

    // Fixed order shared by Adam, serialization and the gradient checker.
    ParamList<Scalar> param_refs() {
        return {&w_i, &w_f, &w_o, &w_c, &u_i, &u_f, &u_o, &u_c, &b_i, &b_f, &b_o, &b_c};
    }
    ConstParamList<Scalar> param_refs() const {
        return {&w_i, &w_f, &w_o, &w_c, &u_i, &u_f, &u_o, &u_c, &b_i, &b_f, &b_o, &b_c};
    }
};

template <typename Scalar>
struct LstmCache {
    // Per executed step t: gate activations, cell state and hidden state.
    std::vector<Mat<Scalar>> i, f, o, g, c, h;
    int steps = 0;
};

template <typename Scalar>
Mat<Scalar> lstm_forward(const Mat<Scalar>& seq, const LstmParams<Scalar>& p, int true_length,
                         LstmCache<Scalar>* cache = nullptr) {
    if (seq.cols() != p.input_dim()) {
        throw ShapeError("lstm_forward: sequence " + shape_of(seq) + " does not match input dim " +
                         std::to_string(p.input_dim()));
    }
    if (true_length < 0 || true_length > seq.rows()) {
        throw ArgumentError("lstm_forward: true_length out of range");
    }
    const int hidden = p.hidden_size();
    Mat<Scalar> h = Mat<Scalar>::Zero(1, hidden);
    Mat<Scalar> c = Mat<Scalar>::Zero(1, hidden);
    if (cache) {
        *cache = LstmCache<Scalar>{};
        cache->steps = true_length;
    }
    for (int t = 0; t < true_length; ++t) {
        auto x = seq.row(t);
        Mat<Scalar> i = sigmoid(x * p.w_i + h * p.u_i + p.b_i);
        Mat<Scalar> f = sigmoid(x * p.w_f + h * p.u_f + p.b_f);
        Mat<Scalar> o = sigmoid(x * p.w_o + h * p.u_o + p.b_o);
        Mat<Scalar> g = tanh_act(x * p.w_c + h * p.u_c + p.b_c);
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        h = o.cwiseProduct(tanh_act(c));
        if (cache) {
            cache->i.push_back(i);
            cache->f.push_back(f);
            cache->o.push_back(o);
            cache->g.push_back(g);
            cache->c.push_back(c);
            cache->h.push_back(h);
        }
    }
    assert(h.allFinite() && "lstm_forward produced non-finite values");
    return h;
}

// Backpropagation through time. Accumulates parameter gradients into
// `grads` (same layout as the parameters) and returns the gradient with
// respect to the input sequence; rows at and past true_length stay zero.
template <typename Scalar>
Mat<Scalar> lstm_backward(const Mat<Scalar>& grad_h_final, const Mat<Scalar>& seq,
                          const LstmParams<Scalar>& p, const LstmCache<Scalar>& cache,
                          LstmParams<Scalar>& grads) {
    const int hidden = p.hidden_size();
    require_shape(grad_h_final, 1, hidden, "lstm_backward: grad");

    Mat<Scalar> grad_seq = Mat<Scalar>::Zero(seq.rows(), seq.cols());
    Mat<Scalar> dh = grad_h_final;
    Mat<Scalar> dc = Mat<Scalar>::Zero(1, hidden);

    for (int t = cache.steps - 1; t >= 0; --t) {
        const auto st = static_cast<std::size_t>(t);
        const Mat<Scalar>& i = cache.i[st];
        const Mat<Scalar>& f = cache.f[st];
        const Mat<Scalar>& o = cache.o[st];
        const Mat<Scalar>& g = cache.g[st];
        Mat<Scalar> tanh_c = tanh_act(cache.c[st]);
        Mat<Scalar> h_prev =
            t > 0 ? cache.h[st - 1] : Mat<Scalar>(Mat<Scalar>::Zero(1, hidden));
        Mat<Scalar> c_prev =
            t > 0 ? cache.c[st - 1] : Mat<Scalar>(Mat<Scalar>::Zero(1, hidden));

        Mat<Scalar> da_o = dh.cwiseProduct(tanh_c).cwiseProduct(sigmoid_grad_from_value(o));
        dc += dh.cwiseProduct(o).cwiseProduct(tanh_grad_from_value(tanh_c));

        Mat<Scalar> da_f = dc.cwiseProduct(c_prev).cwiseProduct(sigmoid_grad_from_value(f));
        Mat<Scalar> da_i = dc.cwiseProduct(g).cwiseProduct(sigmoid_grad_from_value(i));
        Mat<Scalar> da_g = dc.cwiseProduct(i).cwiseProduct(tanh_grad_from_value(g));

        auto x = seq.row(t);
        grads.w_i += x.transpose() * da_i;
        grads.w_f += x.transpose() * da_f;
        grads.w_o += x.transpose() * da_o;
        grads.w_c += x.transpose() * da_g;
        grads.u_i += h_prev.transpose() * da_i;
        grads.u_f += h_prev.transpose() * da_f;
        grads.u_o += h_prev.transpose() * da_o;
        grads.u_c += h_prev.transpose() * da_g;
        grads.b_i += da_i;
        grads.b_f += da_f;
        grads.b_o += da_o;
        grads.b_c += da_g;

        grad_seq.row(t) = da_i * p.w_i.transpose() + da_f * p.w_f.transpose() +
                          da_o * p.w_o.transpose() + da_g * p.w_c.transpose();
        dh = da_i * p.u_i.transpose() + da_f * p.u_f.transpose() + da_o * p.u_o.transpose() +
             da_g * p.u_c.transpose();
        dc = dc.cwiseProduct(f);
    }
    return grad_seq;
}

// Bidirectional LSTM: concatenation of the forward pass over the sequence
// and a second pass over the reversed first true_length steps.
template <typename Scalar>
struct BilstmCache {
    LstmCache<Scalar> fwd, bwd;
    Mat<Scalar> reversed;  // reversed valid prefix, reused by backward
};

template <typename Scalar>
Mat<Scalar> reverse_prefix(const Mat<Scalar>& seq, int true_length) {
    Mat<Scalar> rev = Mat<Scalar>::Zero(seq.rows(), seq.cols());
    for (int t = 0; t < true_length; ++t) {
        rev.row(t) = seq.row(true_length - 1 - t);
    }
    return rev;
}

template <typename Scalar>
Mat<Scalar> bilstm_forward(const Mat<Scalar>& seq, const LstmParams<Scalar>& fwd,
                           const LstmParams<Scalar>& bwd, int true_length,
                           BilstmCache<Scalar>* cache = nullptr) {
    Mat<Scalar> rev = reverse_prefix(seq, true_length);
    Mat<Scalar> h_f = lstm_forward(seq, fwd, true_length, cache ? &cache->fwd : nullptr);
    Mat<Scalar> h_b = lstm_forward(rev, bwd, true_length, cache ? &cache->bwd : nullptr);
    if (cache) cache->reversed = std::move(rev);
    Mat<Scalar> out(1, h_f.cols() + h_b.cols());
    out << h_f, h_b;
    return out;
}

template <typename Scalar>
Mat<Scalar> bilstm_backward(const Mat<Scalar>& grad_out, const Mat<Scalar>& seq,
                            const LstmParams<Scalar>& fwd, const LstmParams<Scalar>& bwd,
                            const BilstmCache<Scalar>& cache, int true_length,
                            LstmParams<Scalar>& grads_fwd, LstmParams<Scalar>& grads_bwd) {
    const int hidden = fwd.hidden_size();
    require_shape(grad_out, 1, 2 * hidden, "bilstm_backward: grad");
    Mat<Scalar> gf = grad_out.leftCols(hidden);
    Mat<Scalar> gb = grad_out.rightCols(hidden);
    Mat<Scalar> grad_seq = lstm_backward(gf, seq, fwd, cache.fwd, grads_fwd);
    Mat<Scalar> grad_rev = lstm_backward(gb, cache.reversed, bwd, cache.bwd, grads_bwd);
    for (int t = 0; t < true_length; ++t) {
        grad_seq.row(true_length - 1 - t) += grad_rev.row(t);
    }
    return grad_seq;
}

}  // namespace votestack::nn
