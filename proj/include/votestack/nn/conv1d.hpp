#pragma once

#include <cassert>
#include <vector>

#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Convolution over time with ReLU and max-over-time pooling, one feature per
// filter. Positions at or past true_length never enter the max.
//
// feature_f = max over p in [0, true_length - width] of
//             relu( sum(filter_f .* seq[p : p+width, :]) + bias_f )
//
// A filter wider than true_length yields feature 0 with zero gradient (the
// documented degenerate case).
template <typename Scalar>
struct ConvPoolCache {
    std::vector<int> argmax;  // winning position per filter; -1 when the feature is clipped to 0
};

template <typename Scalar>
Mat<Scalar> conv1d_maxpool_forward(const Mat<Scalar>& seq, const std::vector<Mat<Scalar>>& filters,
                                   const Mat<Scalar>& bias, int true_length,
                                   ConvPoolCache<Scalar>* cache = nullptr) {
    const auto n_filters = static_cast<Eigen::Index>(filters.size());
    require_shape(bias, 1, n_filters, "conv1d: bias");
    if (true_length < 0 || true_length > seq.rows()) {
        throw ArgumentError("conv1d: true_length " + std::to_string(true_length) +
                            " outside sequence of " + std::to_string(seq.rows()) + " rows");
    }

    Mat<Scalar> features = Mat<Scalar>::Zero(1, n_filters);
    if (cache) cache->argmax.assign(static_cast<std::size_t>(n_filters), -1);

    for (Eigen::Index f = 0; f < n_filters; ++f) {
        const Mat<Scalar>& filter = filters[static_cast<std::size_t>(f)];
        if (filter.cols() != seq.cols()) {
            throw ShapeError("conv1d: filter " + shape_of(filter) + " does not match sequence " +
                             shape_of(seq));
        }
        const Eigen::Index width = filter.rows();
        Scalar best = Scalar(0);
        int best_pos = -1;
        for (Eigen::Index p = 0; p + width <= true_length; ++p) {
            Scalar a = (seq.middleRows(p, width).cwiseProduct(filter)).sum() + bias(0, f);
            if (a > best) {  // strict: first argmax wins ties
                best = a;
                best_pos = static_cast<int>(p);
            }
        }
        features(0, f) = best;
        if (cache) cache->argmax[static_cast<std::size_t>(f)] = best_pos;
    }
    assert(features.allFinite() && "conv1d_maxpool_forward produced non-finite values");
    return features;
}

template <typename Scalar>
struct ConvPoolGrads {
    std::vector<Mat<Scalar>> filters;
    Mat<Scalar> bias;
    Mat<Scalar> seq;
};

// Gradient flows only through each filter's winning position; features that
// were clipped to zero (argmax -1) contribute nothing.
template <typename Scalar>
ConvPoolGrads<Scalar> conv1d_maxpool_backward(const Mat<Scalar>& grad_features,
                                              const Mat<Scalar>& seq,
                                              const std::vector<Mat<Scalar>>& filters,
                                              const ConvPoolCache<Scalar>& cache) {
    const auto n_filters = static_cast<Eigen::Index>(filters.size());
    require_shape(grad_features, 1, n_filters, "conv1d backward: grad");

    ConvPoolGrads<Scalar> g;
    g.bias = Mat<Scalar>::Zero(1, n_filters);
    g.seq = Mat<Scalar>::Zero(seq.rows(), seq.cols());
    g.filters.reserve(static_cast<std::size_t>(n_filters));
    for (Eigen::Index f = 0; f < n_filters; ++f) {
        const Mat<Scalar>& filter = filters[static_cast<std::size_t>(f)];
        Mat<Scalar> df = Mat<Scalar>::Zero(filter.rows(), filter.cols());
        int pos = cache.argmax[static_cast<std::size_t>(f)];
        if (pos >= 0) {
            Scalar gf = grad_features(0, f);
            df = gf * seq.middleRows(pos, filter.rows());
            g.bias(0, f) = gf;
            g.seq.middleRows(pos, filter.rows()) += gf * filter;
        }
        g.filters.push_back(std::move(df));
    }
    return g;
}

}  // namespace votestack::nn
