#pragma once

#include <cmath>

#include "votestack/common.hpp"
#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Glorot-uniform fill: U(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
void glorot_uniform(Mat<Scalar>& w, SplitMix64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            w(r, c) = static_cast<Scalar>(rng.next_uniform(-limit, limit));
        }
    }
}

}  // namespace votestack::nn
