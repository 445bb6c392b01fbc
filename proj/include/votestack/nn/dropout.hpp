#pragma once

#include "votestack/common.hpp"
#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Inverted dropout mask: entries are 0 with probability `rate`, otherwise
// 1/(1-rate), so activations keep their expected scale and inference needs
// no rescaling. rate 0 yields an all-ones mask.
template <typename Scalar>
Mat<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, SplitMix64& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ArgumentError("dropout rate must be in [0, 1)");
    }
    Mat<Scalar> mask(rows, cols);
    const Scalar keep = static_cast<Scalar>(1.0 / (1.0 - rate));
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            mask(r, c) = rng.next_unit() < rate ? Scalar(0) : keep;
        }
    }
    return mask;
}

}  // namespace votestack::nn
