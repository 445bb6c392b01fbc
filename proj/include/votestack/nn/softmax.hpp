#pragma once

#include <cmath>
#include <vector>

#include "votestack/nn/types.hpp"

namespace votestack::nn {

// Row-wise max-subtracted softmax; rows sum to 1 and every entry is finite
// even for extreme logits.
template <typename Scalar>
Mat<Scalar> softmax(const Mat<Scalar>& logits) {
    Mat<Scalar> probs(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        Scalar m = row.maxCoeff();
        auto shifted = (row.array() - m).exp();
        probs.row(r) = (shifted / shifted.sum()).matrix();
    }
    return probs;
}

template <typename Scalar>
struct SoftmaxLoss {
    double loss = 0;           // mean of -log p[target] over the batch
    Mat<Scalar> probs;         // (batch x k)
    Mat<Scalar> grad_logits;   // (softmax - one_hot) / batch
};

template <typename Scalar>
SoftmaxLoss<Scalar> softmax_crossentropy(const Mat<Scalar>& logits, const std::vector<int>& targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        throw ShapeError("softmax_crossentropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(logits.rows()) + " logit rows");
    }
    const Eigen::Index k = logits.cols();
    for (int t : targets) {
        if (t < 0 || t >= k) {
            throw ArgumentError("softmax_crossentropy: target " + std::to_string(t) +
                                " outside [0, " + std::to_string(k) + ")");
        }
    }
    SoftmaxLoss<Scalar> out;
    out.probs = softmax(logits);
    out.grad_logits = out.probs;
    const auto batch = static_cast<double>(logits.rows());
    double total = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        int t = targets[static_cast<std::size_t>(r)];
        total -= std::log(static_cast<double>(out.probs(r, t)));
        out.grad_logits(r, t) -= Scalar(1);
    }
    out.grad_logits /= Scalar(batch);
    out.loss = total / batch;
    return out;
}

}  // namespace votestack::nn
