#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "votestack/nn/types.hpp"

namespace votestack::nn {

inline double relative_error(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

// Central-difference gradient verification. `loss` must be a deterministic
// function of the matrices in `params` (they are perturbed in place and
// restored). Returns the maximum elementwise relative error against the
// analytic gradients, paired index-wise with `params`. Run in 64-bit floats.
inline double gradient_check(const std::function<double()>& loss, const ParamList<double>& params,
                             const std::vector<Mat<double>>& analytic_grads, double h = 1e-5) {
    if (params.size() != analytic_grads.size()) {
        throw ShapeError("gradient_check: params/grads size mismatch");
    }
    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Mat<double>& p = *params[i];
        const Mat<double>& g = analytic_grads[i];
        if (p.rows() != g.rows() || p.cols() != g.cols()) {
            throw ShapeError("gradient_check: param " + shape_of(p) + " vs grad " + shape_of(g));
        }
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) {
                const double saved = p(r, c);
                p(r, c) = saved + h;
                const double up = loss();
                p(r, c) = saved - h;
                const double down = loss();
                p(r, c) = saved;
                const double numeric = (up - down) / (2 * h);
                worst = std::max(worst, relative_error(g(r, c), numeric));
            }
        }
    }
    return worst;
}

}  // namespace votestack::nn
