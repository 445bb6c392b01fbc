#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "votestack/common.hpp"

namespace votestack::nn {

// Dense dynamic matrix; biases and per-example states are 1 x n rows so one
// type covers every parameter and every activation.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ParamList = std::vector<Mat<Scalar>*>;

template <typename Scalar>
using ConstParamList = std::vector<const Mat<Scalar>*>;

template <typename Scalar>
inline std::string shape_of(const Mat<Scalar>& m) {
    return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

template <typename Scalar>
inline void require_shape(const Mat<Scalar>& m, Eigen::Index rows, Eigen::Index cols,
                          const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ShapeError(std::string(what) + ": expected (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "), got " + shape_of(m));
    }
}

}  // namespace votestack::nn
