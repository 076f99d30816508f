#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace crdnn::nn {

// Row-major dense storage: element (r, c) lives at data()[r * cols + c].
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string shape_string(const Matrix& m);

void require_shape(const Matrix& m, Index rows, Index cols, const char* what);

} // namespace crdnn::nn
