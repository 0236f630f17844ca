#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace delaycast {

// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Binary class labels, 0 or 1.
using Labels = std::vector<std::uint8_t>;

// Copy of the selected rows, in the given order.
Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows);
Labels take_labels(const Labels& y, const std::vector<std::size_t>& rows);

}  // namespace delaycast
