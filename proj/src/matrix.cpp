#include "delaycast/matrix.hpp"

#include "delaycast/error.hpp"

namespace delaycast {

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= static_cast<std::size_t>(m.rows())) throw ShapeError("row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Labels take_labels(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (r >= y.size()) throw ShapeError("label index out of range");
    out.push_back(y[r]);
  }
  return out;
}

}  // namespace delaycast
