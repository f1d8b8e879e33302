#pragma once

#include <Eigen/Dense>

namespace intopic {

// Rows are entities (words, topics, documents) throughout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace intopic
