#pragma once

#include <vector>

#include <Eigen/Core>

namespace camdist {

// Minimum total cost assignment for a rows x cols matrix (Hungarian method
// with potentials). Returns, for each row, the matched column or -1 when the
// matrix has more rows than columns.
std::vector<int> SolveMinCostAssignment(const Eigen::MatrixXd& cost);

}  // namespace camdist
