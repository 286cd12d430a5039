#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace relufe {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

// A batch of points, one point per column.
using PointSet = Eigen::MatrixXd;

// Selects the serial reference loop or the OpenMP kernel. Both paths produce
// bitwise-identical results; the serial one is kept as the test oracle.
enum class Exec { serial, parallel };

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace relufe
