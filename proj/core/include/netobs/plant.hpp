#pragma once

#include <Eigen/Dense>

#include "netobs/errors.hpp"

namespace netobs {

// Continuous-time LTI plant
//   xdot = A x + B u,   y = C x,
// with one output channel per row of C. B may be empty (n x 0) for an
// autonomous plant.
struct PlantModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index output_dim() const { return C.rows(); }

  // Row of C for a 1-based channel index.
  Eigen::RowVectorXd output_row(int channel) const {
    if (channel < 1 || channel > C.rows()) {
      throw DimensionError("PlantModel: channel " + std::to_string(channel) +
                           " outside [1, " + std::to_string(C.rows()) + "]");
    }
    return C.row(channel - 1);
  }

  void validate() const {
    if (A.rows() != A.cols()) throw DimensionError("PlantModel: A must be square");
    if (A.rows() == 0) throw DimensionError("PlantModel: state dimension must be >= 1");
    if (B.size() > 0 && B.rows() != A.rows()) {
      throw DimensionError("PlantModel: B must have as many rows as A");
    }
    if (C.rows() == 0) throw DimensionError("PlantModel: C must have at least one row");
    if (C.cols() != A.rows()) {
      throw DimensionError("PlantModel: C must have as many columns as A");
    }
    if (!A.allFinite() || !B.allFinite() || !C.allFinite()) {
      throw DomainError("PlantModel: matrices must be finite");
    }
  }
};

}  // namespace netobs
