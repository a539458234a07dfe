#ifndef IPLA_TYPES_HPP
#define IPLA_TYPES_HPP

#include <Eigen/Dense>

namespace ipla {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace ipla

#endif  // IPLA_TYPES_HPP
