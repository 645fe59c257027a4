#pragma once

#include <Eigen/Core>
#include <string>

namespace ntk {

/// Headerless all-numeric CSV, one sample per row.
Eigen::MatrixXd load_csv(const std::string& path);

/// Single-column label file.
Eigen::VectorXd load_labels(const std::string& path);

void save_csv(const Eigen::MatrixXd& data, const std::string& path);

} // namespace ntk
