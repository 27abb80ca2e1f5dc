#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace regm {

class Dataset;

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

std::string join_row(const std::vector<std::string>& fields);

/// Header `x1,...,xp,y`, one observation per row.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path, bool intercept_included = false);

/// Header `i,psi_1,...,psi_p`; rows indexed from 1.
void write_matrix_rows_csv(const Eigen::MatrixXd& rows, const std::string& prefix,
                           const std::filesystem::path& path);

}  // namespace regm
