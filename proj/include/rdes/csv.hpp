#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rdes {

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

CsvTable read_csv_table(const std::string& path);

/// Writes a headered CSV with '.' decimal separator and 17 significant
/// digits, enough for a lossless double round trip.
void write_csv_table(const std::string& path,
                     const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values);

std::string format_full(double x);

}  // namespace rdes
