#include "rdes/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rdes/errors.hpp"

namespace rdes {

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    const int cols = static_cast<int>(table.header.size());
    std::vector<double> data;
    int rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (static_cast<int>(fields.size()) != cols)
            throw ConfigError("CSV row " + std::to_string(rows + 2) + " in " + path +
                              " has " + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(cols));
        for (const auto& f : fields) {
            try {
                size_t pos = 0;
                data.push_back(std::stod(f, &pos));
                if (pos != f.size()) throw std::invalid_argument(f);
            } catch (const std::exception&) {
                throw ConfigError("non-numeric CSV field '" + f + "' in " + path);
            }
        }
        ++rows;
    }
    table.values.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) table.values(i, j) = data[i * cols + j];
    return table;
}

void write_csv_table(const std::string& path,
                     const std::vector<std::string>& header,
                     const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write CSV file: " + path);
    for (size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (int i = 0; i < values.rows(); ++i) {
        for (int j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            out << format_full(values(i, j));
        }
        out << '\n';
    }
}

}  // namespace rdes
