#include "ntk/dataset.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "ntk/errors.hpp"

namespace ntk {

Eigen::MatrixXd load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open csv: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw IoError("non-numeric cell in " + path + ": '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("ragged csv rows in " + path);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty csv: " + path);
    Eigen::MatrixXd data(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < data.rows(); ++i) {
        for (int j = 0; j < data.cols(); ++j) data(i, j) = rows[i][j];
    }
    return data;
}

Eigen::VectorXd load_labels(const std::string& path) {
    const Eigen::MatrixXd data = load_csv(path);
    if (data.cols() != 1) throw IoError("label file must have exactly one column: " + path);
    return data.col(0);
}

void save_csv(const Eigen::MatrixXd& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.precision(17);
    for (int i = 0; i < data.rows(); ++i) {
        for (int j = 0; j < data.cols(); ++j) {
            if (j) out << ',';
            out << data(i, j);
        }
        out << '\n';
    }
}

} // namespace ntk
