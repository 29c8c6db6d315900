#include "calderon/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace calderon {

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_complex(std::complex<double> z) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
    return buf;
}

std::complex<double> parse_complex(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("parse_complex: empty entry");
    if (s.back() != 'i') return {std::stod(s), 0.0};
    // the imaginary part starts at the last sign that is not part of an exponent
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size() - 1; k > 0; --k) {
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    if (split == std::string::npos) return {0.0, std::stod(s.substr(0, s.size() - 1))};
    return {std::stod(s.substr(0, split)), std::stod(s.substr(split, s.size() - 1 - split))};
}

void write_matrix_csv(std::ostream& os, const std::string& header, const Eigen::MatrixXcd& m) {
    os << header << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_complex(m(i, j));
        os << '\n';
    }
}

Eigen::MatrixXcd read_matrix_csv(std::istream& is, std::string* header) {
    std::string line;
    std::vector<std::vector<std::complex<double>>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (header) *header = line;
            continue;
        }
        std::vector<std::complex<double>> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(parse_complex(cell));
        if (!rows.empty() && row.size() != rows[0].size()) throw std::invalid_argument("read_matrix_csv: ragged rows");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_nd_csv(std::ostream& os, const Eigen::MatrixXcd& nd) {
    write_matrix_csv(os, "# ND J=" + std::to_string(nd.rows()), nd);
}

void write_dl_csv(std::ostream& os, const Eigen::MatrixXcd& dl, int J) {
    write_matrix_csv(os, "# DL J=" + std::to_string(J) + " N=" + std::to_string(dl.cols()), dl);
}

}  // namespace calderon
