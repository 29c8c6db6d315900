#ifndef CALDERON_IO_HPP
#define CALDERON_IO_HPP

#include <complex>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace calderon {

/// Round-trip decimal ("%.17g") for reals, "re+imi" / "re-imi" for complex.
std::string format_real(double x);
std::string format_complex(std::complex<double> z);
std::complex<double> parse_complex(const std::string& s);

/// First line is `header` (e.g. "# ND J=20"), then the rows, comma separated.
void write_matrix_csv(std::ostream& os, const std::string& header, const Eigen::MatrixXcd& m);
/// Returns the matrix; the header line is stored in `header` when given.
Eigen::MatrixXcd read_matrix_csv(std::istream& is, std::string* header = nullptr);

void write_nd_csv(std::ostream& os, const Eigen::MatrixXcd& nd);
void write_dl_csv(std::ostream& os, const Eigen::MatrixXcd& dl, int J);

}  // namespace calderon

#endif
