#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <string>

#include "tri/error.hpp"

namespace tri {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Spectral norm (largest singular value). Zero matrix -> 0.
double op_norm(const Matrix& m);

// max |lambda| over the eigenvalues of a square matrix.
double spectral_radius(const Matrix& m);

// 2-norm condition number; +inf when singular to working precision.
double cond2(const Matrix& m);

bool is_finite(const Matrix& m);

void require_square(const Matrix& m, const char* who);

// Text format shared by every tool: first line "n n", then n lines of
// n entries, each entry "re im". 17 significant digits so that
// write -> read reproduces the doubles bit-exactly.
std::string to_text(const Matrix& m);
Matrix from_text(const std::string& text);

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

// Formats one double with 17 significant digits (shortest exact form is not
// required by the format; fixed %.17g keeps files diffable).
std::string format_double(double x);

}  // namespace tri
