#include "tri/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tri {

void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols())
        throw config_error(std::string(who) + ": matrix must be square, got " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

bool is_finite(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    return true;
}

double op_norm(const Matrix& m) {
    require_square(m, "op_norm");
    if (!is_finite(m)) throw config_error("op_norm: non-finite entries");
    if (m.rows() == 0) return 0.0;
    if (m.isZero(0.0)) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double spectral_radius(const Matrix& m) {
    require_square(m, "spectral_radius");
    if (m.rows() == 0) return 0.0;
    Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw numerical_error("spectral_radius: eigensolver did not converge (n=" +
                              std::to_string(m.rows()) + ")");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double cond2(const Matrix& m) {
    require_square(m, "cond2");
    if (m.rows() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    double smin = s(s.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string to_text(const Matrix& m) {
    require_square(m, "to_text");
    std::ostringstream out;
    out << m.rows() << ' ' << m.rows() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(m(i, j).real()) << ' ' << format_double(m(i, j).imag());
        }
        out << '\n';
    }
    return out.str();
}

Matrix from_text(const std::string& text) {
    std::istringstream in(text);
    long rows = -1, cols = -1;
    if (!(in >> rows >> cols)) throw config_error("matrix text: missing header");
    if (rows != cols || rows < 0) throw config_error("matrix text: bad header dims");
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) {
            double re, im;
            if (!(in >> re >> im))
                throw config_error("matrix text: truncated at entry (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")");
            m(i, j) = Complex(re, im);
        }
    return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot open for writing: " + path);
    f << to_text(m);
}

Matrix load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str());
}

}  // namespace tri
