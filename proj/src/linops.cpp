#include "tri/linops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace tri {

double Splitting::structural_residual() const {
    const Matrix id = Matrix::Identity(dim(), dim());
    double r = 0.0;
    const Matrix* ps[3] = {&pi_s, &pi_c, &pi_u};
    for (int k = 0; k < 3; ++k) {
        r = std::max(r, op_norm(*ps[k] * *ps[k] - *ps[k]));
        for (int l = 0; l < 3; ++l)
            if (k != l) r = std::max(r, op_norm(*ps[k] * *ps[l]));
    }
    r = std::max(r, op_norm(pi_s + pi_c + pi_u - id));
    return r;
}

void Splitting::require_valid(double tol, const char* who) const {
    if (pi_s.rows() != pi_c.rows() || pi_s.rows() != pi_u.rows())
        throw config_error(std::string(who) + ": projector dims disagree");
    double r = structural_residual();
    if (r > tol)
        throw structure_error(std::string(who) + ": splitting residual " +
                              format_double(r) + " exceeds tol " + format_double(tol));
}

Splitting eigensplit(const Matrix& m, double alpha, const EigensplitOptions& opt) {
    require_square(m, "eigensplit");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("eigensplit: need 0 < alpha < 1");
    if (!is_finite(m)) throw config_error("eigensplit: non-finite entries");
    const Eigen::Index d = m.rows();

    Eigen::ComplexEigenSolver<Matrix> es(m, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
        throw numerical_error("eigensplit: eigensolver did not converge");
    const Vector lam = es.eigenvalues();
    const Matrix v = es.eigenvectors();

    const double inv_alpha = 1.0 / alpha;
    std::vector<int> group(static_cast<size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        const double a = std::abs(lam(i));
        if (std::abs(a - alpha) <= opt.gap_tol * alpha ||
            std::abs(a - inv_alpha) <= opt.gap_tol * inv_alpha)
            throw numerical_error("eigensplit: ambiguous splitting, |lambda| = " +
                                  format_double(a) + " within gap_tol of a boundary");
        group[static_cast<size_t>(i)] = (a < alpha) ? 0 : (a < inv_alpha ? 1 : 2);
    }

    double vcond = cond2(v);
    if (!(vcond <= opt.max_eigvec_cond))
        throw numerical_error("eigensplit: eigenvector conditioning " + format_double(vcond) +
                              " beyond threshold (defective cluster?)");

    Matrix vinv = v.partialPivLu().solve(Matrix::Identity(d, d));
    Splitting s;
    s.alpha = alpha;
    Matrix* ps[3] = {&s.pi_s, &s.pi_c, &s.pi_u};
    for (int k = 0; k < 3; ++k) {
        Matrix ind = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            if (group[static_cast<size_t>(i)] == k) ind(i, i) = 1.0;
        *ps[k] = v * ind * vinv;
    }

    // Real input must give (numerically) real projectors.
    if (m.imag().isZero(0.0)) {
        double imres = std::max({s.pi_s.imag().cwiseAbs().maxCoeff(),
                                 s.pi_c.imag().cwiseAbs().maxCoeff(),
                                 s.pi_u.imag().cwiseAbs().maxCoeff()});
        if (imres > 1e-10)
            throw numerical_error("eigensplit: real input produced imaginary residual " +
                                  format_double(imres));
    }
    return s;
}

PartInResult part_in(const Matrix& m, const Matrix& p, double tol) {
    require_square(m, "part_in");
    require_square(p, "part_in");
    if (m.rows() != p.rows()) throw config_error("part_in: dimension mismatch");
    if (op_norm(p * p - p) > tol)
        throw config_error("part_in: p is not idempotent within tol");

    const Eigen::Index d = p.rows();
    // rank = trace of an idempotent
    const Eigen::Index r = static_cast<Eigen::Index>(std::llround(p.trace().real()));
    PartInResult out;
    if (r == 0) {
        out.basis = Matrix(d, 0);
        out.restricted = Matrix(0, 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeThinU);
    out.basis = svd.matrixU().leftCols(r);
    out.restricted = out.basis.adjoint() * m * out.basis;

    double mscale = std::max(1.0, op_norm(m));
    double inv_res = op_norm(m * out.basis - out.basis * out.restricted);
    if (inv_res > tol * mscale)
        throw structure_error("part_in: subspace not invariant, residual " +
                              format_double(inv_res));
    return out;
}

double Rng::uniform() {
    // 53 random bits -> [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Complex Rng::unit_phase() {
    double th = uniform(0.0, 2.0 * std::numbers::pi);
    return Complex(std::cos(th), std::sin(th));
}

namespace {

Matrix random_unitary(Eigen::Index d, Rng& rng) {
    Matrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) g(i, j) = Complex(rng.gaussian(), rng.gaussian());
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    // fix the phase of R's diagonal so Q is a deterministic function of g
    Matrix rt = q.adjoint() * g;
    for (Eigen::Index j = 0; j < d; ++j) {
        Complex diag = rt(j, j);
        double a = std::abs(diag);
        if (a > 0) q.col(j) *= diag / a;
    }
    return q;
}

}  // namespace

GeneratedInstance random_trichotomic(int dim_s, int dim_c, int dim_u,
                                     const std::array<double, 2>& stable_interval,
                                     const std::array<double, 2>& central_interval,
                                     const std::array<double, 2>& unstable_interval,
                                     std::uint64_t seed, const GeneratorOptions& opt) {
    if (dim_s < 0 || dim_c < 0 || dim_u < 0 || dim_s + dim_c + dim_u < 1)
        throw config_error("random_trichotomic: dims must be >= 0 with total >= 1");
    auto check_interval = [](const std::array<double, 2>& iv, const char* name) {
        if (!(iv[0] > 0.0) || iv[1] < iv[0])
            throw config_error(std::string("random_trichotomic: bad ") + name + " interval");
    };
    check_interval(stable_interval, "stable");
    check_interval(central_interval, "central");
    check_interval(unstable_interval, "unstable");
    if (dim_s > 0 && dim_c > 0 && !(stable_interval[1] < central_interval[0]))
        throw config_error("random_trichotomic: stable/central intervals overlap");
    if (dim_c > 0 && dim_u > 0 && !(central_interval[1] < unstable_interval[0]))
        throw config_error("random_trichotomic: central/unstable intervals overlap");
    if (dim_s > 0 && dim_u > 0 && !(stable_interval[1] < unstable_interval[0]))
        throw config_error("random_trichotomic: stable/unstable intervals overlap");
    if (!(opt.cond_target >= 1.0))
        throw config_error("random_trichotomic: cond_target must be >= 1");

    const Eigen::Index d = dim_s + dim_c + dim_u;
    Rng rng(seed);

    Vector eig(d);
    Eigen::Index pos = 0;
    auto fill = [&](int n, const std::array<double, 2>& iv) {
        for (int i = 0; i < n; ++i) {
            double mod = (iv[0] == iv[1]) ? iv[0] : rng.uniform(iv[0], iv[1]);
            Complex phase = opt.random_phases ? rng.unit_phase() : Complex(1.0, 0.0);
            eig(pos++) = mod * phase;
        }
    };
    fill(dim_s, stable_interval);
    fill(dim_c, central_interval);
    fill(dim_u, unstable_interval);

    Matrix q, qinv;
    double qcond = 1.0;
    if (opt.identity_similarity) {
        q = Matrix::Identity(d, d);
        qinv = q;
    } else {
        // Q = U1 * diag(sigma) * U2^* with log-uniform sigma in [1, cond_target]
        Matrix u1 = random_unitary(d, rng);
        Matrix u2 = random_unitary(d, rng);
        Eigen::VectorXd sig(d);
        for (Eigen::Index i = 0; i < d; ++i)
            sig(i) = std::exp(rng.uniform(0.0, std::log(opt.cond_target)));
        if (d > 1) {  // pin the extremes so the condition number is cond_target
            sig(0) = opt.cond_target;
            sig(d - 1) = 1.0;
        }
        q = u1 * sig.cast<Complex>().asDiagonal() * u2.adjoint();
        qinv = u2 * sig.cwiseInverse().cast<Complex>().asDiagonal() * u1.adjoint();
        qcond = sig.maxCoeff() / sig.minCoeff();
    }

    GeneratedInstance out;
    out.similarity_cond = qcond;
    out.matrix = q * eig.asDiagonal() * qinv;

    auto indicator = [&](Eigen::Index lo, Eigen::Index n) {
        Matrix ind = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < n; ++i) ind(lo + i, lo + i) = 1.0;
        return Matrix(q * ind * qinv);
    };
    out.splitting.pi_s = indicator(0, dim_s);
    out.splitting.pi_c = indicator(dim_s, dim_c);
    out.splitting.pi_u = indicator(dim_s + dim_c, dim_u);

    // alpha must satisfy: stable moduli <= alpha, central in (alpha, 1/alpha),
    // unstable >= 1/alpha. Midpoint of the admissible window.
    double lo = 0.0, hi = 1.0;
    if (dim_s > 0) lo = std::max(lo, stable_interval[1]);
    if (dim_u > 0) lo = std::max(lo, 1.0 / unstable_interval[0]);
    if (dim_c > 0) hi = std::min({hi, central_interval[0], 1.0 / central_interval[1]});
    if (!(lo < hi))
        throw config_error("random_trichotomic: intervals leave no admissible alpha");
    out.splitting.alpha = 0.5 * (lo + hi);
    return out;
}

}  // namespace tri
