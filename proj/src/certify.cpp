#include "tri/certify.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace tri {

namespace {

// A_?^{-1} Pi_? as a full-space matrix: invert the restriction of a to
// range(p) on an orthonormal basis. Zero-rank parts give the zero matrix.
Matrix inverse_step(const Matrix& a, const Matrix& p, double tol, const char* part) {
    const Eigen::Index d = a.rows();
    const Eigen::Index r = static_cast<Eigen::Index>(std::llround(p.trace().real()));
    if (r == 0) return Matrix::Zero(d, d);
    PartInResult pr = part_in(a, p, tol);
    Eigen::JacobiSVD<Matrix> svd(pr.restricted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
        throw numerical_error(std::string("part not invertible: ") + part);
    Matrix rinv = svd.matrixV() * s.cwiseInverse().cast<Complex>().asDiagonal() *
                  svd.matrixU().adjoint();
    return pr.basis * rinv * pr.basis.adjoint() * p;
}

}  // namespace

PartPowers build_part_powers(const Matrix& a, const Splitting& split, long n_max,
                             double tol) {
    require_square(a, "build_part_powers");
    if (a.rows() != split.dim()) throw config_error("build_part_powers: dim mismatch");
    if (n_max < 0) throw config_error("build_part_powers: negative horizon");
    double scale = std::max(1.0, op_norm(a));
    for (const Matrix* p : {&split.pi_s, &split.pi_c, &split.pi_u}) {
        double comm = op_norm(a * *p - *p * a);
        if (comm > tol * scale)
            throw structure_error("build_part_powers: projector does not commute with a, "
                                  "residual " + format_double(comm));
    }

    PartPowers pp;
    pp.as1 = a * split.pi_s;
    pp.ac1 = a * split.pi_c;
    pp.au_inv = inverse_step(a, split.pi_u, tol, "unstable");
    pp.ac_inv = inverse_step(a, split.pi_c, tol, "central");

    const size_t n = static_cast<size_t>(n_max);
    pp.ps.resize(n + 1);
    pp.pu.resize(n + 1);
    pp.pc_fwd.resize(n + 1);
    pp.pc_bwd.resize(n + 1);
    pp.ps[0] = split.pi_s;
    pp.pu[0] = split.pi_u;
    pp.pc_fwd[0] = split.pi_c;
    pp.pc_bwd[0] = split.pi_c;
    for (size_t k = 1; k <= n; ++k) {
        pp.ps[k] = pp.as1 * pp.ps[k - 1];
        pp.pu[k] = pp.au_inv * pp.pu[k - 1];
        pp.pc_fwd[k] = pp.ac1 * pp.pc_fwd[k - 1];
        pp.pc_bwd[k] = pp.ac_inv * pp.pc_bwd[k - 1];
    }
    return pp;
}

void RateParams::require_interlacing(const TrichotomyCertificate& cert,
                                     const char* who) const {
    if (!(cert.rho0 < rho0_hat && rho0_hat < rho_hat && rho_hat < cert.rho))
        throw config_error(std::string(who) +
                           ": rates must satisfy rho0 < rho0_hat < rho_hat < rho");
    if (kappa_hat != 0.0 && !(kappa_hat > cert.kappa))
        throw config_error(std::string(who) + ": kappa_hat must exceed kappa");
}

KappaMeasurement measure_kappa(const Matrix& m, const Splitting& split, double rho0,
                               double rho, long n_horizon, double tol) {
    if (!(0.0 < rho0 && rho0 < rho)) throw config_error("measure_kappa: need 0 < rho0 < rho");
    if (n_horizon < 1) throw config_error("measure_kappa: horizon must be >= 1");
    PartPowers pp = build_part_powers(m, split, n_horizon, tol);

    // envelope-normalized norms per family; kappa is their overall max
    std::vector<double> vs, vu, vcp, vcm;
    for (long k = 0; k <= n_horizon; ++k) {
        vs.push_back(op_norm(pp.ps[static_cast<size_t>(k)]) * std::exp(rho * k));
        vu.push_back(op_norm(pp.pu[static_cast<size_t>(k)]) * std::exp(rho * k));
        vcp.push_back(op_norm(pp.pc(k)) * std::exp(-rho0 * k));
        vcm.push_back(op_norm(pp.pc(-k)) * std::exp(-rho0 * k));
    }

    KappaMeasurement out;
    out.kappa = 1.0;
    for (const auto* v : {&vs, &vu, &vcp, &vcm})
        for (double x : *v) out.kappa = std::max(out.kappa, x);

    // The finite-horizon max is only the true sup when the normalized norms
    // have stopped climbing; a boundary max that is still strictly increasing
    // marks the requested rates as infeasible for this operator.
    const double grow_tol = 1e-9;
    for (const auto* v : {&vs, &vu, &vcp, &vcm}) {
        const auto& w = *v;
        size_t last = w.size() - 1;
        if (last < 3) continue;
        double vmax = *std::max_element(w.begin(), w.end());
        if (vmax <= 0.0) continue;
        bool boundary_max = w[last] >= vmax * (1.0 - 1e-12);
        bool climbing = w[last] > w[last - 1] * (1.0 + grow_tol) &&
                        w[last - 1] > w[last - 2] * (1.0 + grow_tol);
        if (boundary_max && climbing) {
            out.rate_infeasible = true;
            out.tail_slope = std::max(out.tail_slope, std::log(w[last] / w[last - 1]));
        }
    }
    return out;
}

TrichotomyCertificate certify(const Matrix& m, double alpha, double rho0, double rho,
                              long n_horizon, const EigensplitOptions& opt) {
    Splitting split = eigensplit(m, alpha, opt);
    KappaMeasurement km = measure_kappa(m, split, rho0, rho, n_horizon);
    if (km.rate_infeasible)
        throw structure_error("certify: rates (rho0=" + format_double(rho0) + ", rho=" +
                              format_double(rho) + ") are infeasible for this operator, "
                              "normalized envelope still growing at horizon (slope " +
                              format_double(km.tail_slope) + ")");
    TrichotomyCertificate cert;
    cert.splitting = std::move(split);
    cert.kappa = km.kappa;
    cert.rho0 = rho0;
    cert.rho = rho;
    cert.horizon_checked = n_horizon;
    return cert;
}

namespace {

struct RestrictedInverse {
    Invertibility status = Invertibility::failed;
    double norm = 0.0;
    double compose_residual = 0.0;
};

// Inverse of p restricted from range(phat) onto range(p), on orthonormal
// bases of the two ranges. Least-squares residual decides invertibility.
RestrictedInverse restricted_inverse(const Matrix& p, const Matrix& phat, double tol) {
    RestrictedInverse out;
    const Eigen::Index rp = static_cast<Eigen::Index>(std::llround(p.trace().real()));
    const Eigen::Index rh = static_cast<Eigen::Index>(std::llround(phat.trace().real()));
    if (rp != rh) return out;  // ranks differ: cannot be invertible
    if (rp == 0) {             // trivial spaces: inverse is the zero map
        out.status = Invertibility::attempted_ok;
        out.norm = 0.0;
        return out;
    }
    Eigen::JacobiSVD<Matrix> svp(p, Eigen::ComputeThinU);
    Eigen::JacobiSVD<Matrix> svh(phat, Eigen::ComputeThinU);
    Matrix q = svp.matrixU().leftCols(rp);    // range(p)
    Matrix qh = svh.matrixU().leftCols(rh);   // range(phat)
    Matrix mm = q.adjoint() * (p * qh);       // restricted map in these bases

    Eigen::JacobiSVD<Matrix> svm(mm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svm.singularValues();
    if (s(s.size() - 1) <= 1e-14 * std::max(1.0, s(0))) return out;
    Matrix minv = svm.matrixV() * s.cwiseInverse().cast<Complex>().asDiagonal() *
                  svm.matrixU().adjoint();
    double res = op_norm(mm * minv - Matrix::Identity(rp, rp));
    if (res > std::max(tol, 1e-10)) return out;
    out.status = Invertibility::attempted_ok;
    out.norm = 1.0 / s(s.size() - 1);
    // compose the restricted map with its inverse on range(p)
    Matrix inv_map = qh * minv * q.adjoint();           // range(p) -> range(phat)
    out.compose_residual = op_norm(p * inv_map * q - q);
    return out;
}

}  // namespace

ContinuityReport projector_continuity(const Matrix& p, const Matrix& phat, double tol) {
    require_square(p, "projector_continuity");
    require_square(phat, "projector_continuity");
    if (p.rows() != phat.rows()) throw config_error("projector_continuity: dim mismatch");
    if (op_norm(p * p - p) > tol || op_norm(phat * phat - phat) > tol)
        throw config_error("projector_continuity: inputs must be idempotent within tol");

    ContinuityReport rep;
    rep.delta = op_norm(p - phat);
    rep.bound_applies = rep.delta < std::sqrt(2.0) - 1.0;
    rep.inverse_bound = rep.delta < 1.0 ? 1.0 / (1.0 - rep.delta) : 0.0;

    RestrictedInverse ri = restricted_inverse(p, phat, tol);
    rep.inverse_norm = ri.norm;
    rep.compose_residual = ri.compose_residual;
    rep.invertible = (ri.status == Invertibility::attempted_ok)
                         ? (rep.bound_applies ? Invertibility::guaranteed
                                              : Invertibility::attempted_ok)
                         : Invertibility::failed;

    RestrictedInverse rs = restricted_inverse(phat, p, tol);
    rep.swapped_inverse_norm = rs.norm;
    rep.swapped_compose_residual = rs.compose_residual;
    rep.swapped_invertible = (rs.status == Invertibility::attempted_ok)
                                 ? (rep.bound_applies ? Invertibility::guaranteed
                                                      : Invertibility::attempted_ok)
                                 : Invertibility::failed;
    return rep;
}

}  // namespace tri
