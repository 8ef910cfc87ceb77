#include "tri/seqspace.hpp"

#include <algorithm>
#include <cmath>

namespace tri {

OpSeqOneSided zero_one_sided(long horizon, double eta, Eigen::Index dim) {
    OpSeqOneSided u;
    u.horizon = horizon;
    u.eta = eta;
    u.terms.assign(static_cast<size_t>(horizon) + 1, Matrix::Zero(dim, dim));
    return u;
}

OpSeqTwoSided zero_two_sided(long horizon, double eta, Eigen::Index dim) {
    OpSeqTwoSided v;
    v.horizon = horizon;
    v.eta = eta;
    v.terms.assign(static_cast<size_t>(2 * horizon) + 1, Matrix::Zero(dim, dim));
    return v;
}

double weighted_norm(const OpSeqOneSided& u) {
    double r = 0.0;
    for (long n = 0; n <= u.horizon; ++n)
        r = std::max(r, std::exp(u.eta * n) * op_norm(u.at(n)));
    return r;
}

double weighted_norm(const OpSeqTwoSided& v) {
    double r = 0.0;
    for (long n = -v.horizon; n <= v.horizon; ++n)
        r = std::max(r, std::exp(-v.eta * std::abs(n)) * op_norm(v.at(n)));
    return r;
}

double weighted_norm(const EvolutionTriple& z) {
    return std::max({weighted_norm(z.es), weighted_norm(z.eu), weighted_norm(z.ec)});
}

namespace {

void require_same_shape(const EvolutionTriple& a, const EvolutionTriple& b) {
    if (a.es.horizon != b.es.horizon || a.ec.horizon != b.ec.horizon)
        throw config_error("evolution triples: horizon mismatch");
}

template <typename Seq, typename Op>
Seq zip(const Seq& a, const Seq& b, Op op) {
    Seq out = a;
    for (size_t i = 0; i < out.terms.size(); ++i) out.terms[i] = op(a.terms[i], b.terms[i]);
    return out;
}

}  // namespace

EvolutionTriple triple_sum(const EvolutionTriple& a, const EvolutionTriple& b) {
    require_same_shape(a, b);
    auto add = [](const Matrix& x, const Matrix& y) { return Matrix(x + y); };
    return {zip(a.es, b.es, add), zip(a.eu, b.eu, add), zip(a.ec, b.ec, add)};
}

EvolutionTriple triple_diff(const EvolutionTriple& a, const EvolutionTriple& b) {
    require_same_shape(a, b);
    auto sub = [](const Matrix& x, const Matrix& y) { return Matrix(x - y); };
    return {zip(a.es, b.es, sub), zip(a.eu, b.eu, sub), zip(a.ec, b.ec, sub)};
}

OpSeqOneSided conv_phi(const Matrix& c, const OpSeqOneSided& u) {
    require_square(c, "conv_phi");
    if (u.terms.empty()) throw config_error("conv_phi: empty sequence");
    if (c.rows() != u.terms[0].rows()) throw config_error("conv_phi: dimension mismatch");

    const Eigen::Index d = c.rows();
    OpSeqOneSided out = zero_one_sided(u.horizon, u.eta, d);
    std::vector<Matrix> cpow(static_cast<size_t>(std::max(0L, u.horizon)));
    if (!cpow.empty()) {
        cpow[0] = Matrix::Identity(d, d);
        for (size_t m = 1; m < cpow.size(); ++m) cpow[m] = c * cpow[m - 1];
    }
    for (long n = 1; n <= u.horizon; ++n) {
        Matrix acc = Matrix::Zero(d, d);
        for (long m = 0; m < n; ++m) acc += cpow[static_cast<size_t>(m)] * u.at(n - 1 - m);
        out.at(n) = acc;
    }
    return out;
}

namespace {

// shared Theta_C core: out[n] = sum_{m=0}^{K_n} C^m u[n+m] with K_n the last
// stored offset, plus the geometric tail bound
//   kappa q^{K+1}/(1 - q g) * |u|_w * w(n+K+1),
// where g is the one-step growth of the weight envelope w.
struct ThetaCore {
    std::vector<Matrix> vals;
    std::vector<double> tails;
    double tail_sup_weighted = 0.0;
};

template <typename WeightFn>
ThetaCore theta_core(const Matrix& c, const std::vector<Matrix>& uterms, long lo, long hi,
                     double kappa_c, double q, double g, double unorm, WeightFn weight) {
    if (!(kappa_c >= 0.0) || !(q >= 0.0) || !(q < 1.0))
        throw config_error("tail_theta: need kappa >= 0 and 0 <= q < 1");
    if (q * g >= 1.0)
        throw numerical_error("tail_theta: series not summable (q * growth >= 1)");
    const Eigen::Index d = c.rows();
    const long count = hi - lo + 1;
    ThetaCore out;
    out.vals.assign(static_cast<size_t>(count), Matrix::Zero(d, d));
    out.tails.assign(static_cast<size_t>(count), 0.0);

    // backward recurrence: T_n = u[n] + C T_{n+1}
    Matrix acc = Matrix::Zero(d, d);
    for (long n = hi; n >= lo; --n) {
        acc = uterms[static_cast<size_t>(n - lo)] + c * acc;
        out.vals[static_cast<size_t>(n - lo)] = acc;
        long k_last = hi - n;  // offsets m = 0..k_last are stored
        double tail = kappa_c * std::pow(q, static_cast<double>(k_last + 1)) /
                      (1.0 - q * g) * unorm * weight(n + k_last + 1);
        out.tails[static_cast<size_t>(n - lo)] = tail;
        out.tail_sup_weighted = std::max(out.tail_sup_weighted, tail / weight(n));
    }
    return out;
}

}  // namespace

TailThetaResult tail_theta(const Matrix& c, const OpSeqOneSided& u, double kappa_c,
                           double q, double tail_tol) {
    require_square(c, "tail_theta");
    if (u.terms.empty() || c.rows() != u.terms[0].rows())
        throw config_error("tail_theta: dimension mismatch");
    const double unorm = weighted_norm(u);
    const double g = std::exp(-u.eta);  // |u_j| <= |u| e^{-eta j}
    auto weight = [&](long j) { return std::exp(-u.eta * j); };
    ThetaCore core = theta_core(c, u.terms, 0, u.horizon, kappa_c, q, g, unorm, weight);

    TailThetaResult out;
    out.input_two_sided = false;
    out.one_sided.horizon = u.horizon;
    out.one_sided.eta = u.eta;
    out.one_sided.terms = std::move(core.vals);
    out.tail_bound = std::move(core.tails);
    out.tail_sup_weighted = core.tail_sup_weighted;
    out.within_tol = out.tail_sup_weighted <= tail_tol * (1.0 + unorm);
    return out;
}

TailThetaResult tail_theta(const Matrix& c, const OpSeqTwoSided& u, double kappa_c,
                           double q, double tail_tol) {
    require_square(c, "tail_theta");
    if (u.terms.empty() || c.rows() != u.terms[0].rows())
        throw config_error("tail_theta: dimension mismatch");
    const double unorm = weighted_norm(u);
    const double g = std::exp(u.eta);  // |u_j| <= |u| e^{eta |j|}
    auto weight = [&](long j) { return std::exp(u.eta * std::abs(j)); };
    ThetaCore core = theta_core(c, u.terms, -u.horizon, u.horizon, kappa_c, q, g, unorm,
                                weight);

    TailThetaResult out;
    out.input_two_sided = true;
    out.two_sided.horizon = u.horizon;
    out.two_sided.eta = u.eta;
    out.two_sided.terms = std::move(core.vals);
    out.tail_bound = std::move(core.tails);
    out.tail_sup_weighted = core.tail_sup_weighted;
    out.within_tol = out.tail_sup_weighted <= tail_tol * (1.0 + unorm);
    return out;
}

OpSeqOneSided shift_s_minus(const OpSeqOneSided& u) {
    if (u.horizon < 1) throw config_error("shift_s_minus: horizon too small");
    OpSeqOneSided out;
    out.horizon = u.horizon - 1;
    out.eta = u.eta;
    out.terms.assign(u.terms.begin() + 1, u.terms.end());
    return out;
}

OpSeqTwoSided shift_s_minus(const OpSeqTwoSided& u) {
    if (u.horizon < 1) throw config_error("shift_s_minus: horizon too small");
    OpSeqTwoSided out;
    out.horizon = u.horizon - 1;
    out.eta = u.eta;
    out.terms.assign(u.terms.begin() + 2, u.terms.end());
    return out;
}

OpSeqOneSided restrict_chi(ShiftKind kind, const OpSeqTwoSided& u) {
    if (kind == ShiftKind::s_minus)
        throw config_error("restrict_chi: use shift_s_minus for the shift");
    OpSeqOneSided out;
    out.horizon = u.horizon;
    out.eta = -u.eta;  // growth class on N
    out.terms.resize(static_cast<size_t>(u.horizon) + 1);
    for (long n = 0; n <= u.horizon; ++n)
        out.at(n) = (kind == ShiftKind::chi_plus) ? u.at(n) : u.at(-n);
    return out;
}

EvolutionTriple unperturbed_triple(const PartPowers& pp, const RateParams& rates,
                                   long horizon) {
    if (horizon > pp.horizon()) throw config_error("unperturbed_triple: horizon too large");
    const Eigen::Index d = pp.ps[0].rows();
    EvolutionTriple z;
    z.es = zero_one_sided(horizon, rates.rho_hat, d);
    z.eu = zero_one_sided(horizon, rates.rho_hat, d);
    z.ec = zero_two_sided(horizon, rates.rho0_hat, d);
    for (long n = 0; n <= horizon; ++n) {
        z.es.at(n) = pp.ps[static_cast<size_t>(n)];
        z.eu.at(n) = pp.pu[static_cast<size_t>(n)];
    }
    for (long n = -horizon; n <= horizon; ++n) z.ec.at(n) = pp.pc(n);
    return z;
}

// J(Z) evaluated through one-step recurrences. Every sum below is the
// corresponding sum of the fixed-point system with out-of-horizon terms of Z
// read as zero; prefactor powers are exact. The one-step generators satisfy
//   as1 ps[k] = ps[k+1],  au_inv pu[k] = pu[k+1],
//   ac1 pc(k) = pc(k+1),  ac_inv pc(k) = pc(k-1),
// and cross products such as au_inv pc(k) vanish by orthogonality.
EvolutionTriple apply_j(const PartPowers& pp, const Matrix& b, const EvolutionTriple& z) {
    const Eigen::Index d = pp.ps[0].rows();
    if (b.rows() != d || b.cols() != d) throw config_error("apply_j: dimension mismatch");
    const long n_h = z.es.horizon;
    if (z.eu.horizon != n_h || z.ec.horizon != n_h)
        throw config_error("apply_j: triple components must share one horizon");
    if (n_h + 1 > pp.horizon())
        throw config_error("apply_j: part powers shorter than horizon+1");

    const Matrix& pi_s = pp.ps[0];
    const Matrix& pi_c = pp.pc_fwd[0];
    const Matrix zero = Matrix::Zero(d, d);

    std::vector<Matrix> vs(static_cast<size_t>(n_h) + 1), vu(static_cast<size_t>(n_h) + 1);
    std::vector<Matrix> vc(static_cast<size_t>(2 * n_h) + 1);
    for (long m = 0; m <= n_h; ++m) {
        vs[static_cast<size_t>(m)] = b * z.es.at(m);
        vu[static_cast<size_t>(m)] = b * z.eu.at(m);
    }
    for (long m = -n_h; m <= n_h; ++m) vc[static_cast<size_t>(m + n_h)] = b * z.ec.at(m);
    auto Vs = [&](long m) -> const Matrix& { return vs[static_cast<size_t>(m)]; };
    auto Vu = [&](long m) -> const Matrix& { return vu[static_cast<size_t>(m)]; };
    auto Vc = [&](long m) -> const Matrix& { return vc[static_cast<size_t>(m + n_h)]; };

    EvolutionTriple out;
    out.es = zero_one_sided(n_h, z.es.eta, d);
    out.eu = zero_one_sided(n_h, z.eu.eta, d);
    out.ec = zero_two_sided(n_h, z.ec.eta, d);

    // ---- stable row:
    //   -sum_{m=0}^{N-1} A_s^{m+n} Pi_s B [E^u_{m+1} + E^c_{-m-1}]
    //   +sum_{m=0}^{n-1} A_s^{n-m-1} Pi_s B E^s_m
    //   -sum_{m=0}^{N-n} [A_u^{-m-1} Pi_u + A_c^{-m-1} Pi_c] B E^s_{n+m}
    {
        Matrix s1 = zero;
        for (long m = 0; m < n_h; ++m)
            s1 += pp.ps[static_cast<size_t>(m)] * (Vu(m + 1) + Vc(-m - 1));
        const Matrix g1 = pp.au_inv + pp.ac_inv;
        std::vector<Matrix> t3(static_cast<size_t>(n_h) + 1);
        t3[static_cast<size_t>(n_h)] = g1 * Vs(n_h);
        for (long n = n_h - 1; n >= 0; --n)
            t3[static_cast<size_t>(n)] = g1 * (Vs(n) + t3[static_cast<size_t>(n + 1)]);
        Matrix t1 = s1;
        Matrix t2 = zero;
        for (long n = 0; n <= n_h; ++n) {
            out.es.at(n) = -t1 + t2 - t3[static_cast<size_t>(n)];
            if (n < n_h) {
                t1 = pp.as1 * t1;
                t2 = pp.as1 * t2 + pi_s * Vs(n);
            }
        }
    }

    // ---- unstable row:
    //   +sum_{m=0}^{N}   A_u^{-n-m-1} Pi_u B [E^s_m + E^c_m]
    //   -sum_{m=0}^{n-1} A_u^{-m-1} Pi_u B E^u_{n-m}
    //   +sum_{m=0}^{N-n-1} [A_s^m Pi_s + A_c^m Pi_c] B E^u_{n+m+1}
    {
        Matrix s2 = zero;
        for (long m = 0; m <= n_h; ++m)
            s2 += pp.pu[static_cast<size_t>(m + 1)] * (Vs(m) + Vc(m));
        const Matrix fwd = pp.as1 + pp.ac1;
        const Matrix seed = pi_s + pi_c;
        std::vector<Matrix> u3(static_cast<size_t>(n_h) + 1);
        u3[static_cast<size_t>(n_h)] = zero;
        for (long n = n_h - 1; n >= 0; --n)
            u3[static_cast<size_t>(n)] = seed * Vu(n + 1) + fwd * u3[static_cast<size_t>(n + 1)];
        Matrix u1 = s2;
        Matrix u2 = zero;
        for (long n = 0; n <= n_h; ++n) {
            out.eu.at(n) = u1 - u2 + u3[static_cast<size_t>(n)];
            if (n < n_h) {
                u1 = pp.au_inv * u1;
                u2 = pp.au_inv * u2 + pp.pu[1] * Vu(n + 1);
            }
        }
    }

    // ---- central row:
    //   -sum_{m=0}^{N-1} A_c^{m+n} Pi_c B E^u_{m+1}
    //   +sum_{m=0}^{N}   A_c^{n-m-1} Pi_c B E^s_m
    //   +sum_{m=0}^{n-1} A_c^{n-m-1} Pi_c B E^c_m          (n >= 1)
    //   -sum_{m=0}^{-n-1} A_c^{-m-1} Pi_c B E^c_{n+m}      (n <= -1)
    //   -sum_{m=0}^{N-n} A_u^{-m-1} Pi_u B E^c_{n+m}
    //   +sum_{m=0}^{n-1+N} A_s^m Pi_s B E^c_{n-m-1}
    {
        Matrix sc1 = zero, sc2 = zero;
        for (long m = 0; m < n_h; ++m) sc1 += pp.pc(m) * Vu(m + 1);
        for (long m = 0; m <= n_h; ++m) sc2 += pp.pc(-m - 1) * Vs(m);

        const size_t len = static_cast<size_t>(2 * n_h) + 1;
        auto idx = [&](long n) { return static_cast<size_t>(n + n_h); };
        std::vector<Matrix> c1(len), c2(len), c3(len), c4(len), c5(len), c6(len);

        c1[idx(0)] = sc1;
        c2[idx(0)] = sc2;
        for (long n = 0; n < n_h; ++n) {
            c1[idx(n + 1)] = pp.ac1 * c1[idx(n)];
            c2[idx(n + 1)] = pp.ac1 * c2[idx(n)];
        }
        for (long n = 0; n > -n_h; --n) {
            c1[idx(n - 1)] = pp.ac_inv * c1[idx(n)];
            c2[idx(n - 1)] = pp.ac_inv * c2[idx(n)];
        }

        c3[idx(-n_h)] = zero;  // vanishes for n <= 0
        for (long n = -n_h; n < n_h; ++n)
            c3[idx(n + 1)] = (n < 0) ? zero : Matrix(pp.ac1 * c3[idx(n)] + pi_c * Vc(n));

        c4[idx(n_h)] = zero;  // vanishes for n >= 0
        c4[idx(0)] = zero;
        for (long n = 0; n > -n_h; --n)
            c4[idx(n - 1)] = pp.ac_inv * (Vc(n - 1) + c4[idx(n)]);
        for (long n = 1; n <= n_h; ++n) c4[idx(n)] = zero;

        c5[idx(n_h)] = pp.pu[1] * Vc(n_h);
        for (long n = n_h - 1; n >= -n_h; --n)
            c5[idx(n)] = pp.pu[1] * Vc(n) + pp.au_inv * c5[idx(n + 1)];

        c6[idx(-n_h)] = zero;
        for (long n = -n_h; n < n_h; ++n)
            c6[idx(n + 1)] = pi_s * Vc(n) + pp.as1 * c6[idx(n)];

        for (long n = -n_h; n <= n_h; ++n)
            out.ec.at(n) = -c1[idx(n)] + c2[idx(n)] + c3[idx(n)] - c4[idx(n)] -
                           c5[idx(n)] + c6[idx(n)];
    }

    return out;
}

EvolutionTriple apply_j(const Matrix& a, const TrichotomyCertificate& cert,
                        const Matrix& b, const RateParams& rates,
                        const EvolutionTriple& z) {
    rates.require_interlacing(cert, "apply_j");
    PartPowers pp = build_part_powers(a, cert.splitting, z.es.horizon + 1);
    return apply_j(pp, b, z);
}

namespace {

struct BlockBounds {
    double phi_su;    // Phi_s and Phi_u on L_{-rho_hat}
    double theta_cusc;  // Theta_cu and Theta_sc on L_{-rho_hat}
    double phi_c;     // Phi_c on L_{rho0_hat}
    double theta_su;  // Theta_su on L_{rho0_hat}
    double theta_i;   // Theta_s / Theta_u from L_{rho0_hat}(N)
    double theta_ii;  // Theta_s / Theta_u from L_{-rho_hat}(N)
    double fixed_cu;  // |A_u^{-1} Pi_u| + |A_c^{-1} Pi_c| envelopes
    double pre;       // prefactor families A_s^. Pi_s etc. as maps L(X) -> sequence
    double shift_growth;  // S_- on the growth class
};

BlockBounds block_bounds(double kappa, double rho0, double rho, double rho0_hat,
                         double rho_hat) {
    BlockBounds b;
    b.phi_su = kappa * std::exp(rho_hat) / (1.0 - std::exp(rho_hat - rho));
    b.theta_cusc = kappa / (1.0 - std::exp(rho0 - rho_hat)) +
                   kappa / (1.0 - std::exp(-(rho + rho_hat)));
    b.phi_c = kappa / (1.0 - std::exp(rho0 - rho0_hat));
    b.theta_su = (kappa * std::exp(rho_hat) + kappa * std::exp(-rho_hat)) /
                 (1.0 - std::exp(rho0_hat - rho_hat));
    b.theta_i = kappa / (1.0 - std::exp(rho0_hat - rho));
    b.theta_ii = kappa / (1.0 - std::exp(-rho_hat - rho));
    b.fixed_cu = kappa * std::exp(-rho) + kappa * std::exp(rho0);
    b.pre = kappa;
    b.shift_growth = std::exp(rho0_hat);
    return b;
}

}  // namespace

double bound_c(const TrichotomyCertificate& cert, const RateParams& rates) {
    rates.require_interlacing(cert, "bound_c");
    BlockBounds b = block_bounds(cert.kappa, cert.rho0, cert.rho, rates.rho0_hat,
                                 rates.rho_hat);
    const double kappa = cert.kappa;
    const double au1 = kappa * std::exp(-cert.rho);  // |A_u^{-1} Pi_u| envelope

    double b11 = b.pre * b.theta_cusc * b.fixed_cu + b.phi_su + b.theta_cusc * b.fixed_cu;
    double b12 = b.pre * b.theta_ii;
    double b13 = b.pre * b.theta_i * b.shift_growth;
    double row1 = b11 + b12 + b13;

    double b21 = b.pre * b.theta_ii * au1;
    double b22 = b.pre * b.theta_cusc + b.phi_su * au1 + b.theta_cusc;
    double b23 = b.pre * b.theta_i * au1;
    double row2 = b21 + b22 + b23;

    double b31 = b.pre * b.theta_cusc * b.fixed_cu + b.pre * b.theta_ii * au1;
    double b32 = b.pre * b.theta_ii + b.pre * b.theta_cusc;
    double b33 = b.pre * b.theta_i * b.shift_growth + b.pre * b.theta_i * au1 + b.phi_c +
                 b.theta_su;
    double row3 = b31 + b32 + b33;

    return std::max({row1, row2, row3});
}

PerturbationBudget compute_budget(const TrichotomyCertificate& cert,
                                  const RateParams& rates, const Matrix& b) {
    const double margin = 1e-3;
    PerturbationBudget out;
    out.contraction_c = bound_c(cert, rates);
    const double c = out.contraction_c;
    const double kappa = cert.kappa;
    double cap = std::min(1.0 / c, std::sqrt(2.0) - 1.0);
    if (c > 1.0) {
        double cinv = 1.0 / c;
        cap = std::min(cap, (1.0 - cinv) / (6.0 * kappa * kappa * kappa + 1.0 - cinv));
    }
    out.delta0 = (1.0 - margin) * cap;
    out.delta_max = out.delta0 * out.delta0 / (kappa + out.delta0);
    out.delta = op_norm(b);
    out.admissible = out.delta < out.delta_max;
    return out;
}

double truncation_tail_bound(const TrichotomyCertificate& cert, const RateParams& rates,
                             long horizon, double delta, double z_norm,
                             double contraction) {
    // Sum of the weighted tails dropped by each truncated series of J; the
    // envelope |A_s^k Pi_s| <= kappa e^{-rho k} (etc.) is extrapolated past
    // the certificate horizon, which rate-feasibility justifies.
    const double kappa = cert.kappa;
    const double rho0 = cert.rho0, rho = cert.rho;
    const double rh = rates.rho_hat, rh0 = rates.rho0_hat;
    const double n = static_cast<double>(horizon);
    auto geo = [](double log_ratio) { return 1.0 / (1.0 - std::exp(log_ratio)); };

    // stable row
    double t1 = std::exp(-rh) * std::exp(-(rho + rh) * n) * geo(-(rho + rh)) +
                std::exp(rho0) * std::exp(-(rho - rho0) * n) * geo(-(rho - rho0));
    double t3 = std::exp(-rho) * std::exp(-(rho + rh)) * geo(-(rho + rh)) +
                std::exp(rho0) * std::exp(rho0 - rh) * geo(rho0 - rh);
    // unstable row
    double u1 = std::exp(-rho) * (std::exp(-(rho + rh) * (n + 1)) * geo(-(rho + rh)) +
                                  std::exp(-(rho - rh0) * (n + 1)) * geo(-(rho - rh0)));
    double u3 = std::exp(-rh) * (geo(-(rho + rh)) + geo(rho0 - rh));
    // central row
    double c1 = std::exp(-rh) * std::exp(-(rh - rho0) * n) * geo(rho0 - rh);
    double c2 = std::exp(rho0) * std::exp(-(rh - rho0) * (n + 1)) * geo(rho0 - rh);
    double c5 = std::exp(-rho) * std::exp(rh0 - rho) * geo(rh0 - rho);
    double c6 = std::exp(rh0) * geo(rh0 - rho);

    double row_max = std::max({t1 + t3, u1 + u3, c1 + c2 + c5 + c6});
    double tau = kappa * delta * z_norm * row_max;
    double amplify = contraction < 1.0 ? 1.0 / (1.0 - contraction) : 1.0;
    return tau * amplify;
}

}  // namespace tri
