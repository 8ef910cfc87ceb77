#include "tri/howland.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace tri {

void PeriodicSystem::require_valid(const char* who) const {
    if (period < 1 || blocks.size() != static_cast<size_t>(period))
        throw config_error(std::string(who) + ": need period >= 1 matching block count");
    const Eigen::Index d = dim();
    for (const Matrix& b : blocks) {
        if (b.rows() != b.cols() || b.rows() != d)
            throw config_error(std::string(who) + ": blocks must be square of equal size");
        if (!is_finite(b)) throw config_error(std::string(who) + ": non-finite block");
    }
}

Matrix evolution(const PeriodicSystem& sys, long n, long m) {
    sys.require_valid("evolution");
    if (n < m) throw config_error("evolution: backward evolution requested (n < m)");
    Matrix u = Matrix::Identity(sys.dim(), sys.dim());
    for (long k = m; k < n; ++k) u = sys.block(k) * u;
    return u;
}

double family_intertwining_residual(const PeriodicSystem& sys,
                                    const FamilySplitting& fam) {
    double r = 0.0;
    for (long n = 0; n < sys.period; ++n) {
        const Matrix& a = sys.block(n);
        const Splitting& cur = fam.at(n);
        const Splitting& nxt = fam.at(n + 1);
        r = std::max({r, op_norm(nxt.pi_s * a - a * cur.pi_s),
                      op_norm(nxt.pi_c * a - a * cur.pi_c),
                      op_norm(nxt.pi_u * a - a * cur.pi_u)});
    }
    return r;
}

namespace {

// one-step restricted backward map: x in range(pi_from) with A_k x = y,
// represented on orthonormal bases of the two ranges
struct BackwardStep {
    Matrix basis_from;  // range at time k
    Matrix basis_to;    // range at time k+1
    Matrix rinv;        // inverse of the restricted step
};

BackwardStep backward_step(const Matrix& a, const Matrix& pi_from, const Matrix& pi_to,
                           const char* part) {
    BackwardStep out;
    const Eigen::Index d = a.rows();
    const Eigen::Index r = static_cast<Eigen::Index>(std::llround(pi_from.trace().real()));
    if (r == 0) {
        out.basis_from = Matrix(d, 0);
        out.basis_to = Matrix(d, 0);
        out.rinv = Matrix(0, 0);
        return out;
    }
    Eigen::JacobiSVD<Matrix> sf(pi_from, Eigen::ComputeThinU);
    Eigen::JacobiSVD<Matrix> st(pi_to, Eigen::ComputeThinU);
    out.basis_from = sf.matrixU().leftCols(r);
    out.basis_to = st.matrixU().leftCols(r);
    Matrix step = out.basis_to.adjoint() * (a * out.basis_from);
    Eigen::JacobiSVD<Matrix> ss(step, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = ss.singularValues();
    if (s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
        throw numerical_error(std::string("floquet: non-invertible ") + part +
                              " propagation step");
    out.rinv = ss.matrixV() * s.cwiseInverse().cast<Complex>().asDiagonal() *
               ss.matrixU().adjoint();
    return out;
}

const Matrix& family_proj(const FamilySplitting& fam, char alpha, long n) {
    const Splitting& s = fam.at(n);
    switch (alpha) {
        case 's': return s.pi_s;
        case 'c': return s.pi_c;
        case 'u': return s.pi_u;
        default: throw config_error("family_proj: alpha must be one of s/c/u");
    }
}

}  // namespace

Matrix projected_evolution_fwd(const PeriodicSystem& sys, const FamilySplitting& fam,
                               char alpha, long n, long m) {
    if (n < m) throw config_error("projected_evolution_fwd: n < m");
    return evolution(sys, n, m) * family_proj(fam, alpha, m);
}

Matrix projected_evolution_bwd(const PeriodicSystem& sys, const FamilySplitting& fam,
                               char alpha, long m, long n) {
    if (alpha != 'c' && alpha != 'u')
        throw config_error("projected_evolution_bwd: backward only for c/u");
    if (n < m) throw config_error("projected_evolution_bwd: n < m");
    const Matrix& pi_n = family_proj(fam, alpha, n);
    const Eigen::Index d = sys.dim();
    const Eigen::Index r = static_cast<Eigen::Index>(std::llround(pi_n.trace().real()));
    if (r == 0) return Matrix::Zero(d, d);

    // accumulate R_m^{-1} ... R_{n-1}^{-1} on the per-step bases
    Matrix acc = Matrix::Identity(r, r);
    Matrix basis_m;
    for (long k = n - 1; k >= m; --k) {
        BackwardStep bs = backward_step(sys.block(k), family_proj(fam, alpha, k),
                                        family_proj(fam, alpha, k + 1),
                                        alpha == 'c' ? "central" : "unstable");
        acc = bs.rinv * acc;
        basis_m = bs.basis_from;
        if (k == n - 1) {
            // align with the projector at time n
            acc = acc * (bs.basis_to.adjoint() * pi_n).eval();
        }
    }
    if (n == m) return pi_n;
    return basis_m * acc;
}

FamilySplitting floquet_split(const PeriodicSystem& sys, double alpha, double rho0,
                              double rho, long n_horizon, const EigensplitOptions& opt) {
    sys.require_valid("floquet_split");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("floquet_split: need alpha in (0,1)");
    if (!(0.0 < rho0 && rho0 < rho)) throw config_error("floquet_split: need 0 < rho0 < rho");

    const long t = sys.period;
    const double alpha_period = std::pow(alpha, static_cast<double>(t));

    FamilySplitting fam;
    fam.rho0 = rho0;
    fam.rho = rho;
    fam.horizon_checked = n_horizon;
    fam.at_time.reserve(static_cast<size_t>(t));
    for (long n = 0; n < t; ++n) {
        Matrix monodromy = evolution(sys, n + t, n);
        Splitting s = eigensplit(monodromy, alpha_period, opt);
        s.alpha = alpha;  // report the per-step rate
        fam.at_time.push_back(std::move(s));
    }

    // measured envelope constant over the horizon, Definition 1.6 (iv)
    double kap = 1.0;
    for (long m = 0; m < t; ++m) {
        Matrix ufwd = Matrix::Identity(sys.dim(), sys.dim());
        for (long j = 0; j <= n_horizon; ++j) {
            if (j > 0) ufwd = sys.block(m + j - 1) * ufwd;
            kap = std::max(kap, op_norm(ufwd * fam.at(m).pi_s) * std::exp(rho * j));
            kap = std::max(kap, op_norm(ufwd * fam.at(m).pi_c) * std::exp(-rho0 * j));
            kap = std::max(kap,
                           op_norm(projected_evolution_bwd(sys, fam, 'u', m, m + j)) *
                               std::exp(rho * j));
            kap = std::max(kap,
                           op_norm(projected_evolution_bwd(sys, fam, 'c', m, m + j)) *
                               std::exp(-rho0 * j));
        }
    }
    fam.kappa = kap;
    return fam;
}

GeneratedPeriodic random_periodic(long period, int dim_s, int dim_c, int dim_u,
                                  const std::array<double, 2>& stable_interval,
                                  const std::array<double, 2>& central_interval,
                                  const std::array<double, 2>& unstable_interval,
                                  std::uint64_t seed, const GeneratorOptions& opt) {
    if (period < 1) throw config_error("random_periodic: period must be >= 1");
    GeneratedPeriodic out;
    out.system.period = period;

    // same admissible-alpha window as the autonomous generator
    double lo = 0.0, hi = 1.0;
    if (dim_s > 0) lo = std::max(lo, stable_interval[1]);
    if (dim_u > 0) lo = std::max(lo, 1.0 / unstable_interval[0]);
    if (dim_c > 0) hi = std::min({hi, central_interval[0], 1.0 / central_interval[1]});
    if (!(lo < hi)) throw config_error("random_periodic: no admissible alpha");
    const double alpha = 0.5 * (lo + hi);

    std::vector<Matrix> d_diag(static_cast<size_t>(period)),
        q(static_cast<size_t>(period)), qinv(static_cast<size_t>(period));
    const Eigen::Index d = dim_s + dim_c + dim_u;
    Rng rng(seed);
    auto draw_diag = [&]() {
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
        return eig;
    };
    auto draw_similarity = [&](Matrix& qq, Matrix& qq_inv) {
        if (opt.identity_similarity) {
            qq = Matrix::Identity(d, d);
            qq_inv = qq;
            return;
        }
        Matrix g(d, d);
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index i = 0; i < d; ++i)
                g(i, j) = Complex(rng.gaussian(), rng.gaussian());
        Eigen::HouseholderQR<Matrix> qr(g);
        qq = qr.householderQ() * Matrix::Identity(d, d);
        qq_inv = qq.adjoint();
    };

    for (long n = 0; n < period; ++n) {
        d_diag[static_cast<size_t>(n)] = Matrix(draw_diag().asDiagonal());
        draw_similarity(q[static_cast<size_t>(n)], qinv[static_cast<size_t>(n)]);
    }

    out.system.blocks.clear();
    for (long n = 0; n < period; ++n) {
        const Matrix& q_next = q[static_cast<size_t>((n + 1) % period)];
        out.system.blocks.push_back(q_next * d_diag[static_cast<size_t>(n)] *
                                    qinv[static_cast<size_t>(n)]);
    }

    auto indicator = [&](Eigen::Index lo, Eigen::Index count) {
        Matrix ind = Matrix::Zero(d, d);
        for (Eigen::Index i = 0; i < count; ++i) ind(lo + i, lo + i) = 1.0;
        return ind;
    };
    for (long n = 0; n < period; ++n) {
        Splitting s;
        s.alpha = alpha;
        s.pi_s = q[static_cast<size_t>(n)] * indicator(0, dim_s) * qinv[static_cast<size_t>(n)];
        s.pi_c = q[static_cast<size_t>(n)] * indicator(dim_s, dim_c) * qinv[static_cast<size_t>(n)];
        s.pi_u = q[static_cast<size_t>(n)] * indicator(dim_s + dim_c, dim_u) *
                 qinv[static_cast<size_t>(n)];
        out.exact_family.at_time.push_back(std::move(s));
    }
    return out;
}

Matrix lift_operator(const PeriodicSystem& sys) {
    sys.require_valid("lift_operator");
    const long t = sys.period;
    const Eigen::Index d = sys.dim();
    if (t == 1) return sys.blocks[0];
    Matrix l = Matrix::Zero(t * d, t * d);
    for (long k = 0; k < t; ++k) {
        long src = (k - 1 + t) % t;
        l.block(k * d, src * d, d, d) = sys.block(k - 1);
    }
    return l;
}

Matrix lift_perturbation(const PeriodicSystem& sys, const std::vector<Matrix>& bseq) {
    if (bseq.size() != static_cast<size_t>(sys.period))
        throw config_error("lift_perturbation: need one block per period step");
    PeriodicSystem bs;
    bs.period = sys.period;
    bs.blocks = bseq;
    bs.require_valid("lift_perturbation");
    if (bs.dim() != sys.dim()) throw config_error("lift_perturbation: dim mismatch");
    return lift_operator(bs);
}

Splitting lift_splitting(const FamilySplitting& fam, double alpha) {
    const long t = fam.period();
    const Eigen::Index d = fam.at(0).dim();
    Splitting s;
    s.alpha = alpha;
    s.pi_s = Matrix::Zero(t * d, t * d);
    s.pi_c = Matrix::Zero(t * d, t * d);
    s.pi_u = Matrix::Zero(t * d, t * d);
    for (long k = 0; k < t; ++k) {
        s.pi_s.block(k * d, k * d, d, d) = fam.at(k).pi_s;
        s.pi_c.block(k * d, k * d, d, d) = fam.at(k).pi_c;
        s.pi_u.block(k * d, k * d, d, d) = fam.at(k).pi_u;
    }
    return s;
}

namespace {

Matrix block_of(const Matrix& m, long t, Eigen::Index d, long row, long col) {
    long rr = ((row % t) + t) % t;
    long cc = ((col % t) + t) % t;
    return m.block(rr * d, cc * d, d, d);
}

}  // namespace

HowlandResult perturb_periodic(const PeriodicSystem& sys, const std::vector<Matrix>& bseq,
                               const HowlandParams& params) {
    sys.require_valid("perturb_periodic");
    const long t = sys.period;
    const Eigen::Index d = sys.dim();

    HowlandResult out;
    out.unperturbed = floquet_split(sys, params.alpha, params.rho0, params.rho,
                                    params.horizon);

    const Matrix lift = lift_operator(sys);
    const Splitting lifted = lift_splitting(out.unperturbed, params.alpha);
    KappaMeasurement km =
        measure_kappa(lift, lifted, params.rho0, params.rho, params.horizon);
    if (km.rate_infeasible)
        throw structure_error("perturb_periodic: lift rates infeasible (slope " +
                              format_double(km.tail_slope) + ")");
    out.lift_cert.splitting = lifted;
    out.lift_cert.kappa = km.kappa;
    out.lift_cert.rho0 = params.rho0;
    out.lift_cert.rho = params.rho;
    out.lift_cert.horizon_checked = params.horizon;

    const Matrix lift_b = lift_perturbation(sys, bseq);
    double sup_bk = 0.0;
    for (const Matrix& bk : bseq) sup_bk = std::max(sup_bk, op_norm(bk));
    if (op_norm(lift_b) > sup_bk * (1.0 + 1e-12))
        throw structure_error("perturb_periodic: lifted perturbation norm exceeds sup |B_k|");

    PerturbationProblem prob;
    prob.matrix_a = lift;
    prob.cert = out.lift_cert;
    prob.matrix_b = lift_b;
    prob.rates = params.rates;
    prob.horizon = params.horizon;
    prob.fp_tol = params.fp_tol;
    prob.tail_tol = params.tail_tol;
    prob.max_iter = params.max_iter;
    out.solve = solve_perturbed(prob);
    const EvolutionTriple& z = out.solve.z;

    VerifyReport rep;

    // Claim 3.3 realized on the cyclic lift: the perturbed lifted projectors
    // must be block-diagonal.
    {
        double off = 0.0;
        const Matrix hat[3] = {z.es.at(0), z.ec.at(0), z.eu.at(0)};
        for (const Matrix& h : hat)
            for (long i = 0; i < t; ++i)
                for (long j = 0; j < t; ++j)
                    if (i != j) off = std::max(off, op_norm(block_of(h, t, d, i, j)));
        CheckResult c;
        c.name = "claim_block_diagonal";
        c.max_residual = off;
        c.threshold = params.tol;
        c.pass = off <= params.tol;
        rep.checks.push_back(c);
    }

    // per-time perturbed family from the diagonal blocks
    out.perturbed.rho0 = params.rates.rho0_hat;
    out.perturbed.rho = params.rates.rho_hat;
    out.perturbed.horizon_checked = params.horizon;
    out.perturbed.kappa =
        out.lift_cert.kappa * out.solve.report.budget.delta0 /
        (out.solve.report.budget.delta0 - out.solve.report.budget.delta);
    for (long k = 0; k < t; ++k) {
        Splitting s;
        s.alpha = params.alpha;
        s.pi_s = block_of(z.es.at(0), t, d, k, k);
        s.pi_c = block_of(z.ec.at(0), t, d, k, k);
        s.pi_u = block_of(z.eu.at(0), t, d, k, k);
        out.perturbed.at_time.push_back(std::move(s));
    }

    {
        double res = 0.0;
        for (long k = 0; k < t; ++k)
            res = std::max(res, out.perturbed.at_time[static_cast<size_t>(k)]
                                    .structural_residual());
        CheckResult c;
        c.name = "perturbed_family_structure";
        c.max_residual = res;
        c.threshold = params.tol;
        c.pass = res <= params.tol;
        rep.checks.push_back(c);
    }

    // Definition 1.6 (ii) for the perturbed system
    {
        PeriodicSystem pert = sys;
        for (long k = 0; k < t; ++k) pert.blocks[static_cast<size_t>(k)] += bseq[static_cast<size_t>(k)];
        double res = family_intertwining_residual(pert, out.perturbed);
        CheckResult c;
        c.name = "perturbed_intertwining";
        c.max_residual = res;
        c.threshold = params.tol;
        c.pass = res <= params.tol;
        rep.checks.push_back(c);
    }

    // estimates (1.15)-(1.17): per (n,p) window comparisons of the projected
    // evolution blocks against the unperturbed family, at the lift constants
    {
        const double bound = out.lift_cert.kappa * out.solve.report.budget.delta /
                             (out.solve.report.budget.delta0 - out.solve.report.budget.delta);
        auto ratio = [&](double measured, double env) {
            double b = bound * env;
            if (b > 0.0) return measured / b;
            return measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        };
        const double kappa_hat = out.perturbed.kappa;
        double worst_s = 0.0, worst_u = 0.0, worst_c = 0.0, worst_env = 0.0;
        for (long p = 0; p < t; ++p) {
            for (long q = 0; q <= params.horizon; ++q) {
                Matrix pert_s = block_of(z.es.at(q), t, d, p + q, p);
                Matrix ref_s = projected_evolution_fwd(sys, out.unperturbed, 's', p + q, p);
                double env_s = std::exp(-params.rates.rho_hat * q);
                worst_s = std::max(worst_s, ratio(op_norm(pert_s - ref_s), env_s));
                worst_env = std::max(worst_env, op_norm(pert_s) / (kappa_hat * env_s));

                Matrix pert_u = block_of(z.eu.at(q), t, d, p, p + q);
                Matrix ref_u = projected_evolution_bwd(sys, out.unperturbed, 'u', p, p + q);
                worst_u = std::max(worst_u, ratio(op_norm(pert_u - ref_u), env_s));
                worst_env = std::max(worst_env, op_norm(pert_u) / (kappa_hat * env_s));
            }
            for (long q = -params.horizon; q <= params.horizon; ++q) {
                Matrix pert_c = block_of(z.ec.at(q), t, d, p + q, p);
                Matrix ref_c = (q >= 0)
                                   ? projected_evolution_fwd(sys, out.unperturbed, 'c', p + q, p)
                                   : projected_evolution_bwd(sys, out.unperturbed, 'c', p + q, p);
                double env_c = std::exp(params.rates.rho0_hat * std::abs(q));
                worst_c = std::max(worst_c, ratio(op_norm(pert_c - ref_c), env_c));
                worst_env = std::max(worst_env, op_norm(pert_c) / (kappa_hat * env_c));
            }
        }
        auto push = [&](const char* name, double worst) {
            CheckResult c;
            c.name = name;
            c.max_residual = worst;
            c.threshold = 1.0;
            c.pass = worst <= 1.0;
            rep.checks.push_back(c);
        };
        push("estimate_s_ratio", worst_s);
        push("estimate_u_ratio", worst_u);
        push("estimate_c_ratio", worst_c);
        push("perturbed_envelope_ratio", worst_env);
    }

    out.report = std::move(rep);
    return out;
}

}  // namespace tri
