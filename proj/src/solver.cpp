#include "tri/solver.hpp"

#include <algorithm>
#include <cmath>

namespace tri {

SolveResult solve_perturbed(const PerturbationProblem& p) {
    require_square(p.matrix_a, "solve_perturbed");
    if (p.matrix_a.rows() != p.matrix_b.rows() || p.matrix_a.cols() != p.matrix_b.cols())
        throw config_error("solve_perturbed: A and B dims disagree");
    if (p.horizon < 2) throw config_error("solve_perturbed: horizon must be >= 2");
    if (p.horizon > p.cert.horizon_checked)
        throw config_error("solve_perturbed: horizon exceeds certificate horizon");
    p.rates.require_interlacing(p.cert, "solve_perturbed");

    SolveResult out;
    out.report.budget = compute_budget(p.cert, p.rates, p.matrix_b);
    if (!out.report.budget.admissible)
        throw config_error("solve_perturbed: |B| = " + format_double(out.report.budget.delta) +
                           " is not admissible (delta_max = " +
                           format_double(out.report.budget.delta_max) + ")");

    PartPowers pp = build_part_powers(p.matrix_a, p.cert.splitting, p.horizon + 1);
    EvolutionTriple z0 = unperturbed_triple(pp, p.rates, p.horizon);

    EvolutionTriple z = z0;
    double residual = 0.0;
    long iter = 0;
    bool converged = false;
    while (iter < p.max_iter) {
        EvolutionTriple next = triple_sum(z0, apply_j(pp, p.matrix_b, z));
        residual = weighted_norm(triple_diff(next, z));
        z = std::move(next);
        ++iter;
        if (residual <= p.fp_tol) {
            converged = true;
            break;
        }
    }

    out.report.iterations = iter;
    out.report.final_residual = residual;
    out.report.converged = converged;
    double contraction = out.report.budget.contraction_c * out.report.budget.delta;
    out.report.accumulated_tail = truncation_tail_bound(
        p.cert, p.rates, p.horizon, out.report.budget.delta, weighted_norm(z), contraction);
    out.z = std::move(z);
    return out;
}

Splitting perturbed_projectors(const EvolutionTriple& z, double alpha,
                               double structure_tol) {
    Splitting s;
    s.pi_s = z.es.at(0);
    s.pi_u = z.eu.at(0);
    s.pi_c = z.ec.at(0);
    s.alpha = alpha;
    double r = s.structural_residual();
    if (r > structure_tol)
        throw structure_error("perturbed_projectors: structure violated, residual " +
                              format_double(r) + " > " + format_double(structure_tol));
    return s;
}

Splitting closed_form_projectors(const PerturbationProblem& p, const EvolutionTriple& z,
                                 const SolveReport& report) {
    const long n_h = z.es.horizon;
    PartPowers pp = build_part_powers(p.matrix_a, p.cert.splitting, n_h + 1);
    const Matrix& b = p.matrix_b;

    // plain evaluation of the explicit series, independent of the recurrence
    // path inside apply_j
    Matrix pi_s_hat = pp.ps[0];
    for (long m = 0; m < n_h; ++m)
        pi_s_hat -= pp.ps[static_cast<size_t>(m)] * (b * (z.eu.at(m + 1) + z.ec.at(-m - 1)));
    for (long m = 0; m <= n_h; ++m)
        pi_s_hat -= (pp.pu[static_cast<size_t>(m + 1)] + pp.pc(-m - 1)) * (b * z.es.at(m));

    Matrix pi_u_hat = pp.pu[0];
    for (long m = 0; m <= n_h; ++m)
        pi_u_hat += pp.pu[static_cast<size_t>(m + 1)] * (b * (z.es.at(m) + z.ec.at(m)));
    for (long m = 0; m < n_h; ++m)
        pi_u_hat += (pp.ps[static_cast<size_t>(m)] + pp.pc(m)) * (b * z.eu.at(m + 1));

    Matrix pi_c_hat = pp.pc(0);
    for (long m = 0; m < n_h; ++m) pi_c_hat -= pp.pc(m) * (b * z.eu.at(m + 1));
    for (long m = 0; m <= n_h; ++m) pi_c_hat += pp.pc(-m - 1) * (b * z.es.at(m));
    for (long m = 0; m <= n_h; ++m)
        pi_c_hat -= pp.pu[static_cast<size_t>(m + 1)] * (b * z.ec.at(m));
    for (long m = 0; m < n_h; ++m) pi_c_hat += pp.ps[static_cast<size_t>(m)] * (b * z.ec.at(-m - 1));

    double tol = p.fp_tol + report.accumulated_tail;
    double disc = std::max({op_norm(pi_s_hat - z.es.at(0)), op_norm(pi_u_hat - z.eu.at(0)),
                            op_norm(pi_c_hat - z.ec.at(0))});
    if (disc > std::max(tol, 1e-14 * std::max(1.0, weighted_norm(z))))
        throw structure_error("closed_form_projectors: series disagree with E^k_0 by " +
                              format_double(disc) + " (tol " + format_double(tol) + ")");

    Splitting s;
    s.pi_s = std::move(pi_s_hat);
    s.pi_u = std::move(pi_u_hat);
    s.pi_c = std::move(pi_c_hat);
    s.alpha = p.cert.splitting.alpha;
    return s;
}

namespace {

struct SlopeAccum {
    double sxx = 0.0, sxy = 0.0;
    long count = 0;

    void add_series(const std::vector<double>& xs, const std::vector<double>& ys) {
        if (xs.size() < 2) return;
        double xm = 0.0, ym = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            xm += xs[i];
            ym += ys[i];
        }
        xm /= static_cast<double>(xs.size());
        ym /= static_cast<double>(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - xm) * (xs[i] - xm);
            sxy += (xs[i] - xm) * (ys[i] - ym);
        }
        count += static_cast<long>(xs.size());
    }

    double slope() const { return sxx > 0.0 ? sxy / sxx : 0.0; }
};

constexpr double kZeroNorm = 1e-300;

}  // namespace

RateParams fit_rates(const EvolutionTriple& z, const IndexWindow& window) {
    if (window.hi - window.lo + 1 < 3)
        throw config_error("fit_rates: window must span at least 3 indices");
    if (window.lo < 0 || window.hi > z.es.horizon)
        throw config_error("fit_rates: window outside horizon");

    // shared decay slope for E^s and E^u with independent intercepts
    SlopeAccum decay;
    for (const OpSeqOneSided* seq : {&z.es, &z.eu}) {
        std::vector<double> xs, ys;
        for (long n = window.lo; n <= window.hi; ++n) {
            double v = op_norm(seq->at(n));
            if (v > kZeroNorm) {
                xs.push_back(static_cast<double>(n));
                ys.push_back(std::log(v));
            }
        }
        decay.add_series(xs, ys);
    }

    SlopeAccum growth;
    {
        std::vector<double> xs, ys;
        for (long n = -window.hi; n <= window.hi; ++n) {
            if (std::abs(n) < window.lo) continue;
            double v = op_norm(z.ec.at(n));
            if (v > kZeroNorm) {
                xs.push_back(static_cast<double>(std::abs(n)));
                ys.push_back(std::log(v));
            }
        }
        growth.add_series(xs, ys);
    }

    RateParams fitted;
    fitted.rho_hat = -decay.slope();
    fitted.rho0_hat = growth.slope();

    double kap = 1.0;
    for (long n = window.lo; n <= window.hi; ++n) {
        kap = std::max(kap, op_norm(z.es.at(n)) * std::exp(fitted.rho_hat * n));
        kap = std::max(kap, op_norm(z.eu.at(n)) * std::exp(fitted.rho_hat * n));
    }
    for (long n = -window.hi; n <= window.hi; ++n) {
        if (std::abs(n) < window.lo) continue;
        kap = std::max(kap, op_norm(z.ec.at(n)) * std::exp(-fitted.rho0_hat * std::abs(n)));
    }
    fitted.kappa_hat = kap;
    return fitted;
}

}  // namespace tri
