#include "tri/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tri {

bool VerifyReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

const CheckResult* VerifyReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

class MaxTracker {
public:
    void update(double value, long n, long p = 0) {
        if (value > value_) {
            value_ = value;
            witness_ = {n, p};
        }
    }
    CheckResult result(const std::string& name, double threshold) const {
        CheckResult c;
        c.name = name;
        c.max_residual = value_;
        c.threshold = threshold;
        c.pass = value_ <= threshold;
        c.witness = witness_;
        return c;
    }

private:
    double value_ = 0.0;
    std::optional<std::pair<long, long>> witness_;
};

}  // namespace

VerifyReport check_structure(const EvolutionTriple& z, const Matrix& a, const Matrix& b,
                             double tol) {
    const long n_h = z.es.horizon;
    const long half = n_h / 2;
    const Eigen::Index d = a.rows();
    const Matrix apb = a + b;
    VerifyReport rep;

    MaxTracker semi_s, semi_u, semi_c;
    for (long n = 0; n <= n_h; ++n)
        for (long p = 0; p + n <= n_h; ++p) {
            semi_s.update(op_norm(z.es.at(n) * z.es.at(p) - z.es.at(n + p)), n, p);
            semi_u.update(op_norm(z.eu.at(n) * z.eu.at(p) - z.eu.at(n + p)), n, p);
        }
    for (long n = -half; n <= half; ++n)
        for (long p = -half; p <= half; ++p)
            semi_c.update(op_norm(z.ec.at(n) * z.ec.at(p) - z.ec.at(n + p)), n, p);
    rep.checks.push_back(semi_s.result("semigroup_s", tol));
    rep.checks.push_back(semi_u.result("semigroup_u", tol));
    rep.checks.push_back(semi_c.result("semigroup_c", tol));

    MaxTracker c_su, c_us, c_cu, c_cs, c_sc, c_uc;
    for (long n = 0; n <= n_h; ++n)
        for (long p = 0; p <= n_h; ++p) {
            c_su.update(op_norm(z.es.at(n) * z.eu.at(p)), n, p);
            c_us.update(op_norm(z.eu.at(n) * z.es.at(p)), n, p);
        }
    for (long n = -n_h; n <= n_h; ++n)
        for (long p = 0; p <= n_h; ++p) {
            c_cu.update(op_norm(z.ec.at(n) * z.eu.at(p)), n, p);
            c_cs.update(op_norm(z.ec.at(n) * z.es.at(p)), n, p);
        }
    for (long n = 0; n <= n_h; ++n)
        for (long p = -n_h; p <= n_h; ++p) {
            c_sc.update(op_norm(z.es.at(n) * z.ec.at(p)), n, p);
            c_uc.update(op_norm(z.eu.at(n) * z.ec.at(p)), n, p);
        }
    rep.checks.push_back(c_su.result("cross_s_u", tol));
    rep.checks.push_back(c_us.result("cross_u_s", tol));
    rep.checks.push_back(c_cu.result("cross_c_u", tol));
    rep.checks.push_back(c_cs.result("cross_c_s", tol));
    rep.checks.push_back(c_sc.result("cross_s_c", tol));
    rep.checks.push_back(c_uc.result("cross_u_c", tol));

    MaxTracker identity;
    identity.update(op_norm(z.es.at(0) + z.eu.at(0) + z.ec.at(0) - Matrix::Identity(d, d)), 0);
    rep.checks.push_back(identity.result("identity_sum", tol));

    MaxTracker fwd_s, fwd_c, inv_u;
    for (long n = 0; n < n_h; ++n) {
        fwd_s.update(op_norm(z.es.at(n + 1) - apb * z.es.at(n)), n);
        inv_u.update(op_norm(apb * z.eu.at(n + 1) - z.eu.at(n)), n);
    }
    for (long n = -n_h; n < n_h; ++n)
        fwd_c.update(op_norm(z.ec.at(n + 1) - apb * z.ec.at(n)), n);
    rep.checks.push_back(fwd_s.result("forward_s", tol));
    rep.checks.push_back(fwd_c.result("forward_c", tol));
    rep.checks.push_back(inv_u.result("unstable_inverse", tol));

    MaxTracker central_inv;
    {
        const Matrix pi_c_hat = z.ec.at(0);
        Matrix power = pi_c_hat;  // (A+B)^n Pi_c_hat
        for (long n = 0; n <= half; ++n) {
            central_inv.update(op_norm(z.ec.at(-n) * power - pi_c_hat), n);
            central_inv.update(op_norm(power * z.ec.at(-n) - pi_c_hat), n);
            power = apb * power;
        }
    }
    rep.checks.push_back(central_inv.result("central_invertibility", tol));

    MaxTracker comm;
    comm.update(op_norm(apb * z.es.at(0) - z.es.at(0) * apb), 0);
    comm.update(op_norm(apb * z.eu.at(0) - z.eu.at(0) * apb), 1);
    comm.update(op_norm(apb * z.ec.at(0) - z.ec.at(0) * apb), 2);
    rep.checks.push_back(comm.result("commutation", tol));

    return rep;
}

VerifyReport check_bounds(const PerturbationProblem& p, const EvolutionTriple& z,
                          const PerturbationBudget& budget) {
    const long n_h = z.es.horizon;
    PartPowers pp = build_part_powers(p.matrix_a, p.cert.splitting, n_h + 1);
    const double bound = p.cert.kappa * budget.delta / (budget.delta0 - budget.delta);
    const double rh = p.rates.rho_hat, rh0 = p.rates.rho0_hat;
    VerifyReport rep;

    // B = 0 has bound 0 with zero differences; ratios are defined as 0 then.
    auto ratio = [](double measured, double b) {
        if (b > 0.0) return measured / b;
        return measured > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    };

    MaxTracker env_s, env_u, env_c;
    for (long n = 0; n <= n_h; ++n) {
        env_s.update(ratio(op_norm(z.es.at(n) - pp.ps[static_cast<size_t>(n)]),
                           bound * std::exp(-rh * n)), n);
        env_u.update(ratio(op_norm(z.eu.at(n) - pp.pu[static_cast<size_t>(n)]),
                           bound * std::exp(-rh * n)), n);
    }
    for (long n = -n_h; n <= n_h; ++n)
        env_c.update(ratio(op_norm(z.ec.at(n) - pp.pc(n)),
                           bound * std::exp(rh0 * std::abs(n))), n);
    rep.checks.push_back(env_s.result("theorem_env_s_ratio", 1.0));
    rep.checks.push_back(env_u.result("theorem_env_u_ratio", 1.0));
    rep.checks.push_back(env_c.result("theorem_env_c_ratio", 1.0));

    MaxTracker pdist;
    pdist.update(ratio(op_norm(z.es.at(0) - p.cert.splitting.pi_s), bound), 0);
    pdist.update(ratio(op_norm(z.eu.at(0) - p.cert.splitting.pi_u), bound), 1);
    pdist.update(ratio(op_norm(z.ec.at(0) - p.cert.splitting.pi_c), bound), 2);
    rep.checks.push_back(pdist.result("projector_distance_ratio", 1.0));

    MaxTracker chain;
    chain.update(budget.delta > 0.0 ? bound / budget.delta0 : 0.0, 0);
    chain.update(budget.delta0 / (std::sqrt(2.0) - 1.0), 1);
    rep.checks.push_back(chain.result("bound_chain_ratio", 1.0));

    return rep;
}

VerifyReport oracle_compare(const PerturbationProblem& p, const EvolutionTriple& z,
                            double tol) {
    VerifyReport rep;
    Splitting oracle;
    try {
        oracle = eigensplit(p.matrix_a + p.matrix_b, p.cert.splitting.alpha);
    } catch (const numerical_error&) {
        rep.oracle_available = false;
        CheckResult c;
        c.name = "oracle_available";
        c.max_residual = 1.0;
        c.threshold = 0.0;
        c.pass = false;
        rep.checks.push_back(c);
        return rep;
    }

    MaxTracker disc;
    disc.update(op_norm(z.es.at(0) - oracle.pi_s), 0);
    disc.update(op_norm(z.eu.at(0) - oracle.pi_u), 1);
    disc.update(op_norm(z.ec.at(0) - oracle.pi_c), 2);
    rep.checks.push_back(disc.result("oracle_projector_discrepancy", tol));

    // Lemma 2.1 on each (Pi_k, Pi_hat_k) pair: the restricted inverse exists
    // and obeys 1/(1 - delta).
    MaxTracker inv_excess;
    const Matrix* orig[3] = {&p.cert.splitting.pi_s, &p.cert.splitting.pi_c,
                             &p.cert.splitting.pi_u};
    const Matrix hat[3] = {z.es.at(0), z.ec.at(0), z.eu.at(0)};
    for (int k = 0; k < 3; ++k) {
        ContinuityReport cr = projector_continuity(*orig[k], hat[k]);
        double excess = (cr.invertible == Invertibility::failed)
                            ? std::numeric_limits<double>::infinity()
                            : cr.inverse_norm - cr.inverse_bound;
        inv_excess.update(excess, k);
    }
    rep.checks.push_back(inv_excess.result("continuity_inverse_bound_excess", tol));

    return rep;
}

}  // namespace tri
