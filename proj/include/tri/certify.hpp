#pragma once

#include <vector>

#include "tri/linops.hpp"

namespace tri {

// Powers of the three parts of an operator, composed with their projectors:
//   ps[k]     = A_s^k  Pi_s   (k = 0..N, ps[0] = Pi_s)
//   pu[k]     = A_u^{-k} Pi_u
//   pc(k)     = A_c^k  Pi_c   (k = -N..N)
// plus the one-step generators used by the fixed-point recurrences.
struct PartPowers {
    Matrix as1;      // A Pi_s
    Matrix ac1;      // A Pi_c
    Matrix au_inv;   // A_u^{-1} Pi_u
    Matrix ac_inv;   // A_c^{-1} Pi_c
    std::vector<Matrix> ps;
    std::vector<Matrix> pu;
    std::vector<Matrix> pc_fwd;  // pc_fwd[k] = A_c^k Pi_c
    std::vector<Matrix> pc_bwd;  // pc_bwd[k] = A_c^{-k} Pi_c

    const Matrix& pc(long k) const { return k >= 0 ? pc_fwd[static_cast<size_t>(k)]
                                                   : pc_bwd[static_cast<size_t>(-k)]; }
    long horizon() const { return static_cast<long>(ps.size()) - 1; }
};

// Builds the power families up to index N (inclusive). Throws
// numerical_error("part not invertible") when the central or unstable part
// cannot be inverted, structure_error when the splitting does not commute
// with a within tol.
PartPowers build_part_powers(const Matrix& a, const Splitting& split, long n_max,
                             double tol = 1e-8);

struct TrichotomyCertificate {
    Splitting splitting;
    double kappa = 1.0;   // >= 1
    double rho0 = 0.0;    // central exponent, 0 < rho0 < rho
    double rho = 0.0;     // stable/unstable exponent
    long horizon_checked = 0;
};

// Target rates for the perturbed system; must interlace the certificate's:
// rho0 < rho0_hat < rho_hat < rho and kappa_hat > kappa.
struct RateParams {
    double rho0_hat = 0.0;
    double rho_hat = 0.0;
    double kappa_hat = 0.0;

    void require_interlacing(const TrichotomyCertificate& cert, const char* who) const;
};

struct KappaMeasurement {
    double kappa = 1.0;
    bool rate_infeasible = false;
    double tail_slope = 0.0;  // log-growth of the normalized envelope at the horizon
};

// Minimal kappa >= 1 such that
//   |A_c^n Pi_c| <= kappa e^{rho0 |n|}   for |n| <= n_horizon,
//   |A_s^n Pi_s| <= kappa e^{-rho n}     for 0 <= n <= n_horizon,
//   |A_u^{-n} Pi_u| <= kappa e^{-rho n}  for 0 <= n <= n_horizon.
// Flags rate-infeasibility when the normalized norms are still climbing at
// the end of the horizon (the finite max then underestimates the true sup).
KappaMeasurement measure_kappa(const Matrix& m, const Splitting& split, double rho0,
                               double rho, long n_horizon, double tol = 1e-8);

// eigensplit + measure_kappa; throws structure_error on rate-infeasible input.
TrichotomyCertificate certify(const Matrix& m, double alpha, double rho0, double rho,
                              long n_horizon, const EigensplitOptions& opt = {});

enum class Invertibility { guaranteed, attempted_ok, failed };

// Lemma-style comparison of two projectors: whenever |P - Phat| < sqrt(2)-1
// the restriction of P to range(Phat) is invertible onto range(P) with
// inverse norm <= 1/(1 - delta). The swapped pair is checked as well.
struct ContinuityReport {
    double delta = 0.0;
    bool bound_applies = false;       // delta < sqrt(2) - 1
    Invertibility invertible = Invertibility::failed;
    double inverse_norm = 0.0;        // norm of (P|range(Phat))^{-1}
    double inverse_bound = 0.0;       // 1/(1-delta)
    double compose_residual = 0.0;    // identity-on-range residual
    Invertibility swapped_invertible = Invertibility::failed;
    double swapped_inverse_norm = 0.0;
    double swapped_compose_residual = 0.0;
};

ContinuityReport projector_continuity(const Matrix& p, const Matrix& phat,
                                      double tol = 1e-8);

}  // namespace tri
