#pragma once

#include <vector>

#include "tri/certify.hpp"

namespace tri {

// Operator sequence on 0..horizon with norm  sup_n e^{eta n} |u_n|.
// eta > 0 is the decay class L_{-eta}(N), eta < 0 the growth class
// L_{|eta|}(N) produced by chi_+/chi_-.
struct OpSeqOneSided {
    long horizon = 0;
    double eta = 0.0;
    std::vector<Matrix> terms;  // size horizon+1

    const Matrix& at(long n) const { return terms[static_cast<size_t>(n)]; }
    Matrix& at(long n) { return terms[static_cast<size_t>(n)]; }
};

// Operator sequence on -horizon..horizon with norm  sup_n e^{-eta|n|} |v_n|,
// eta >= 0 (growth class L_eta(Z)).
struct OpSeqTwoSided {
    long horizon = 0;
    double eta = 0.0;
    std::vector<Matrix> terms;  // size 2*horizon+1, index n+horizon

    const Matrix& at(long n) const { return terms[static_cast<size_t>(n + horizon)]; }
    Matrix& at(long n) { return terms[static_cast<size_t>(n + horizon)]; }
};

OpSeqOneSided zero_one_sided(long horizon, double eta, Eigen::Index dim);
OpSeqTwoSided zero_two_sided(long horizon, double eta, Eigen::Index dim);

double weighted_norm(const OpSeqOneSided& u);
double weighted_norm(const OpSeqTwoSided& v);

// Z = (E^s, E^u, E^c): the unknown of the fixed-point problem.
struct EvolutionTriple {
    OpSeqOneSided es;
    OpSeqOneSided eu;
    OpSeqTwoSided ec;
};

double weighted_norm(const EvolutionTriple& z);
EvolutionTriple triple_sum(const EvolutionTriple& a, const EvolutionTriple& b);
EvolutionTriple triple_diff(const EvolutionTriple& a, const EvolutionTriple& b);

// Phi_C(u)_n = sum_{m=0}^{n-1} C^m u_{n-1-m}; empty sum at n = 0.
OpSeqOneSided conv_phi(const Matrix& c, const OpSeqOneSided& u);

// Theta_C(u)_n = sum_{m>=0} C^m u_{n+m}, truncated at the last stored index.
// Per-index certified tail bounds from the supplied envelope |C^m| <= kappa q^m
// and the weight class of u.
struct TailThetaResult {
    OpSeqOneSided one_sided;      // filled for one-sided input
    OpSeqTwoSided two_sided;      // filled for two-sided input
    bool input_two_sided = false;
    std::vector<double> tail_bound;   // aligned with the output terms
    double tail_sup_weighted = 0.0;   // sup of weighted tail bounds
    bool within_tol = true;           // tail_sup <= tail_tol * (1 + |u|)
};

TailThetaResult tail_theta(const Matrix& c, const OpSeqOneSided& u, double kappa_c,
                           double q, double tail_tol);
TailThetaResult tail_theta(const Matrix& c, const OpSeqTwoSided& u, double kappa_c,
                           double q, double tail_tol);

enum class ShiftKind { s_minus, chi_plus, chi_minus };

// S_-: drop index 0 (horizon shrinks by one, both kinds).
OpSeqOneSided shift_s_minus(const OpSeqOneSided& u);
OpSeqTwoSided shift_s_minus(const OpSeqTwoSided& u);
// chi_+/chi_-: one-sided samples of the non-negative / non-positive half.
OpSeqOneSided restrict_chi(ShiftKind kind, const OpSeqTwoSided& u);

// The linear part of the Lyapunov-Perron map: J applied to Z, truncated at
// the triple's horizon (out-of-window terms read as zero). J(Z) = 0 at B = 0
// exactly, and the fixed-point equation is Z = Z0 + J(Z).
EvolutionTriple apply_j(const PartPowers& pp, const Matrix& b, const EvolutionTriple& z);

// Convenience wrapper building the part powers from scratch.
EvolutionTriple apply_j(const Matrix& a, const TrichotomyCertificate& cert,
                        const Matrix& b, const RateParams& rates,
                        const EvolutionTriple& z);

// Unperturbed triple Z0 = (A_s^. Pi_s, A_u^{-.} Pi_u, A_c^. Pi_c).
EvolutionTriple unperturbed_triple(const PartPowers& pp, const RateParams& rates,
                                   long horizon);

// Row-wise assembled contraction constant: |J(Z)| <= C |B| |Z|.
double bound_c(const TrichotomyCertificate& cert, const RateParams& rates);

struct PerturbationBudget {
    double contraction_c = 0.0;
    double delta0 = 0.0;
    double delta_max = 0.0;  // delta0^2 / (kappa + delta0)
    double delta = 0.0;      // |B|
    bool admissible = false;
};

// delta0 = (1 - margin) min{ 1/C, (1-1/C)/(6 kappa^3 + 1 - 1/C), sqrt(2)-1 },
// the middle cap omitted when C <= 1.
PerturbationBudget compute_budget(const TrichotomyCertificate& cert,
                                  const RateParams& rates, const Matrix& b);

// Weighted bound on the truncation error committed by evaluating J at a
// finite horizon, amplified through the fixed point: used for the solver's
// accumulated_tail.
double truncation_tail_bound(const TrichotomyCertificate& cert, const RateParams& rates,
                             long horizon, double delta, double z_norm,
                             double contraction);

}  // namespace tri
