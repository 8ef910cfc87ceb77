#pragma once

#include "tri/seqspace.hpp"

namespace tri {

struct PerturbationProblem {
    Matrix matrix_a;
    TrichotomyCertificate cert;
    Matrix matrix_b;
    RateParams rates;
    long horizon = 80;
    double fp_tol = 1e-12;
    double tail_tol = 1e-13;
    long max_iter = 10000;
};

struct SolveReport {
    long iterations = 0;
    double final_residual = 0.0;   // weighted norm of Z_{k+1} - Z_k
    double accumulated_tail = 0.0;
    bool converged = false;
    PerturbationBudget budget;
};

struct SolveResult {
    EvolutionTriple z;
    SolveReport report;
};

// Picard iteration Z <- Z0 + J(Z); the iterates are the partial Neumann sums
// of (I - J)^{-1} Z0. Throws config_error when the budget is inadmissible.
SolveResult solve_perturbed(const PerturbationProblem& p);

// Perturbed projectors are the triple at index 0.
Splitting perturbed_projectors(const EvolutionTriple& z, double alpha,
                               double structure_tol);

// Direct evaluation of the explicit projector series; must agree with
// perturbed_projectors within fp_tol + accumulated tails.
Splitting closed_form_projectors(const PerturbationProblem& p, const EvolutionTriple& z,
                                 const SolveReport& report);

struct IndexWindow {
    long lo = 0;
    long hi = 0;
};

// A-posteriori rates achieved by a computed triple: joint least-squares slope
// of log|E^s_n|, log|E^u_n| against -rho_hat n, of log|E^c_n| against
// rho0_hat |n|, and the minimal kappa_hat closing the envelopes on the window.
RateParams fit_rates(const EvolutionTriple& z, const IndexWindow& window);

}  // namespace tri
