#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tri/solver.hpp"

namespace tri {

struct CheckResult {
    std::string name;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::optional<std::pair<long, long>> witness;  // indices attaining the max
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool oracle_available = true;

    bool all_pass() const;
    const CheckResult* find(const std::string& name) const;
};

// Identities the computed triple must satisfy for A+B: semigroup laws,
// cross-orthogonality, identity sum at 0, forward consistency, the unstable
// inverse relation, central invertibility and projector commutation.
// Central products use the half-horizon window so every index stays stored.
VerifyReport check_structure(const EvolutionTriple& z, const Matrix& a, const Matrix& b,
                             double tol);

// Quantitative perturbation estimates: the three evolution-difference
// envelopes with constant kappa delta/(delta0 - delta), the projector
// distance bound, and the chain bound < sqrt(2)-1. Residuals are ratios
// measured/bound with threshold 1.
VerifyReport check_bounds(const PerturbationProblem& p, const EvolutionTriple& z,
                          const PerturbationBudget& budget);

// Compares the fixed-point projectors against the eigendecomposition of A+B
// and runs the projector-continuity lemma on each (Pi_k, Pi_hat_k) pair.
VerifyReport oracle_compare(const PerturbationProblem& p, const EvolutionTriple& z,
                            double tol);

}  // namespace tri
