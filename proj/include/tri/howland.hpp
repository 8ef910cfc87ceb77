#pragma once

#include "tri/verify.hpp"

namespace tri {

// T-periodic difference equation x(n+1) = A_n x(n), blocks indexed mod T.
struct PeriodicSystem {
    long period = 1;
    std::vector<Matrix> blocks;

    Eigen::Index dim() const { return blocks.empty() ? 0 : blocks[0].rows(); }
    const Matrix& block(long n) const {
        long t = n % period;
        if (t < 0) t += period;
        return blocks[static_cast<size_t>(t)];
    }
    void require_valid(const char* who) const;
};

// U(n, m) = A_{n-1} ... A_m for n > m, identity at n = m.
Matrix evolution(const PeriodicSystem& sys, long n, long m);

// Per-time projector triples with shared constants; indices mod T.
struct FamilySplitting {
    std::vector<Splitting> at_time;  // size T
    double kappa = 1.0;
    double rho0 = 0.0;
    double rho = 0.0;
    long horizon_checked = 0;

    long period() const { return static_cast<long>(at_time.size()); }
    const Splitting& at(long n) const {
        long t = n % period();
        if (t < 0) t += period();
        return at_time[static_cast<size_t>(t)];
    }
};

// max over n of |Pi^a_{n+1} A_n - A_n Pi^a_n|
double family_intertwining_residual(const PeriodicSystem& sys, const FamilySplitting& fam);

// Floquet splitting: spectral projectors of every phase monodromy
// M_n = U(n+T, n) at the per-period threshold alpha^T, plus the measured
// envelope constant over |n - m| <= n_horizon.
FamilySplitting floquet_split(const PeriodicSystem& sys, double alpha, double rho0,
                              double rho, long n_horizon,
                              const EigensplitOptions& opt = {});

// Projected evolution operators of the unperturbed family.
// forward: U(n,m) Pi^a_m for a = s,c (n >= m);
// backward: inverses of the restricted central/unstable one-step maps.
Matrix projected_evolution_fwd(const PeriodicSystem& sys, const FamilySplitting& fam,
                               char alpha, long n, long m);
Matrix projected_evolution_bwd(const PeriodicSystem& sys, const FamilySplitting& fam,
                               char alpha, long m, long n);

// Block-circulant weighted shift on the cyclic index set: block (k, k-1 mod T)
// holds A_{k-1}; T = 1 collapses to A_0 itself.
Matrix lift_operator(const PeriodicSystem& sys);
Matrix lift_perturbation(const PeriodicSystem& sys, const std::vector<Matrix>& bseq);
Splitting lift_splitting(const FamilySplitting& fam, double alpha);

struct GeneratedPeriodic {
    PeriodicSystem system;
    FamilySplitting exact_family;  // projectors only; constants left to measure
};

// T-periodic instance A_n = Q_{n+1} D_n Q_n^{-1} with cyclic similarities
// (Q_T = Q_0) and per-step diagonal moduli drawn from the three intervals,
// so the phase monodromies are exactly trichotomic with the returned family.
GeneratedPeriodic random_periodic(long period, int dim_s, int dim_c, int dim_u,
                                  const std::array<double, 2>& stable_interval,
                                  const std::array<double, 2>& central_interval,
                                  const std::array<double, 2>& unstable_interval,
                                  std::uint64_t seed,
                                  const GeneratorOptions& opt = {});

struct HowlandParams {
    double alpha = 0.6;
    double rho0 = 0.0;
    double rho = 0.0;
    RateParams rates;
    long horizon = 80;
    double fp_tol = 1e-12;
    double tail_tol = 1e-13;
    long max_iter = 10000;
    double tol = 1e-8;  // structural / estimate threshold for the report
};

struct HowlandResult {
    FamilySplitting unperturbed;
    FamilySplitting perturbed;          // perturbed projectors, same constants slots
    TrichotomyCertificate lift_cert;    // certificate of the lifted operator
    SolveResult solve;                  // fixed point on the lift
    VerifyReport report;                // Claim 3.3 + Definition 1.6 + (1.15)-(1.17)
};

// Full periodic perturbation pipeline: certify the lift, solve the fixed
// point for the lifted pair, check block-diagonality of the perturbed lifted
// projectors, extract per-time families and verify the perturbation
// estimates at every (n-p) window within the horizon.
HowlandResult perturb_periodic(const PeriodicSystem& sys, const std::vector<Matrix>& bseq,
                               const HowlandParams& params);

}  // namespace tri
