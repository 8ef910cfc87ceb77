#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "tri/matrix.hpp"

namespace tri {

// Projector triple of a trichotomic state-space decomposition.
// pi_s + pi_c + pi_u = I, pairwise orthogonal, each idempotent.
struct Splitting {
    Matrix pi_s;
    Matrix pi_c;
    Matrix pi_u;
    double alpha = 0.0;  // spectral split parameter, 0 < alpha < 1

    Eigen::Index dim() const { return pi_s.rows(); }

    // max over idempotency / orthogonality / identity-sum residuals
    double structural_residual() const;

    void require_valid(double tol, const char* who) const;
};

struct EigensplitOptions {
    double gap_tol = 1e-8;        // relative exclusion band around alpha and 1/alpha
    double max_eigvec_cond = 1e8; // reject defective clusters beyond this
};

// Spectral grouping |l| <= alpha / alpha < |l| < 1/alpha / |l| >= 1/alpha.
// This is the eigendecomposition oracle the rest of the artifact is checked
// against.
Splitting eigensplit(const Matrix& m, double alpha, const EigensplitOptions& opt = {});

// Restriction of m to range(p): basis columns are orthonormal and span
// range(p); restricted is the matrix of m on that basis, so that
// m * basis = basis * restricted (up to tol).
struct PartInResult {
    Matrix basis;       // d x r, orthonormal columns
    Matrix restricted;  // r x r
};
PartInResult part_in(const Matrix& m, const Matrix& p, double tol = 1e-8);

// Deterministic uniform/Gaussian draws from a mt19937_64 stream.
// std::uniform_real_distribution is not bit-portable across standard
// libraries, so reports stay byte-identical only with these helpers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform();                       // [0,1)
    double uniform(double lo, double hi);   // [lo,hi)
    double gaussian();                      // Box-Muller, no state caching
    Complex unit_phase();                   // e^{i theta}, theta uniform
private:
    std::mt19937_64 gen_;
};

struct GeneratorOptions {
    double cond_target = 10.0;   // conditioning of the similarity transform
    bool identity_similarity = false;
    bool random_phases = true;   // eigenvalues modulus*e^{i theta} vs real positive
};

struct GeneratedInstance {
    Matrix matrix;
    Splitting splitting;
    double similarity_cond = 1.0;
};

// Deterministic-in-seed trichotomic test instance: eigenvalue moduli drawn
// from the three intervals, conjugated by a similarity with bounded condition
// number. The returned splitting is the exact spectral one.
GeneratedInstance random_trichotomic(int dim_s, int dim_c, int dim_u,
                                     const std::array<double, 2>& stable_interval,
                                     const std::array<double, 2>& central_interval,
                                     const std::array<double, 2>& unstable_interval,
                                     std::uint64_t seed, const GeneratorOptions& opt = {});

}  // namespace tri
