#pragma once

#include <string>

#include "tri/howland.hpp"

namespace tri {

// Certificate document: keys "kappa", "rho0", "rho", "horizon", "alpha",
// "pi_s"/"pi_c"/"pi_u" with the projectors embedded in the matrix text format.
std::string certificate_to_json(const TrichotomyCertificate& cert);
TrichotomyCertificate certificate_from_json(const std::string& text);

std::string solve_report_to_json(const PerturbationProblem& p, const SolveResult& result,
                                 long long timestamp);

std::string verify_report_to_json(const VerifyReport& report, long long timestamp);

// Periodic system file: {"period", "dimension", "blocks": [matrix text...],
// optional "perturbation": [matrix text...]}.
struct PeriodicFile {
    PeriodicSystem system;
    std::vector<Matrix> perturbation;  // empty when absent
};
std::string periodic_to_json(const PeriodicSystem& sys,
                             const std::vector<Matrix>& perturbation);
PeriodicFile periodic_from_json(const std::string& text);

// One CSV row of per-index family norms; header included.
std::string family_norms_csv(const EvolutionTriple& z);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);
// write to <path>.tmp then rename, so sweeps never leave half files
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace tri
