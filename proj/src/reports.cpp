#include "tri/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tri {

using ordered_json = nlohmann::ordered_json;

std::string certificate_to_json(const TrichotomyCertificate& cert) {
    ordered_json j;
    j["kappa"] = cert.kappa;
    j["rho0"] = cert.rho0;
    j["rho"] = cert.rho;
    j["horizon"] = cert.horizon_checked;
    j["alpha"] = cert.splitting.alpha;
    j["pi_s"] = to_text(cert.splitting.pi_s);
    j["pi_c"] = to_text(cert.splitting.pi_c);
    j["pi_u"] = to_text(cert.splitting.pi_u);
    return j.dump(2) + "\n";
}

TrichotomyCertificate certificate_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw config_error("certificate: malformed JSON");
    for (const char* key : {"kappa", "rho0", "rho", "horizon", "alpha", "pi_s", "pi_c", "pi_u"})
        if (!j.contains(key))
            throw config_error(std::string("certificate: missing key \"") + key + "\"");
    TrichotomyCertificate cert;
    cert.kappa = j["kappa"].get<double>();
    cert.rho0 = j["rho0"].get<double>();
    cert.rho = j["rho"].get<double>();
    cert.horizon_checked = j["horizon"].get<long>();
    cert.splitting.alpha = j["alpha"].get<double>();
    cert.splitting.pi_s = from_text(j["pi_s"].get<std::string>());
    cert.splitting.pi_c = from_text(j["pi_c"].get<std::string>());
    cert.splitting.pi_u = from_text(j["pi_u"].get<std::string>());
    return cert;
}

std::string solve_report_to_json(const PerturbationProblem& p, const SolveResult& result,
                                 long long timestamp) {
    ordered_json j;
    j["timestamp"] = timestamp;
    j["problem"] = {{"dim", p.matrix_a.rows()},
                    {"horizon", p.horizon},
                    {"fp_tol", p.fp_tol},
                    {"tail_tol", p.tail_tol},
                    {"max_iter", p.max_iter},
                    {"alpha", p.cert.splitting.alpha},
                    {"kappa", p.cert.kappa},
                    {"rho0", p.cert.rho0},
                    {"rho", p.cert.rho},
                    {"rho0_hat", p.rates.rho0_hat},
                    {"rho_hat", p.rates.rho_hat}};
    j["budget"] = {{"contraction_C", result.report.budget.contraction_c},
                   {"delta0", result.report.budget.delta0},
                   {"delta_max", result.report.budget.delta_max},
                   {"delta", result.report.budget.delta},
                   {"admissible", result.report.budget.admissible}};
    j["iterations"] = result.report.iterations;
    j["final_residual"] = result.report.final_residual;
    j["accumulated_tail"] = result.report.accumulated_tail;
    j["converged"] = result.report.converged;

    ordered_json norms;
    std::vector<double> es, eu, ec;
    for (long n = 0; n <= result.z.es.horizon; ++n) {
        es.push_back(op_norm(result.z.es.at(n)));
        eu.push_back(op_norm(result.z.eu.at(n)));
    }
    for (long n = -result.z.ec.horizon; n <= result.z.ec.horizon; ++n)
        ec.push_back(op_norm(result.z.ec.at(n)));
    norms["es"] = es;
    norms["eu"] = eu;
    norms["ec"] = ec;
    j["family_norms"] = norms;

    j["projectors"] = {{"pi_s_hat", to_text(result.z.es.at(0))},
                       {"pi_c_hat", to_text(result.z.ec.at(0))},
                       {"pi_u_hat", to_text(result.z.eu.at(0))}};
    return j.dump(2) + "\n";
}

std::string verify_report_to_json(const VerifyReport& report, long long timestamp) {
    ordered_json j;
    j["timestamp"] = timestamp;
    j["oracle_available"] = report.oracle_available;
    ordered_json checks = ordered_json::array();
    for (const CheckResult& c : report.checks) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["max_residual"] = c.max_residual;
        jc["threshold"] = c.threshold;
        jc["pass"] = c.pass;
        if (c.witness)
            jc["witness"] = {c.witness->first, c.witness->second};
        else
            jc["witness"] = nullptr;
        checks.push_back(jc);
    }
    j["checks"] = checks;
    j["all_pass"] = report.all_pass();
    return j.dump(2) + "\n";
}

std::string periodic_to_json(const PeriodicSystem& sys,
                             const std::vector<Matrix>& perturbation) {
    sys.require_valid("periodic_to_json");
    ordered_json j;
    j["period"] = sys.period;
    j["dimension"] = sys.dim();
    ordered_json blocks = ordered_json::array();
    for (const Matrix& b : sys.blocks) blocks.push_back(to_text(b));
    j["blocks"] = blocks;
    if (!perturbation.empty()) {
        ordered_json pert = ordered_json::array();
        for (const Matrix& b : perturbation) pert.push_back(to_text(b));
        j["perturbation"] = pert;
    }
    return j.dump(2) + "\n";
}

PeriodicFile periodic_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) throw config_error("periodic system: malformed JSON");
    for (const char* key : {"period", "dimension", "blocks"})
        if (!j.contains(key))
            throw config_error(std::string("periodic system: missing key \"") + key + "\"");
    PeriodicFile out;
    out.system.period = j["period"].get<long>();
    for (const auto& b : j["blocks"]) out.system.blocks.push_back(from_text(b.get<std::string>()));
    out.system.require_valid("periodic system");
    if (out.system.dim() != j["dimension"].get<long>())
        throw config_error("periodic system: dimension key disagrees with blocks");
    if (j.contains("perturbation")) {
        for (const auto& b : j["perturbation"])
            out.perturbation.push_back(from_text(b.get<std::string>()));
        if (out.perturbation.size() != out.system.blocks.size())
            throw config_error("periodic system: perturbation count != period");
    }
    return out;
}

std::string family_norms_csv(const EvolutionTriple& z) {
    std::ostringstream out;
    out << "n,norm_es,norm_eu,norm_ec\n";
    for (long n = -z.ec.horizon; n <= z.ec.horizon; ++n) {
        out << n << ',';
        if (n >= 0) out << format_double(op_norm(z.es.at(n)));
        out << ',';
        if (n >= 0) out << format_double(op_norm(z.eu.at(n)));
        out << ',' << format_double(op_norm(z.ec.at(n))) << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw config_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    write_text_file(tmp, content);
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw config_error("atomic rename failed: " + path);
}

}  // namespace tri
