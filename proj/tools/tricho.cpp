// tricho: experiment runner for trichotomy certification, Lyapunov-Perron
// perturbation solves, verification batteries, delta sweeps and the periodic
// (Howland) pipeline.
//
// Exit codes: 0 pass, 1 validation error, 2 numerical failure, 3 check
// violation.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tri/reports.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Cli {
    std::string config_path;
    std::string out_dir = "./out";
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

struct Instance {
    tri::Matrix a;
    tri::TrichotomyCertificate cert;
    double similarity_cond = 1.0;
};

std::uint64_t config_seed(const ordered_json& cfg, const Cli& cli) {
    if (cli.seed_override) return *cli.seed_override;
    return cfg.value("seed", std::uint64_t{0});
}

double require_number(const ordered_json& cfg, const char* key) {
    if (!cfg.contains(key))
        throw tri::config_error(std::string("config: missing required key \"") + key + "\"");
    return cfg[key].get<double>();
}

tri::GeneratedInstance generate_from_config(const ordered_json& cfg, std::uint64_t seed) {
    if (!cfg.contains("dims") || !cfg.contains("moduli"))
        throw tri::config_error("config: generation needs \"dims\" and \"moduli\"");
    auto dims = cfg["dims"].get<std::vector<int>>();
    auto moduli = cfg["moduli"].get<std::vector<std::vector<double>>>();
    if (dims.size() != 3 || moduli.size() != 3)
        throw tri::config_error("config: \"dims\" and \"moduli\" must have 3 entries");
    auto interval = [&](size_t i) -> std::array<double, 2> {
        if (moduli[i].size() == 1) return {moduli[i][0], moduli[i][0]};
        if (moduli[i].size() == 2) return {moduli[i][0], moduli[i][1]};
        throw tri::config_error("config: each moduli entry is [lo, hi] or [value]");
    };
    tri::GeneratorOptions opt;
    opt.cond_target = cfg.value("cond", 10.0);
    opt.identity_similarity = cfg.value("identity_similarity", false);
    opt.random_phases = cfg.value("random_phases", true);
    return tri::random_trichotomic(dims[0], dims[1], dims[2], interval(0), interval(1),
                                   interval(2), seed, opt);
}

Instance load_or_generate(const ordered_json& cfg, std::uint64_t seed) {
    Instance inst;
    long horizon = static_cast<long>(cfg.value("horizon", 80.0));
    if (cfg.contains("matrix_a")) {
        inst.a = tri::load_matrix(cfg["matrix_a"].get<std::string>());
        if (cfg.contains("certificate")) {
            inst.cert =
                tri::certificate_from_json(tri::read_text_file(cfg["certificate"].get<std::string>()));
        } else {
            inst.cert = tri::certify(inst.a, require_number(cfg, "alpha"),
                                     require_number(cfg, "rho0"),
                                     require_number(cfg, "rho"), horizon);
        }
        return inst;
    }
    tri::GeneratedInstance gen = generate_from_config(cfg, seed);
    double alpha = cfg.value("alpha", gen.splitting.alpha);
    inst.a = gen.matrix;
    inst.cert = tri::certify(inst.a, alpha, require_number(cfg, "rho0"),
                             require_number(cfg, "rho"), horizon);
    inst.similarity_cond = gen.similarity_cond;
    return inst;
}

tri::Matrix random_direction(Eigen::Index d, std::uint64_t seed) {
    tri::Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    tri::Matrix b(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            b(i, j) = tri::Complex(rng.gaussian(), rng.gaussian());
    return b / tri::op_norm(b);
}

tri::Matrix perturbation_matrix(const ordered_json& cfg, const Instance& inst,
                                const tri::RateParams& rates, std::uint64_t seed,
                                std::optional<double> delta_override = std::nullopt) {
    const Eigen::Index d = inst.a.rows();
    if (!delta_override && cfg.contains("matrix_b"))
        return tri::load_matrix(cfg["matrix_b"].get<std::string>());
    double delta;
    if (delta_override) {
        delta = *delta_override;
    } else if (cfg.contains("delta")) {
        delta = cfg["delta"].get<double>();
    } else if (cfg.contains("delta_fraction")) {
        tri::PerturbationBudget budget =
            tri::compute_budget(inst.cert, rates, tri::Matrix::Zero(d, d));
        delta = cfg["delta_fraction"].get<double>() * budget.delta_max;
    } else {
        throw tri::config_error("config: need \"matrix_b\", \"delta\" or \"delta_fraction\"");
    }
    if (delta == 0.0) return tri::Matrix::Zero(d, d);
    return delta * random_direction(d, seed);
}

tri::RateParams rates_from_config(const ordered_json& cfg) {
    tri::RateParams r;
    r.rho0_hat = require_number(cfg, "rho0_hat");
    r.rho_hat = require_number(cfg, "rho_hat");
    return r;
}

tri::PerturbationProblem problem_from_config(const ordered_json& cfg, const Instance& inst,
                                             const tri::Matrix& b) {
    tri::PerturbationProblem p;
    p.matrix_a = inst.a;
    p.cert = inst.cert;
    p.matrix_b = b;
    p.rates = rates_from_config(cfg);
    p.horizon = static_cast<long>(cfg.value("horizon", 80.0));
    p.fp_tol = cfg.value("fp_tol", 1e-12);
    p.tail_tol = cfg.value("tail_tol", 1e-13);
    p.max_iter = static_cast<long>(cfg.value("max_iter", 10000.0));
    return p;
}

int run_gen(const ordered_json& cfg, const Cli& cli, std::uint64_t seed) {
    Instance inst = load_or_generate(cfg, seed);
    tri::save_matrix((fs::path(cli.out_dir) / "A.txt").string(), inst.a);
    tri::write_text_file((fs::path(cli.out_dir) / "certificate.json").string(),
                         tri::certificate_to_json(inst.cert));
    if (!cli.quiet)
        std::cout << "gen: dim " << inst.a.rows() << ", kappa "
                  << tri::format_double(inst.cert.kappa) << ", cond(Q) "
                  << tri::format_double(inst.similarity_cond) << "\n";
    return 0;
}

int run_solve(const ordered_json& cfg, const Cli& cli, std::uint64_t seed) {
    Instance inst = load_or_generate(cfg, seed);
    tri::RateParams rates = rates_from_config(cfg);
    tri::Matrix b = perturbation_matrix(cfg, inst, rates, seed);
    tri::PerturbationProblem p = problem_from_config(cfg, inst, b);
    tri::SolveResult result = tri::solve_perturbed(p);

    long long ts = static_cast<long long>(std::time(nullptr));
    tri::write_text_file((fs::path(cli.out_dir) / "solve_report.json").string(),
                         tri::solve_report_to_json(p, result, ts));
    tri::write_text_file((fs::path(cli.out_dir) / "families.csv").string(),
                         tri::family_norms_csv(result.z));
    if (!cli.quiet)
        std::cout << "solve: iterations " << result.report.iterations << ", residual "
                  << tri::format_double(result.report.final_residual) << ", converged "
                  << (result.report.converged ? "yes" : "no") << "\n";
    return result.report.converged ? 0 : 2;
}

int run_verify(const ordered_json& cfg, const Cli& cli, std::uint64_t seed) {
    Instance inst = load_or_generate(cfg, seed);
    tri::RateParams rates = rates_from_config(cfg);
    tri::Matrix b = perturbation_matrix(cfg, inst, rates, seed);
    tri::PerturbationProblem p = problem_from_config(cfg, inst, b);
    tri::SolveResult result = tri::solve_perturbed(p);

    // residual thresholds scale with the generator conditioning
    double tol = cfg.value("tol", 1e-8) * std::max(1.0, inst.similarity_cond);
    tri::VerifyReport rep = tri::check_structure(result.z, p.matrix_a, p.matrix_b, tol);
    tri::VerifyReport bounds = tri::check_bounds(p, result.z, result.report.budget);
    tri::VerifyReport oracle = tri::oracle_compare(p, result.z, tol);
    rep.checks.insert(rep.checks.end(), bounds.checks.begin(), bounds.checks.end());
    rep.checks.insert(rep.checks.end(), oracle.checks.begin(), oracle.checks.end());
    rep.oracle_available = oracle.oracle_available;

    long long ts = static_cast<long long>(std::time(nullptr));
    tri::write_text_file((fs::path(cli.out_dir) / "verify_report.json").string(),
                         tri::verify_report_to_json(rep, ts));
    tri::write_text_file((fs::path(cli.out_dir) / "solve_report.json").string(),
                         tri::solve_report_to_json(p, result, ts));
    bool pass = result.report.converged && rep.all_pass();
    if (!cli.quiet) {
        for (const auto& c : rep.checks)
            std::cout << (c.pass ? "  pass " : "  FAIL ") << c.name << " residual "
                      << tri::format_double(c.max_residual) << "\n";
        std::cout << "verify: " << (pass ? "all checks pass" : "violations found") << "\n";
    }
    if (!result.report.converged) return 2;
    return pass ? 0 : 3;
}

int run_sweep(const ordered_json& cfg, const Cli& cli, std::uint64_t seed) {
    Instance inst = load_or_generate(cfg, seed);
    tri::RateParams rates = rates_from_config(cfg);

    std::vector<double> grid;
    if (cfg.contains("delta_grid")) {
        grid = cfg["delta_grid"].get<std::vector<double>>();
    } else if (cfg.contains("delta_grid_fraction")) {
        tri::PerturbationBudget budget = tri::compute_budget(
            inst.cert, rates, tri::Matrix::Zero(inst.a.rows(), inst.a.rows()));
        for (double f : cfg["delta_grid_fraction"].get<std::vector<double>>())
            grid.push_back(f * budget.delta_max);
    } else {
        throw tri::config_error("config: sweep needs \"delta_grid\" or \"delta_grid_fraction\"");
    }

    std::ostringstream csv;
    csv << "delta,bound,measured_projector_distance,envelope_slack,pass\n";
    bool all_pass = true;
    long long ts = static_cast<long long>(std::time(nullptr));
    int point = 0;
    for (double delta : grid) {
        tri::Matrix b = perturbation_matrix(cfg, inst, rates, seed, delta);
        tri::PerturbationProblem p = problem_from_config(cfg, inst, b);
        tri::SolveResult result = tri::solve_perturbed(p);
        tri::VerifyReport bounds = tri::check_bounds(p, result.z, result.report.budget);

        double bound = inst.cert.kappa * result.report.budget.delta /
                       (result.report.budget.delta0 - result.report.budget.delta);
        double measured = std::max({tri::op_norm(result.z.es.at(0) - inst.cert.splitting.pi_s),
                                    tri::op_norm(result.z.eu.at(0) - inst.cert.splitting.pi_u),
                                    tri::op_norm(result.z.ec.at(0) - inst.cert.splitting.pi_c)});
        double worst_ratio = 0.0;
        for (const auto& c : bounds.checks) worst_ratio = std::max(worst_ratio, c.max_residual);
        bool pass = result.report.converged && bounds.all_pass();
        all_pass = all_pass && pass;
        csv << tri::format_double(delta) << ',' << tri::format_double(bound) << ','
            << tri::format_double(measured) << ',' << tri::format_double(1.0 - worst_ratio)
            << ',' << (pass ? "1" : "0") << '\n';

        std::string name = "sweep_point_" + std::to_string(point++) + ".json";
        tri::write_text_file_atomic((fs::path(cli.out_dir) / name).string(),
                                    tri::solve_report_to_json(p, result, ts));
    }
    tri::write_text_file_atomic((fs::path(cli.out_dir) / "sweep.csv").string(), csv.str());
    if (!cli.quiet) std::cout << "sweep: " << grid.size() << " points, "
                              << (all_pass ? "all pass" : "violations found") << "\n";
    return all_pass ? 0 : 3;
}

int run_howland(const ordered_json& cfg, const Cli& cli, std::uint64_t seed) {
    tri::PeriodicSystem sys;
    std::vector<tri::Matrix> bseq;
    if (cfg.contains("periodic_file")) {
        tri::PeriodicFile pf =
            tri::periodic_from_json(tri::read_text_file(cfg["periodic_file"].get<std::string>()));
        sys = pf.system;
        bseq = pf.perturbation;
    } else {
        if (!cfg.contains("dims") || !cfg.contains("moduli"))
            throw tri::config_error("config: howland generation needs \"dims\" and \"moduli\"");
        long period = static_cast<long>(cfg.value("period", 3.0));
        auto dims = cfg["dims"].get<std::vector<int>>();
        auto moduli = cfg["moduli"].get<std::vector<std::vector<double>>>();
        if (dims.size() != 3 || moduli.size() != 3)
            throw tri::config_error("config: \"dims\" and \"moduli\" must have 3 entries");
        auto interval = [&](size_t i) -> std::array<double, 2> {
            if (moduli[i].size() == 1) return {moduli[i][0], moduli[i][0]};
            return {moduli[i][0], moduli[i][1]};
        };
        tri::GeneratorOptions opt;
        opt.random_phases = cfg.value("random_phases", true);
        opt.identity_similarity = cfg.value("identity_similarity", false);
        tri::GeneratedPeriodic gp =
            tri::random_periodic(period, dims[0], dims[1], dims[2], interval(0), interval(1),
                                 interval(2), seed, opt);
        sys = gp.system;
    }

    tri::HowlandParams params;
    params.alpha = require_number(cfg, "alpha");
    params.rho0 = require_number(cfg, "rho0");
    params.rho = require_number(cfg, "rho");
    params.rates = rates_from_config(cfg);
    params.horizon = static_cast<long>(cfg.value("horizon", 60.0));
    params.fp_tol = cfg.value("fp_tol", 1e-12);
    params.tail_tol = cfg.value("tail_tol", 1e-13);
    params.max_iter = static_cast<long>(cfg.value("max_iter", 10000.0));
    params.tol = cfg.value("tol", 1e-8);

    if (bseq.empty()) {
        double frac = cfg.value("delta_fraction", 0.0);
        if (frac == 0.0 && !cfg.contains("delta"))
            throw tri::config_error("config: howland needs perturbation blocks, \"delta\" or \"delta_fraction\"");
        // budget needs the lift certificate; build it through a dry pipeline pass
        tri::FamilySplitting fam =
            tri::floquet_split(sys, params.alpha, params.rho0, params.rho, params.horizon);
        tri::Matrix lift = tri::lift_operator(sys);
        tri::Splitting lifted = tri::lift_splitting(fam, params.alpha);
        tri::KappaMeasurement km =
            tri::measure_kappa(lift, lifted, params.rho0, params.rho, params.horizon);
        tri::TrichotomyCertificate cert;
        cert.splitting = lifted;
        cert.kappa = km.kappa;
        cert.rho0 = params.rho0;
        cert.rho = params.rho;
        cert.horizon_checked = params.horizon;
        double delta = cfg.contains("delta")
                           ? cfg["delta"].get<double>()
                           : frac * tri::compute_budget(cert, params.rates,
                                                        tri::Matrix::Zero(lift.rows(), lift.rows()))
                                        .delta_max;
        for (long k = 0; k < sys.period; ++k)
            bseq.push_back(delta * random_direction(sys.dim(), seed + 2000 + static_cast<std::uint64_t>(k)));
    }

    tri::HowlandResult result = tri::perturb_periodic(sys, bseq, params);
    long long ts = static_cast<long long>(std::time(nullptr));
    tri::write_text_file((fs::path(cli.out_dir) / "howland_report.json").string(),
                         tri::verify_report_to_json(result.report, ts));
    tri::PerturbationProblem lift_problem;
    lift_problem.matrix_a = tri::lift_operator(sys);
    lift_problem.cert = result.lift_cert;
    lift_problem.matrix_b = tri::lift_perturbation(sys, bseq);
    lift_problem.rates = params.rates;
    lift_problem.horizon = params.horizon;
    lift_problem.fp_tol = params.fp_tol;
    lift_problem.tail_tol = params.tail_tol;
    lift_problem.max_iter = params.max_iter;
    tri::write_text_file((fs::path(cli.out_dir) / "howland_solve.json").string(),
                         tri::solve_report_to_json(lift_problem, result.solve, ts));
    tri::write_text_file((fs::path(cli.out_dir) / "periodic_system.json").string(),
                         tri::periodic_to_json(sys, bseq));
    bool pass = result.solve.report.converged && result.report.all_pass();
    if (!cli.quiet) {
        for (const auto& c : result.report.checks)
            std::cout << (c.pass ? "  pass " : "  FAIL ") << c.name << " residual "
                      << tri::format_double(c.max_residual) << "\n";
        std::cout << "howland: " << (pass ? "all checks pass" : "violations found") << "\n";
    }
    if (!result.solve.report.converged) return 2;
    return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trichotomy experiment runner"};
    Cli cli;
    std::uint64_t seed_opt = 0;
    bool seed_given = false;
    app.add_option("--config", cli.config_path, "experiment config JSON")->required();
    app.add_option("--out", cli.out_dir, "output directory (default ./out)");
    app.add_option("--seed", seed_opt, "seed override")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_flag("--quiet", cli.quiet, "suppress progress output");
    CLI11_PARSE(app, argc, argv);
    if (seed_given) cli.seed_override = seed_opt;

    try {
        ordered_json cfg =
            ordered_json::parse(tri::read_text_file(cli.config_path), nullptr, false);
        if (cfg.is_discarded()) throw tri::config_error("config: malformed JSON");
        if (!cfg.contains("mode")) throw tri::config_error("config: missing \"mode\"");
        std::string mode = cfg["mode"].get<std::string>();
        if (cfg.contains("out") && cli.out_dir == "./out")
            cli.out_dir = cfg["out"].get<std::string>();
        fs::create_directories(cli.out_dir);
        std::uint64_t seed = config_seed(cfg, cli);

        if (mode == "gen") return run_gen(cfg, cli, seed);
        if (mode == "solve") return run_solve(cfg, cli, seed);
        if (mode == "verify") return run_verify(cfg, cli, seed);
        if (mode == "sweep") return run_sweep(cfg, cli, seed);
        if (mode == "howland") return run_howland(cfg, cli, seed);
        throw tri::config_error("config: unknown mode \"" + mode + "\"");
    } catch (const tri::config_error& e) {
        std::cerr << "error(validation): " << e.what() << "\n";
        return 1;
    } catch (const tri::numerical_error& e) {
        std::cerr << "error(numerical): " << e.what() << "\n";
        return 2;
    } catch (const tri::structure_error& e) {
        std::cerr << "error(check): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
