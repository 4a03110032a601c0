#pragma once

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qamle/io.hpp"

namespace qamle {

namespace detail {

inline index_set parse_index_list(const std::string& csv) {
    index_set out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        try {
            out.push_back(static_cast<index_t>(std::stoul(cell)));
        } catch (...) {
            throw parse_error("--constraints: \"" + cell + "\" is not an index");
        }
    }
    return out;
}

inline FunctionalKind parse_kind(const std::string& s) {
    if (s == "lip") return FunctionalKind::lip;
    if (s == "gamma1") return FunctionalKind::gamma1;
    throw parse_error("--functional must be lip or gamma1");
}

struct SolveOptions {
    std::string domain, field, functional = "lip", out, log, plot_csv, constraints;
    std::string scan = "exhaustive";
    double rho = 0.0, alpha = 0.0, sigma0 = 0.0, c_b = kDefaultBoundaryFactor;
    std::size_t n0 = 3;
    long max_iter = 0;
    std::uint64_t seed = 0;
    int samples_per_iter = 64;

    RefinementConfig to_config() const {
        RefinementConfig cfg;
        cfg.rho = rho;
        cfg.alpha = alpha;
        cfg.sigma0 = sigma0;
        cfg.n0 = n0;
        cfg.max_iter = max_iter;
        cfg.scan = scan == "random" ? ScanMode::random : ScanMode::exhaustive;
        cfg.seed = seed;
        cfg.samples_per_iter = samples_per_iter;
        cfg.boundary_factor = c_b;
        return cfg;
    }
};

template <class FieldT>
int run_solve_kind(const FieldT& f, RefinementConfig cfg, const SolveOptions& opt) {
    const SolveResult<FieldT> result = solve_quasi_amle(f, cfg);
    save_solution(result, cfg, opt.out);
    if (!opt.log.empty()) save_log(result.log, result.k, opt.log);
    if (!opt.plot_csv.empty()) export_plot_csv(result.u, opt.plot_csv);
    std::cerr << "solve: " << result.iterations() << " corrections, K = " << result.k
              << ", final max gap = " << result.final_max_gap << "\n";
    return result.status == SolveStatus::converged ? 0 : 2;
}

inline int run_solve(const SolveOptions& opt) {
    const FunctionalKind kind = parse_kind(opt.functional);
    const Problem p = load_problem(opt.domain, opt.field, kind,
                                   opt.constraints.empty() ? index_set{}
                                                           : parse_index_list(opt.constraints));
    const RefinementConfig cfg =
        resolved_with_defaults(opt.to_config(), p.constraint_value(), *p.domain);
    if (kind == FunctionalKind::lip) return run_solve_kind(*p.scalar, cfg, opt);
    return run_solve_kind(*p.jets, cfg, opt);
}

struct ExtendOptions {
    std::string domain, field, mode = "average", out, plot_csv, constraints;
};

inline int run_extend(const ExtendOptions& opt) {
    const Problem p = load_problem(opt.domain, opt.field, FunctionalKind::lip,
                                   opt.constraints.empty() ? index_set{}
                                                           : parse_index_list(opt.constraints));
    index_set all(p.domain->size());
    std::iota(all.begin(), all.end(), index_t{0});
    ScalarField out(*p.domain);
    if (opt.mode == "mcshane")
        out = mcshane_upper(*p.scalar, all);
    else if (opt.mode == "whitney")
        out = whitney_lower(*p.scalar, all);
    else if (opt.mode == "average")
        out = minimal_extension_scalar(*p.scalar, all);
    else
        throw parse_error("--mode must be mcshane, whitney or average");

    json j = {{"tool", std::string(kToolName) + " " + kToolVersion},
              {"functional", "lip"},
              {"mode", opt.mode},
              {"K", p.constraint_value()}};
    j.update(field_payload(out));
    write_file_atomic(opt.out, j.dump(2) + "\n");
    if (!opt.plot_csv.empty()) export_plot_csv(out, opt.plot_csv);
    return 0;
}

struct Gamma1Options {
    std::string domain, field, out, constraints;
};

inline int run_gamma1(const Gamma1Options& opt) {
    const Problem p = load_problem(opt.domain, opt.field, FunctionalKind::gamma1,
                                   opt.constraints.empty() ? index_set{}
                                                           : parse_index_list(opt.constraints));
    const index_set support = p.jets->support();
    std::string csv = "i,j,a,b,gamma1\n";
    for (std::size_t a = 0; a < support.size(); ++a)
        for (std::size_t b = a + 1; b < support.size(); ++b) {
            const index_t i = support[a], j = support[b];
            csv += std::to_string(i) + "," + std::to_string(j) + ",";
            append_csv_double(csv, a_functional(*p.jets, i, j));
            csv += ",";
            append_csv_double(csv, b_functional(*p.jets, i, j));
            csv += ",";
            append_csv_double(csv, gamma1_pair(*p.jets, i, j));
            csv += "\n";
        }
    write_file_atomic(opt.out, csv);
    return 0;
}

struct VerifyOptions {
    std::string check, domain, field, functional = "lip", omega, balls, from_log, report,
        constraints;
    long i = -1, j = -1, via = -1;
    double eta = 0.0, beta = 0.0, epsilon = 0.0, c = -1.0, c_b = kDefaultBoundaryFactor;
};

template <class FieldT>
CheckReport dispatch_field_check(const VerifyOptions& opt, const DiscreteDomain& dom,
                                 const FieldT& f) {
    auto need_pair = [&] {
        if (opt.i < 0 || opt.j < 0) throw parse_error("verify: --i and --j are required");
    };
    if (opt.check == "chasles") {
        need_pair();
        std::optional<index_t> via;
        if (opt.via >= 0) via = static_cast<index_t>(opt.via);
        return check_chasles(f, static_cast<index_t>(opt.i), static_cast<index_t>(opt.j), via);
    }
    if (opt.check == "customs") {
        if (opt.from_log.empty()) throw parse_error("verify: --from-log is required for customs");
        const auto entries = load_log(opt.from_log);
        std::vector<BallUnion> omegas;
        double c = opt.c;
        for (const auto& e : entries) {
            omegas.push_back(e.omega);
            if (opt.c < 0.0) c = std::max(c, e.phi_after);
        }
        if (c < 0.0) c = 0.0; // empty log: vacuous bound
        return check_customs(f, omegas, c);
    }
    if (opt.check == "hmono") {
        if (opt.omega.empty()) throw parse_error("verify: --omega is required for hmono");
        return check_h_monotone(f, ball_union_from_json(read_json_file(opt.omega)), opt.c_b);
    }
    if (opt.check == "prop1") {
        if (opt.omega.empty()) throw parse_error("verify: --omega is required for prop1");
        const BallUnion omega = ball_union_from_json(read_json_file(opt.omega));
        return check_prop_alpha_zero(f, interior_members(dom, omega), opt.c_b);
    }
    if (opt.check == "p4") {
        need_pair();
        if (!(opt.eta > 0.0)) throw parse_error("verify: --eta is required for p4");
        return check_p4_continuity(f, static_cast<index_t>(opt.i), static_cast<index_t>(opt.j),
                                   opt.eta);
    }
    throw parse_error("verify: unknown check \"" + opt.check + "\"");
}

inline int run_verify(const VerifyOptions& opt) {
    if (opt.report.empty()) throw parse_error("verify: --report is required");

    CheckReport report;
    if (opt.check == "geom") {
        if (opt.domain.empty() || opt.balls.empty())
            throw parse_error("verify: geom needs --domain and --balls");
        DomainData data = load_domain_data(opt.domain, opt.constraints.empty()
                                                           ? index_set{}
                                                           : parse_index_list(opt.constraints));
        const DiscreteDomain dom(std::move(data.points), data.metric, data.constraints, data.h);
        const BallUnion balls = ball_union_from_json(read_json_file(opt.balls));
        report = check_geometrical(dom, balls.balls, opt.beta, opt.epsilon);
    } else {
        if (opt.domain.empty() || opt.field.empty())
            throw parse_error("verify: --domain and --field are required");
        DomainData data = load_domain_data(opt.domain, opt.constraints.empty()
                                                           ? index_set{}
                                                           : parse_index_list(opt.constraints));
        const DiscreteDomain dom(std::move(data.points), data.metric, data.constraints, data.h);
        const json field_json = read_json_file(opt.field);
        if (parse_kind(opt.functional) == FunctionalKind::lip) {
            const ScalarField f = scalar_field_from_json(field_json, dom);
            report = dispatch_field_check(opt, dom, f);
        } else {
            const JetField f = jet_field_from_json(field_json, dom);
            report = dispatch_field_check(opt, dom, f);
        }
    }
    save_check_report(report, opt.report);
    std::cerr << "verify " << report.name << ": " << (report.passed ? "passed" : "FAILED")
              << " (worst violation " << report.worst_violation << ", tolerance "
              << report.tolerance << ")\n";
    return report.passed ? 0 : 1;
}

} // namespace detail

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success / check passed, 1 internal assertion or failed check,
/// 2 correction budget exhausted, 3 usage or input error.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"quasi absolutely minimal Lipschitz extension solver"};
    app.require_subcommand(1);

    detail::SolveOptions solve_opt;
    CLI::App* solve = app.add_subcommand("solve", "compute a quasi-AMLE on the domain");
    solve->add_option("--domain", solve_opt.domain, "domain JSON or CSV")->required();
    solve->add_option("--field", solve_opt.field, "constraint field JSON")->required();
    solve->add_option("--functional", solve_opt.functional, "lip|gamma1");
    solve->add_option("--rho", solve_opt.rho, "minimum ball radius (default 4h)");
    solve->add_option("--n0", solve_opt.n0, "maximum balls per union");
    solve->add_option("--alpha", solve_opt.alpha, "depth parameter (default 2h)");
    solve->add_option("--sigma0", solve_opt.sigma0, "violation threshold (default 0.05K)");
    solve->add_option("--scan", solve_opt.scan, "exhaustive|random");
    solve->add_option("--seed", solve_opt.seed, "random scan seed");
    solve->add_option("--samples-per-iter", solve_opt.samples_per_iter,
                      "random unions drawn per scan");
    solve->add_option("--max-iter", solve_opt.max_iter, "correction budget");
    solve->add_option("--c-b", solve_opt.c_b, "boundary layer thickness factor");
    solve->add_option("--constraints", solve_opt.constraints, "constraint indices (CSV domains)");
    solve->add_option("--out", solve_opt.out, "solution artifact path")->required();
    solve->add_option("--log", solve_opt.log, "iteration log path (JSON lines)");
    solve->add_option("--plot-csv", solve_opt.plot_csv, "plot data export path");

    detail::ExtendOptions extend_opt;
    CLI::App* extend = app.add_subcommand("extend", "one-shot scalar extension");
    extend->add_option("--domain", extend_opt.domain)->required();
    extend->add_option("--field", extend_opt.field)->required();
    extend->add_option("--mode", extend_opt.mode, "mcshane|whitney|average");
    extend->add_option("--constraints", extend_opt.constraints);
    extend->add_option("--out", extend_opt.out)->required();
    extend->add_option("--plot-csv", extend_opt.plot_csv);

    detail::Gamma1Options gamma1_opt;
    CLI::App* gamma1 = app.add_subcommand("gamma1", "pairwise first-order functional table");
    gamma1->add_option("--domain", gamma1_opt.domain)->required();
    gamma1->add_option("--field", gamma1_opt.field, "jet field JSON")->required();
    gamma1->add_option("--constraints", gamma1_opt.constraints);
    gamma1->add_option("--out", gamma1_opt.out, "CSV table path")->required();

    detail::VerifyOptions verify_opt;
    CLI::App* verify = app.add_subcommand("verify", "run a finite-instance check");
    verify->add_option("--check", verify_opt.check, "chasles|customs|hmono|prop1|geom|p4")
        ->required();
    verify->add_option("--domain", verify_opt.domain);
    verify->add_option("--field", verify_opt.field);
    verify->add_option("--functional", verify_opt.functional, "lip|gamma1");
    verify->add_option("--constraints", verify_opt.constraints);
    verify->add_option("--i", verify_opt.i);
    verify->add_option("--j", verify_opt.j);
    verify->add_option("--via", verify_opt.via);
    verify->add_option("--eta", verify_opt.eta);
    verify->add_option("--omega", verify_opt.omega, "ball union JSON");
    verify->add_option("--balls", verify_opt.balls, "ball list JSON");
    verify->add_option("--beta", verify_opt.beta);
    verify->add_option("--epsilon", verify_opt.epsilon);
    verify->add_option("--c", verify_opt.c, "customs bound (default: max logged phi_after)");
    verify->add_option("--c-b", verify_opt.c_b);
    verify->add_option("--from-log", verify_opt.from_log, "solve log to replay");
    verify->add_option("--report", verify_opt.report, "check report path")->required();

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return detail::run_solve(solve_opt);
        if (extend->parsed()) return detail::run_extend(extend_opt);
        if (gamma1->parsed()) return detail::run_gamma1(gamma1_opt);
        if (verify->parsed()) return detail::run_verify(verify_opt);
        return 3;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    } catch (const internal_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace qamle
