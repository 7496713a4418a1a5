#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "clines/commands.hpp"

namespace {

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected comma-separated numbers, got '" + text + "'");
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiple positive solutions of coupled indefinite-weight Neumann problems"};
    app.require_subcommand(1);

    clines::RunConfig cfg;
    std::string lambda_text;
    std::string threshold_text = "auto";
    double tol = 0.0;
    double rho = 0.0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", cfg.config, "problem or genetics JSON file");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--jobs", cfg.jobs, "concurrent Newton starts")->check(CLI::PositiveNumber);
        sub->add_option("--seed", cfg.seed, "seed for sampling-based checks");
        sub->add_option("--tol", tol, "solver tolerance (verify: uniform check tolerance)")->check(CLI::PositiveNumber);
        sub->add_option("--grid", cfg.grid, "multistart grid points per axis")->check(CLI::Range(2, 100000));
        sub->add_option("--lambda", lambda_text, "lambda_1, or one lambda per equation, or a sweep grid");
        sub->add_option("--rho", rho, "level for the lambda* estimate")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--thresholds", threshold_text, "r,rho,R or auto");
    };

    CLI::App* check = app.add_subcommand("check", "admissibility report");
    CLI::App* solve = app.add_subcommand("solve", "multistart solve, census and archive");
    CLI::App* sweep = app.add_subcommand("sweep", "lambda continuation and lambda* estimates");
    CLI::App* genetics = app.add_subcommand("genetics", "build the selection-migration problem");
    CLI::App* verify = app.add_subcommand("verify", "re-verify an archive");
    for (CLI::App* sub : {check, solve, sweep, genetics, verify}) common(sub);
    verify->add_option("archive", cfg.archive, "archive directory (defaults to --out)");
    genetics->add_option("--samples", cfg.samples, "identity-check samples");

    try {
        app.parse(argc, argv);
        if (!lambda_text.empty()) cfg.lambdas = parse_list(lambda_text, "--lambda");
        if (threshold_text != "auto") {
            const std::vector<double> t = parse_list(threshold_text, "--thresholds");
            if (t.size() != 3) throw CLI::ValidationError("--thresholds", "expected r,rho,R or auto");
            clines::Thresholds th;
            th.r = t[0];
            th.rho = t[1];
            th.R = t[2];
            th.validate();
            cfg.thresholds = th;
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : clines::exit_code::usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return clines::exit_code::usage;
    }
    for (CLI::App* sub : {check, solve, sweep, genetics, verify}) {
        if (sub->count("--tol") > 0) cfg.tol = tol;
        if (sub->count("--rho") > 0) cfg.rho = rho;
    }

    if (check->parsed()) return clines::run_check(cfg, std::cout, std::cerr);
    if (solve->parsed()) return clines::run_solve(cfg, std::cout, std::cerr);
    if (sweep->parsed()) return clines::run_sweep(cfg, std::cout, std::cerr);
    if (genetics->parsed()) return clines::run_genetics(cfg, std::cout, std::cerr);
    return clines::run_verify(cfg, std::cout, std::cerr);
}
