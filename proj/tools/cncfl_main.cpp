#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cncfl/cli.hpp"

namespace {

using cncfl::cli::KeyValues;
using cncfl::cli::RunRequest;

struct CommonFlags {
    std::string config;
    std::string preset;
    std::string strategy;
    std::string seed;
    std::vector<std::string> sets;
    std::string out_dir = ".";
    bool verbose = false;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_strategy) {
    app->add_option("--config", f.config, "key=value configuration file")->check(CLI::ExistingFile);
    app->add_option("--preset", f.preset, "named preset (Pr1..Pr6)");
    if (with_strategy) app->add_option("--strategy", f.strategy, "strategy name");
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--set", f.sets, "override, key=value (repeatable)");
    app->add_option("--out-dir", f.out_dir, "output directory");
    app->add_flag("-v,--verbose", f.verbose, "per-round progress");
}

// Returns false and prints a message if a --set item is malformed.
bool to_request(const CommonFlags& f, RunRequest& req) {
    if (!f.config.empty()) req.config = f.config;
    if (!f.preset.empty()) req.overrides.emplace_back("preset", f.preset);
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "usage error: --set expects key=value, got '" << s << "'\n";
            return false;
        }
        req.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!f.strategy.empty()) req.overrides.emplace_back("strategy", f.strategy);
    if (!f.seed.empty()) req.overrides.emplace_back("seed", f.seed);
    req.out_dir = f.out_dir;
    req.verbose = f.verbose;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cncfl: federated learning network optimization simulator"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "run one experiment and write its metrics CSV");
    add_common(run, run_flags, true);

    CommonFlags cmp_flags;
    std::vector<std::string> variants;
    auto* compare = app.add_subcommand("compare", "run several strategies with the same seed into one CSV");
    add_common(compare, cmp_flags, false);
    compare->add_option("--strategies", variants, "strategy[:key=value;...] (at least two)")->delimiter(',');

    cncfl::cli::OracleRequest oracle_req;
    auto* oracle = app.add_subcommand("oracle-check", "cross-check optimizers against exhaustive oracles");
    oracle->add_option("--sizes", oracle_req.sizes, "problem sizes")->delimiter(',');
    oracle->add_option("--trials", oracle_req.trials, "random instances per size");
    oracle->add_option("--seed", oracle_req.seed, "seed");
    oracle->add_option("--corrupt", oracle_req.corrupt)->group("");

    std::string plot_csv, plot_x = "round", plot_y = "test_accuracy", plot_out;
    auto* plot = app.add_subcommand("plot", "render a metrics CSV as an SVG line chart");
    plot->add_option("csv", plot_csv, "input CSV")->required();
    plot->add_option("--x", plot_x, "x field");
    plot->add_option("--y", plot_y, "y field");
    plot->add_option("-o,--out", plot_out, "output SVG (default: <csv>.svg)");

    CommonFlags sweep_flags;
    std::vector<std::size_t> counts{4, 8, 12, 16, 20};
    std::vector<std::string> sweep_strategies{"cnc_optimized", "p2p_full_chain"};
    auto* sweep = app.add_subcommand("sweep", "mean per-round delay versus client count (p2p)");
    add_common(sweep, sweep_flags, false);
    sweep->add_option("--counts", counts, "client counts")->delimiter(',');
    sweep->add_option("--strategies", sweep_strategies, "strategies")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    RunRequest req;
    if (*run) {
        if (!to_request(run_flags, req)) return 2;
        return cncfl::cli::cmd_run(req, std::cout, std::cerr);
    }
    if (*compare) {
        if (!to_request(cmp_flags, req)) return 2;
        return cncfl::cli::cmd_compare(req, variants, std::cout, std::cerr);
    }
    if (*oracle) return cncfl::cli::cmd_oracle_check(oracle_req, std::cout, std::cerr);
    if (*plot) {
        const std::string out = plot_out.empty() ? plot_csv + ".svg" : plot_out;
        return cncfl::cli::cmd_plot(plot_csv, plot_x, plot_y, out, std::cout, std::cerr);
    }
    if (*sweep) {
        if (!to_request(sweep_flags, req)) return 2;
        return cncfl::cli::cmd_sweep(req, counts, sweep_strategies, std::cout, std::cerr);
    }
    return 2;
}
