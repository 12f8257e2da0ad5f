#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cncfl/cli.hpp"
#include "cncfl/error.hpp"
#include "cncfl/oracle.hpp"

namespace cncfl::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

KeyValues gather(const RunRequest& req) {
    KeyValues kv;
    if (req.config) kv = read_key_values(*req.config);
    kv.insert(kv.end(), req.overrides.begin(), req.overrides.end());
    return kv;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

std::string summary(const std::string& label, const std::vector<MetricsRecord>& records) {
    const auto& last = records.back();
    return label + ": rounds=" + std::to_string(records.size()) + " final_accuracy=" + format_number(last.test_accuracy) +
           " total_tx_energy_j=" + format_number(last.cum_sum_tx_energy_j) +
           " total_delay_s=" + format_number(last.cum_round_wallclock_s);
}

RunOptions options_for(const RunRequest& req, std::ostream& out) {
    RunOptions opts;
    if (req.verbose)
        opts.on_round = [&out](const MetricsRecord& r) {
            out << "round " << r.round << " acc=" << format_number(r.test_accuracy, 4)
                << " energy_j=" << format_number(r.sum_tx_energy_j, 4)
                << " wallclock_s=" << format_number(r.round_wallclock_s, 4) << '\n';
        };
    return opts;
}

// `strategy` or `strategy:key=value;key=value`
KeyValues variant_overrides(const std::string& variant) {
    KeyValues kv;
    const auto colon = variant.find(':');
    kv.emplace_back("strategy", variant.substr(0, colon));
    if (colon == std::string::npos) return kv;
    std::stringstream ss(variant.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("variant '" + variant + "': expected key=value after ':'");
        kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return kv;
}

// Maps exceptions onto exit codes: configuration and input problems are usage
// errors, everything else is a run failure.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve_config(gather(req));
        const auto records = run_experiment(cfg, options_for(req, out));
        const std::string label = run_label(cfg);
        std::ostringstream csv;
        const Series s{std::string(to_string(cfg.strategy)), records};
        write_metrics_csv(csv, std::span(&s, 1));
        write_file(req.out_dir / (label + ".csv"), csv.str());
        write_file(req.out_dir / (label + ".manifest"), to_config_text(cfg));
        out << summary(label, records) << " csv=" << (req.out_dir / (label + ".csv")).string() << '\n';
        return kExitOk;
    });
}

int cmd_compare(const RunRequest& req, const std::vector<std::string>& variants, std::ostream& out, std::ostream& err) {
    if (variants.size() < 2) {
        err << "usage error: compare needs at least two strategies\n";
        return kExitUsage;
    }
    return guarded(err, [&] {
        const KeyValues base = gather(req);
        const ExperimentConfig base_cfg = resolve_config(base);
        std::vector<Series> series;
        std::string manifest = to_config_text(base_cfg);
        for (const auto& v : variants) {
            KeyValues kv = base;
            const KeyValues extra = variant_overrides(v);
            kv.insert(kv.end(), extra.begin(), extra.end());
            const ExperimentConfig cfg = resolve_config(kv);
            auto records = run_experiment(cfg, options_for(req, out));
            out << summary(v, records) << '\n';
            series.push_back({v, std::move(records)});
            manifest += "# variant: " + v + "\n";
        }
        const std::string label = config_stem(base_cfg) + "_compare_seed" + std::to_string(base_cfg.seed);
        std::ostringstream csv;
        write_metrics_csv(csv, series);
        write_file(req.out_dir / (label + ".csv"), csv.str());
        write_file(req.out_dir / (label + ".manifest"), manifest);
        out << "csv=" << (req.out_dir / (label + ".csv")).string() << '\n';
        return kExitOk;
    });
}

int cmd_oracle_check(const OracleRequest& req, std::ostream& out, std::ostream& err) {
    for (std::size_t n : req.sizes) {
        if (n < 1 || n > kHeldKarpMaxNodes) {
            err << "usage error: size " << n << " outside [1, " << kHeldKarpMaxNodes << "]\n";
            return kExitUsage;
        }
    }
    if (req.trials == 0) err << "warning: trials=0, every check passes vacuously\n";

    return guarded(err, [&] {
        bool all_ok = true;
        auto report = [&](const oracle::SweepResult& r, const std::string& verdict, std::size_t n) {
            out << r.name << ": " << r.passed << "/" << r.trials << " " << verdict;
            if (n) out << " (n=" << n << ")";
            if (!r.ok()) out << " worst_gap=" << format_number(r.worst);
            out << '\n';
            all_ok = all_ok && r.ok();
        };
        for (std::size_t n : req.sizes) {
            if (n <= kBruteForceMaxDim) {
                report(oracle::check_hungarian(n, req.trials, req.seed, req.corrupt), "exact", n);
                report(oracle::check_bottleneck(n, req.trials, req.seed), "exact", n);
            } else {
                out << "assignment checks skipped for n=" << n << " (exhaustive limit " << kBruteForceMaxDim << ")\n";
            }
            report(oracle::check_greedy_vs_held_karp(n, req.trials, req.seed), "sound", n);
        }
        report(oracle::check_gradient(req.trials, req.seed), "within 1e-4", 0);
        out << (all_ok ? "oracle-check: PASS" : "oracle-check: FAIL") << '\n';
        return all_ok ? kExitOk : kExitFailure;
    });
}

int cmd_plot(const std::filesystem::path& csv, const std::string& x_field, const std::string& y_field,
             const std::filesystem::path& out_svg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::ifstream in(csv);
        if (!in) throw ParseError("cannot open CSV " + csv.string());
        const CsvTable table = read_csv(in);
        const auto xi = table.column(x_field);
        const auto yi = table.column(y_field);
        if (!xi || !yi) {
            std::string avail;
            for (const auto& h : table.header) avail += (avail.empty() ? "" : ", ") + h;
            throw ConfigError("CSV has no field '" + (xi ? y_field : x_field) + "'; available fields: " + avail);
        }
        const auto si = table.column("strategy");
        std::vector<PlotSeries> series;
        std::map<std::string, std::size_t> index;
        for (const auto& row : table.rows) {
            const std::string label = si ? row[*si] : "series";
            auto it = index.find(label);
            if (it == index.end()) {
                it = index.emplace(label, series.size()).first;
                series.push_back({label, {}});
            }
            auto parse = [&](const std::string& cell, const std::string& field) {
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (ec != std::errc() || ptr != cell.data() + cell.size())
                    throw ParseError("field '" + field + "' holds non-numeric value '" + cell + "'");
                return v;
            };
            series[it->second].points.emplace_back(parse(row[*xi], x_field), parse(row[*yi], y_field));
        }
        if (table.rows.empty()) err << "warning: " << csv.string() << " has no data rows; writing empty axes\n";
        write_file(out_svg, render_svg(series, x_field, y_field));
        out << "svg=" << out_svg.string() << " series=" << series.size() << '\n';
        return kExitOk;
    });
}

int cmd_sweep(const RunRequest& req, const std::vector<std::size_t>& counts, const std::vector<std::string>& strategies,
              std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        KeyValues kv = gather(req);
        // Sweeps override num_clients per row; validate the base against the largest count.
        std::size_t largest = 1;
        for (auto c : counts) largest = std::max(largest, c);
        kv.emplace_back("num_clients", std::to_string(largest));
        if (std::none_of(kv.begin(), kv.end(), [](const auto& p) { return p.first == "architecture"; }))
            kv.emplace_back("architecture", "p2p");
        const ExperimentConfig cfg = resolve_config(kv);
        std::vector<Strategy> parsed;
        for (const auto& s : strategies) parsed.push_back(parse_strategy(s));
        const auto rows = sweep_clients(cfg, counts, parsed);

        std::ostringstream csv;
        csv << "count,strategy,mean_round_wallclock_s\n";
        for (const auto& r : rows) {
            csv << r.clients << ',' << to_string(r.strategy) << ',' << format_number(r.mean_round_wallclock_s) << '\n';
            out << "clients=" << r.clients << " strategy=" << to_string(r.strategy)
                << " mean_round_wallclock_s=" << format_number(r.mean_round_wallclock_s) << '\n';
        }
        const std::string label = config_stem(cfg) + "_sweep_seed" + std::to_string(cfg.seed);
        write_file(req.out_dir / (label + ".csv"), csv.str());
        out << "csv=" << (req.out_dir / (label + ".csv")).string() << '\n';
        return kExitOk;
    });
}

} // namespace cncfl::cli
