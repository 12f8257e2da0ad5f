#pragma once

// Command-line layer: flat key=value configuration, CSV emission and parsing,
// SVG plotting, and the subcommand entry points used by the `cncfl` tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cncfl/engine.hpp"

namespace cncfl::cli {

// ---- configuration ------------------------------------------------------

/// Ordered key=value pairs as read from a config file or --set flags.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment; blank lines are ignored.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);

const std::vector<std::string>& known_keys();

/// Builds a configuration: the preset (if a `preset` key is present) or the
/// defaults, then every key in order. Unknown keys and, without a preset, missing
/// required keys raise ConfigError naming them.
ExperimentConfig resolve_config(const KeyValues& kv);

/// Canonical dump of every key; floats use 17 significant digits so the text
/// resolves back to an identical configuration.
std::string to_config_text(const ExperimentConfig& cfg);

/// The preset name when the configuration is exactly that preset, otherwise
/// `<preset-or-cfg>-<hash>` over the canonical text (strategy and seed excluded).
std::string config_stem(const ExperimentConfig& cfg);

/// `<stem>_<strategy>_seed<seed>`: the output file stem of a single run.
std::string run_label(const ExperimentConfig& cfg);

// ---- CSV ----------------------------------------------------------------

inline constexpr int kCsvSchemaVersion = 1;
extern const char* const kCsvHeader;

/// Shortest round-trippable text with at most 9 significant digits; locale independent.
std::string format_number(double v, int significant = 9);

struct Series {
    std::string label;
    std::vector<MetricsRecord> records;
};

/// Long-format CSV; rows are ordered by round, then by series order.
void write_metrics_csv(std::ostream& out, std::span<const Series> series);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);

// ---- SVG ----------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Self-contained SVG 1.1 line chart with axes, ticks, labels and legend.
std::string render_svg(std::span<const PlotSeries> series, const std::string& x_label, const std::string& y_label);

// ---- subcommands ---------------------------------------------------------

struct RunRequest {
    std::optional<std::filesystem::path> config;
    KeyValues overrides;   // applied after the config file
    std::filesystem::path out_dir = ".";
    bool verbose = false;
};

/// Runs one experiment, writes `<label>.csv` and `<label>.manifest`.
int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err);

/// Runs every strategy variant with the same seed into one long-format CSV.
/// A variant is `strategy` or `strategy:key=value;key=value`.
int cmd_compare(const RunRequest& req, const std::vector<std::string>& variants, std::ostream& out, std::ostream& err);

struct OracleRequest {
    std::vector<std::size_t> sizes{6};
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    double corrupt = 0.0;   // negative control: perturbs Hungarian totals
};
int cmd_oracle_check(const OracleRequest& req, std::ostream& out, std::ostream& err);

int cmd_plot(const std::filesystem::path& csv, const std::string& x_field, const std::string& y_field,
             const std::filesystem::path& out_svg, std::ostream& out, std::ostream& err);

/// Writes `count,strategy,mean_round_wallclock_s` rows.
int cmd_sweep(const RunRequest& req, const std::vector<std::size_t>& counts, const std::vector<std::string>& strategies,
              std::ostream& out, std::ostream& err);

} // namespace cncfl::cli
