#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cncfl/cli.hpp"
#include "cncfl/error.hpp"

using namespace cncfl;
using namespace cncfl::cli;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

RunRequest quick_request(const fs::path& out) {
    RunRequest req;
    req.overrides = {{"preset", "Pr5"}, {"global_epoch", "3"}, {"samples", "1200"}};
    req.out_dir = out;
    return req;
}

} // namespace

TEST_CASE("key=value parsing") {
    const auto kv = parse("# comment\n\nnum_clients = 20  # trailing\n lr=0.05\n");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>{"num_clients", "20"});
    CHECK(kv[1].second == "0.05");
    CHECK_THROWS_AS(parse("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse("=3\n"), ConfigError);
}

TEST_CASE("resolve_config reports unknown and missing keys by name") {
    try {
        resolve_config(parse("num_clients=10\nbogus=1\nalso_bogus=2\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find("also_bogus") != std::string::npos);
    }
    try {
        resolve_config(parse("num_clients=10\ncfraction=0.5\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("local_epoch") != std::string::npos);
        CHECK(msg.find("global_epoch") != std::string::npos);
        CHECK(msg.find("cfraction") == std::string::npos);
    }
    CHECK_THROWS_AS(resolve_config(parse("preset=Pr9\n")), ConfigError);
    CHECK_THROWS_AS(resolve_config(parse("preset=Pr1\nlr=fast\n")), ConfigError);
}

TEST_CASE("presets and overrides") {
    const auto cfg = resolve_config(parse("preset=Pr2\nlr=0.05\nnoise_psd_dbm_hz=-170\n"));
    CHECK(cfg.num_clients == 100);
    CHECK(cfg.local_epoch == 5);
    CHECK(cfg.lr == 0.05);
    CHECK(cfg.channel.noise_psd_dbm_hz == -170.0);
    for (const char* k : {"noise_psd_dbm_hz", "bandwidth_hz", "tx_power_w", "interference_low_w", "interference_high_w",
                          "distance_max_m", "payload_mb"})
        CHECK(std::find(known_keys().begin(), known_keys().end(), k) != known_keys().end());
}

TEST_CASE("manifest text resolves back to the same configuration") {
    const auto cfg = resolve_config(parse("preset=Pr3\nlr=0.0123456789012345\nshard_multipliers=1,2.5\nseed=9\n"));
    const std::string text = to_config_text(cfg);
    const auto again = resolve_config(parse(text));
    CHECK(to_config_text(again) == text);
    CHECK(again.lr == cfg.lr);
    CHECK(again.dataset.shard_multipliers == cfg.dataset.shard_multipliers);

    const auto custom = resolve_config(parse("num_clients=12\ncfraction=0.25\nlocal_epoch=1\nglobal_epoch=4\n"));
    CHECK(to_config_text(resolve_config(parse(to_config_text(custom)))) == to_config_text(custom));
}

TEST_CASE("output names") {
    const auto pure = resolve_config(parse("preset=Pr1\nstrategy=fedavg_baseline\nseed=3\n"));
    CHECK(config_stem(pure) == "Pr1");
    CHECK(run_label(pure) == "Pr1_fedavg_baseline_seed3");
    const auto tweaked = resolve_config(parse("preset=Pr1\nlr=0.02\n"));
    const auto stem = config_stem(tweaked);
    CHECK(stem.rfind("Pr1-", 0) == 0);
    CHECK(stem.size() == 12);
    CHECK(config_stem(resolve_config(parse("preset=Pr1\nlr=0.02\nseed=8\n"))) == stem);
    CHECK(config_stem(resolve_config(parse("preset=Pr1\nlr=0.03\n"))) != stem);
}

TEST_CASE("format_number") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(7.635e-3) == "0.007635");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(1e-9) == "1e-09");
    CHECK(format_number(0.1, 17) == "0.1");
}

TEST_CASE("metrics csv layout") {
    MetricsRecord a;
    a.round = 1;
    a.test_accuracy = 0.5;
    a.sum_tx_energy_j = 0.25;
    MetricsRecord b = a;
    b.round = 2;
    const Series s1{"cnc_optimized", {a, b}};
    const Series s2{"fedavg_baseline", {a, b}};
    std::ostringstream out;
    const std::vector<Series> both{s1, s2};
    write_metrics_csv(out, both);
    std::istringstream in(out.str());
    std::string header, row;
    std::getline(in, header);
    CHECK(header ==
          "schema_version,round,strategy,test_accuracy,sum_tx_energy_j,max_tx_delay_s,max_local_delay_s,"
          "delay_spread_s,round_wallclock_s,cum_sum_tx_energy_j,cum_max_tx_delay_s,cum_max_local_delay_s");
    std::getline(in, row);
    CHECK(row == "1,1,cnc_optimized,0.5,0.25,0,0,0,0,0,0,0");
    std::getline(in, row);
    CHECK(row.rfind("1,1,fedavg_baseline,", 0) == 0);
    std::getline(in, row);
    CHECK(row.rfind("1,2,cnc_optimized,", 0) == 0);

    std::istringstream back(out.str());
    const auto table = read_csv(back);
    CHECK(table.rows.size() == 4);
    CHECK(table.column("strategy") == std::optional<std::size_t>(2));
    CHECK_FALSE(table.column("missing").has_value());
}

TEST_CASE("svg rendering") {
    const std::vector<PlotSeries> series{{"a<b", {{0, 0}, {1, 1}, {2, 4}}}, {"c", {{0, 1}, {2, 2}}}};
    const auto svg = render_svg(series, "round", "test_accuracy");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("a&lt;b") != std::string::npos);
    CHECK(svg.find("test_accuracy") != std::string::npos);
    std::size_t lines = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
    CHECK(lines == 2);
    const auto empty = render_svg({}, "x", "y");
    CHECK(empty.find("<polyline") == std::string::npos);
    CHECK(empty.find("</svg>") != std::string::npos);
}

TEST_CASE("cmd_run writes deterministic artifacts") {
    TempDir dir("cncfl_cli_run");
    std::ostringstream out, err;
    auto req = quick_request(dir.path / "a");
    REQUIRE(cmd_run(req, out, err) == 0);
    req.out_dir = dir.path / "b";
    REQUIRE(cmd_run(req, out, err) == 0);
    const auto name = run_label(resolve_config(req.overrides));
    CHECK(name.rfind("Pr5-", 0) == 0);
    const auto csv_a = slurp(dir.path / "a" / (name + ".csv"));
    CHECK(csv_a == slurp(dir.path / "b" / (name + ".csv")));
    CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 4);
    CHECK(out.str().find("final_accuracy=") != std::string::npos);

    const auto manifest = slurp(dir.path / "a" / (name + ".manifest"));
    std::istringstream min(manifest);
    CHECK(to_config_text(resolve_config(parse_key_values(min))) == manifest);
}

TEST_CASE("cmd_run error paths") {
    TempDir dir("cncfl_cli_err");
    std::ostringstream out, err;
    RunRequest req;
    req.out_dir = dir.path;
    req.overrides = {{"preset", "Pr9"}};
    CHECK(cmd_run(req, out, err) == 2);
    CHECK(err.str().find("unknown preset") != std::string::npos);

    req.overrides = {{"preset", "Pr5"}, {"colour", "blue"}};
    CHECK(cmd_run(req, out, err) == 2);
    CHECK(err.str().find("colour") != std::string::npos);

    req.overrides = {{"preset", "Pr5"}, {"global_epoch", "1"}, {"architecture", "p2p"}, {"strategy", "p2p_full_chain"},
                     {"num_clients", "8"}, {"p2p_unreachable_prob", "0.97"}, {"metrics_only", "true"}};
    CHECK(cmd_run(req, out, err) == 1);

    req.config = dir.path / "nope.cfg";
    req.overrides.clear();
    CHECK(cmd_run(req, out, err) == 2);
}

TEST_CASE("cmd_compare") {
    TempDir dir("cncfl_cli_cmp");
    std::ostringstream out, err;
    auto req = quick_request(dir.path);
    CHECK(cmd_compare(req, {"cnc_optimized"}, out, err) == 2);
    REQUIRE(cmd_compare(req, {"cnc_optimized", "fedavg_baseline"}, out, err) == 0);
    const auto stem = config_stem(resolve_config(req.overrides));
    const auto csv = slurp(dir.path / (stem + "_compare_seed1.csv"));
    std::istringstream in(csv);
    const auto table = read_csv(in);
    REQUIRE(table.rows.size() == 6);
    CHECK(table.rows[0][2] == "cnc_optimized");
    CHECK(table.rows[1][2] == "fedavg_baseline");
    CHECK(cmd_compare(req, {"cnc_optimized", "fedavg_baseline:bad"}, out, err) == 2);
}

TEST_CASE("cmd_compare with p2p variants") {
    TempDir dir("cncfl_cli_p2p");
    std::ostringstream out, err;
    RunRequest req;
    req.out_dir = dir.path;
    req.overrides = {{"architecture", "p2p"}, {"num_clients", "20"}, {"cfraction", "1"}, {"local_epoch", "1"},
                     {"global_epoch", "2"}, {"samples", "1000"}, {"chain_k", "15"}};
    const std::vector<std::string> variants{"cnc_optimized:subsets=4", "cnc_optimized:subsets=2", "p2p_random_k",
                                            "p2p_full_chain"};
    REQUIRE(cmd_compare(req, variants, out, err) == 0);
    const auto csv = slurp(dir.path / (config_stem(resolve_config(req.overrides)) + "_compare_seed1.csv"));
    std::istringstream in(csv);
    const auto table = read_csv(in);
    CHECK(table.rows.size() == 8);
    CHECK(table.rows[1][2] == "cnc_optimized:subsets=2");
}

TEST_CASE("cmd_oracle_check") {
    std::ostringstream out, err;
    OracleRequest req;
    req.trials = 50;
    CHECK(cmd_oracle_check(req, out, err) == 0);
    CHECK(out.str().find("hungarian: 50/50 exact (n=6)") != std::string::npos);

    std::ostringstream out0, err0;
    req.trials = 0;
    CHECK(cmd_oracle_check(req, out0, err0) == 0);
    CHECK(err0.str().find("warning") != std::string::npos);

    std::ostringstream out1, err1;
    req.trials = 5;
    req.corrupt = 1e-3;
    CHECK(cmd_oracle_check(req, out1, err1) == 1);
    CHECK(out1.str().find("FAIL") != std::string::npos);

    std::ostringstream out2, err2;
    req.corrupt = 0.0;
    req.sizes = {16};
    CHECK(cmd_oracle_check(req, out2, err2) == 2);

    std::ostringstream out3, err3;
    req.sizes = {12};
    CHECK(cmd_oracle_check(req, out3, err3) == 0);
    CHECK(out3.str().find("skipped") != std::string::npos);
}

TEST_CASE("cmd_plot") {
    TempDir dir("cncfl_cli_plot");
    std::ostringstream out, err;
    auto req = quick_request(dir.path);
    REQUIRE(cmd_compare(req, {"cnc_optimized", "fedavg_baseline"}, out, err) == 0);
    const auto csv = dir.path / (config_stem(resolve_config(req.overrides)) + "_compare_seed1.csv");

    CHECK(cmd_plot(csv, "round", "test_accuracy", dir.path / "acc.svg", out, err) == 0);
    const auto svg = slurp(dir.path / "acc.svg");
    CHECK(svg.find("fedavg_baseline") != std::string::npos);
    CHECK(cmd_plot(csv, "cum_sum_tx_energy_j", "test_accuracy", dir.path / "energy.svg", out, err) == 0);

    std::ostringstream bad_err;
    CHECK(cmd_plot(csv, "round", "loss", dir.path / "x.svg", out, bad_err) == 2);
    CHECK(bad_err.str().find("available fields") != std::string::npos);
    CHECK(bad_err.str().find("test_accuracy") != std::string::npos);

    std::ofstream(dir.path / "empty.csv") << kCsvHeader << "\n";
    std::ostringstream empty_err;
    CHECK(cmd_plot(dir.path / "empty.csv", "round", "test_accuracy", dir.path / "empty.svg", out, empty_err) == 0);
    CHECK(empty_err.str().find("warning") != std::string::npos);
    CHECK(fs::exists(dir.path / "empty.svg"));
}

TEST_CASE("cmd_sweep") {
    TempDir dir("cncfl_cli_sweep");
    std::ostringstream out, err;
    RunRequest req;
    req.out_dir = dir.path;
    req.overrides = {{"cfraction", "1"}, {"local_epoch", "1"}, {"global_epoch", "2"}, {"metrics_only", "true"},
                     {"samples", "1000"}};
    REQUIRE(cmd_sweep(req, {4, 8}, {"cnc_optimized", "p2p_full_chain"}, out, err) == 0);
    CHECK(out.str().find("clients=8 strategy=p2p_full_chain") != std::string::npos);
}
