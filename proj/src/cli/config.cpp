#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <set>
#include <sstream>

#include "cncfl/cli.hpp"
#include "cncfl/error.hpp"

namespace cncfl::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("key '" + key + "': not a number: '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': not a non-negative integer: '" + v + "'");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    return out;
}

std::string exact(double v) { return format_number(v, 17); }

std::string list_text(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + exact(v[i]);
    return out;
}

struct KeySpec {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define CNCFL_SIZE_KEY(NAME, FIELD)                                                                   \
    KeySpec{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_size(NAME, v); },      \
            [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }}
#define CNCFL_REAL_KEY(NAME, FIELD)                                                                   \
    KeySpec{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_double(NAME, v); },    \
            [](const ExperimentConfig& c) { return exact(c.FIELD); }}
#define CNCFL_TEXT_KEY(NAME, FIELD)                                                                   \
    KeySpec{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = v; },                     \
            [](const ExperimentConfig& c) { return c.FIELD; }}
#define CNCFL_ENUM_KEY(NAME, FIELD, PARSE)                                                            \
    KeySpec{NAME, [](ExperimentConfig& c, const std::string& v) { c.FIELD = PARSE(v); },               \
            [](const ExperimentConfig& c) { return std::string(to_string(c.FIELD)); }}

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = {
        // preset is handled before the others; listed for the manifest
        KeySpec{"preset", [](ExperimentConfig& c, const std::string& v) { c.preset = v; },
                [](const ExperimentConfig& c) { return c.preset; }},
        CNCFL_ENUM_KEY("architecture", architecture, parse_architecture),
        CNCFL_ENUM_KEY("strategy", strategy, parse_strategy),
        CNCFL_SIZE_KEY("num_clients", num_clients),
        CNCFL_REAL_KEY("cfraction", cfraction),
        CNCFL_SIZE_KEY("local_epoch", local_epoch),
        CNCFL_SIZE_KEY("global_epoch", global_epoch),
        CNCFL_SIZE_KEY("batch_size", batch_size),
        CNCFL_REAL_KEY("lr", lr),
        CNCFL_SIZE_KEY("m", m),
        CNCFL_ENUM_KEY("rb_objective", objective, parse_rb_objective),
        KeySpec{"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        KeySpec{"metrics_only", [](ExperimentConfig& c, const std::string& v) { c.metrics_only = to_bool("metrics_only", v); },
                [](const ExperimentConfig& c) { return std::string(c.metrics_only ? "true" : "false"); }},
        CNCFL_SIZE_KEY("threads", threads),

        CNCFL_REAL_KEY("noise_psd_dbm_hz", channel.noise_psd_dbm_hz),
        CNCFL_REAL_KEY("bandwidth_hz", channel.bandwidth_hz),
        CNCFL_REAL_KEY("tx_power_w", channel.tx_power_w),
        CNCFL_REAL_KEY("interference_low_w", channel.interference_low_w),
        CNCFL_REAL_KEY("interference_high_w", channel.interference_high_w),
        CNCFL_REAL_KEY("distance_max_m", channel.distance_max_m),
        CNCFL_REAL_KEY("rayleigh_param", channel.rayleigh_param),
        CNCFL_REAL_KEY("payload_mb", channel.payload_mb),
        CNCFL_ENUM_KEY("fading", channel.fading, parse_fading),
        KeySpec{"mc_samples", [](ExperimentConfig& c, const std::string& v) { c.channel.mc_samples = static_cast<int>(to_u64("mc_samples", v)); },
                [](const ExperimentConfig& c) { return std::to_string(c.channel.mc_samples); }},
        CNCFL_SIZE_KEY("num_rbs", channel.num_rbs),

        CNCFL_ENUM_KEY("dataset", dataset.kind, parse_dataset_kind),
        CNCFL_SIZE_KEY("samples", dataset.samples),
        CNCFL_SIZE_KEY("dim", dataset.dim),
        CNCFL_SIZE_KEY("classes", dataset.classes),
        CNCFL_REAL_KEY("separation", dataset.separation),
        CNCFL_REAL_KEY("test_fraction", dataset.test_fraction),
        CNCFL_ENUM_KEY("partition", dataset.partition, parse_partition),
        CNCFL_SIZE_KEY("labels_per_client", dataset.labels_per_client),
        KeySpec{"shard_multipliers",
                [](ExperimentConfig& c, const std::string& v) { c.dataset.shard_multipliers = to_list("shard_multipliers", v); },
                [](const ExperimentConfig& c) { return list_text(c.dataset.shard_multipliers); }},
        CNCFL_SIZE_KEY("hidden", dataset.hidden),
        CNCFL_TEXT_KEY("idx_images", dataset.idx_images),
        CNCFL_TEXT_KEY("idx_labels", dataset.idx_labels),
        CNCFL_TEXT_KEY("idx_test_images", dataset.idx_test_images),
        CNCFL_TEXT_KEY("idx_test_labels", dataset.idx_test_labels),

        KeySpec{"capacity_levels",
                [](ExperimentConfig& c, const std::string& v) { c.compute.capacity_levels = to_list("capacity_levels", v); },
                [](const ExperimentConfig& c) { return list_text(c.compute.capacity_levels); }},
        CNCFL_REAL_KEY("alpha", compute.alpha),
        CNCFL_REAL_KEY("reference_local_delay_s", compute.reference_local_delay_s),

        CNCFL_SIZE_KEY("subsets", p2p.subsets),
        CNCFL_SIZE_KEY("chain_k", p2p.chain_k),
        CNCFL_SIZE_KEY("subset_divisor", p2p.subset_divisor),
        CNCFL_REAL_KEY("p2p_cost_low", p2p.cost_low),
        CNCFL_REAL_KEY("p2p_cost_high", p2p.cost_high),
        CNCFL_REAL_KEY("p2p_unreachable_prob", p2p.unreachable_prob),
        CNCFL_ENUM_KEY("p2p_cost_unit", p2p.unit, parse_cost_unit),
        CNCFL_TEXT_KEY("p2p_matrix_file", p2p.matrix_file),
    };
    return specs;
}

#undef CNCFL_SIZE_KEY
#undef CNCFL_REAL_KEY
#undef CNCFL_TEXT_KEY
#undef CNCFL_ENUM_KEY

const std::vector<std::string> kRequiredWithoutPreset = {"num_clients", "cfraction", "local_epoch", "global_epoch"};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out;
}

std::string hash8(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    return buf;
}

// Canonical text without the keys that already appear in the file name.
std::string identity_text(ExperimentConfig cfg) {
    cfg.strategy = Strategy::CncOptimized;
    cfg.seed = 0;
    return to_config_text(cfg);
}

} // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
    KeyValues kv;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value, got '" + body + "'");
        std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        kv.emplace_back(std::move(key), trim(std::string_view(body).substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_key_values(in, path.string());
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& k : key_specs()) out.push_back(k.name);
        return out;
    }();
    return names;
}

ExperimentConfig resolve_config(const KeyValues& kv) {
    const auto& specs = key_specs();
    std::vector<std::string> unknown;
    std::optional<std::string> preset;
    std::set<std::string> seen;
    for (const auto& [k, v] : kv) {
        if (std::none_of(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.name == k; })) unknown.push_back(k);
        if (k == "preset") preset = v;
        seen.insert(k);
    }
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + join(unknown));

    ExperimentConfig cfg;
    if (preset && !preset->empty()) {
        cfg = make_preset(*preset);
    } else {
        std::vector<std::string> missing;
        for (const auto& r : kRequiredWithoutPreset)
            if (!seen.count(r)) missing.push_back(r);
        if (!missing.empty()) throw ConfigError("missing required config keys: " + join(missing));
    }
    for (const auto& [k, v] : kv) {
        if (k == "preset") continue;
        const auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.name == k; });
        it->set(cfg, v);
    }
    cfg.validate();
    return cfg;
}

std::string to_config_text(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& s : key_specs()) {
        const std::string v = s.get(cfg);
        if (s.name == "preset" && v.empty()) continue;
        out += s.name + "=" + v + "\n";
    }
    return out;
}

std::string config_stem(const ExperimentConfig& cfg) {
    bool pure_preset = false;
    if (!cfg.preset.empty()) {
        try {
            pure_preset = identity_text(make_preset(cfg.preset)) == identity_text(cfg);
        } catch (const ConfigError&) {
            pure_preset = false;
        }
    }
    if (pure_preset) return cfg.preset;
    return (cfg.preset.empty() ? std::string("cfg") : cfg.preset) + "-" + hash8(identity_text(cfg));
}

std::string run_label(const ExperimentConfig& cfg) {
    return config_stem(cfg) + "_" + std::string(to_string(cfg.strategy)) + "_seed" + std::to_string(cfg.seed);
}

} // namespace cncfl::cli
