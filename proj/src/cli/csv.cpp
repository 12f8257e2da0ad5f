#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "cncfl/cli.hpp"
#include "cncfl/error.hpp"

namespace cncfl::cli {

const char* const kCsvHeader =
    "schema_version,round,strategy,test_accuracy,sum_tx_energy_j,max_tx_delay_s,max_local_delay_s,"
    "delay_spread_s,round_wallclock_s,cum_sum_tx_energy_j,cum_max_tx_delay_s,cum_max_local_delay_s";

std::string format_number(double v, int significant) {
    char buf[64];
    const auto r = significant >= 17 ? std::to_chars(buf, buf + sizeof buf, v)
                                     : std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, significant);
    return std::string(buf, r.ptr);
}

void write_metrics_csv(std::ostream& out, std::span<const Series> series) {
    out << kCsvHeader << '\n';
    std::size_t rounds = 0;
    for (const auto& s : series) rounds = std::max(rounds, s.records.size());
    for (std::size_t r = 0; r < rounds; ++r) {
        for (const auto& s : series) {
            if (r >= s.records.size()) continue;
            const auto& m = s.records[r];
            out << kCsvSchemaVersion << ',' << m.round << ',' << s.label;
            for (double v : {m.test_accuracy, m.sum_tx_energy_j, m.max_tx_delay_s, m.max_local_delay_s, m.delay_spread_s,
                             m.round_wallclock_s, m.cum_sum_tx_energy_j, m.cum_max_tx_delay_s, m.cum_max_local_delay_s})
                out << ',' << format_number(v);
            out << '\n';
        }
    }
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("CSV is empty: no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split(line);
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ParseError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                             " fields, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

} // namespace cncfl::cli
