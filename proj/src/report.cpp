#include "domino/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace domino {

const char* kToolVersion = "0.1.0";

std::string label_nt(int k) { return "N=" + std::to_string(k); }

std::string label_tau_tail(int m) { return "tau(" + std::to_string(m) + ")>t"; }

std::string label_survive(const IndexSet& s) { return "survive" + s.to_string(); }

std::string format_sig12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string write_csv(const CsvTable& table) {
    std::ostringstream os;
    auto emit_row = [&os](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    };
    emit_row(table.header);
    for (const auto& row : table.rows) emit_row(row);
    return os.str();
}

CsvTable read_csv(const std::string& text) {
    CsvTable out;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (first) {
            out.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != out.header.size())
                throw std::runtime_error("read_csv: ragged row");
            out.rows.push_back(std::move(cells));
        }
    }
    if (first) throw std::runtime_error("read_csv: empty input");
    return out;
}

std::string manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool_version"] = m.tool_version;
    j["config_hash"] = m.config_hash;
    if (m.has_seed) j["seed"] = m.seed;
    j["subcommand"] = m.subcommand;
    j["timestamp_utc"] = m.timestamp_utc;
    nlohmann::json settings = nlohmann::json::object();
    for (const auto& [k, v] : m.settings) settings[k] = v;
    j["settings"] = settings;
    return j.dump(2) + "\n";
}

void write_manifest_file(const RunManifest& m, const std::string& path) {
    RunManifest filled = m;
    if (filled.timestamp_utc.empty()) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&tt, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        filled.timestamp_utc = buf;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << manifest_json(filled);
}

} // namespace domino
