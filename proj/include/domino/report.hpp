#ifndef DOMINO_REPORT_HPP
#define DOMINO_REPORT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "domino/domain.hpp"

namespace domino {

// Shared row labels so analytic tables and simulator estimates line up.
std::string label_nt(int k);                 // "N=2"
std::string label_tau_tail(int m);           // "tau(2)>t"
std::string label_survive(const IndexSet&);  // "survive{0,2}"

std::string format_sig12(double v); // 12 significant digits

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string write_csv(const CsvTable& table);
// Strict reader for this tool's own outputs: fixed column count, no quoting.
CsvTable read_csv(const std::string& text);

// Run manifest, written as a separate JSON file next to the primary output;
// it is the only artifact that carries a timestamp.
struct RunManifest {
    std::string tool_version;
    std::string config_hash;
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::string subcommand;
    std::string timestamp_utc;
    std::vector<std::pair<std::string, std::string>> settings;
};

std::string manifest_json(const RunManifest& m);
void write_manifest_file(const RunManifest& m, const std::string& path);

extern const char* kToolVersion;

} // namespace domino

#endif
