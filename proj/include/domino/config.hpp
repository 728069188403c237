#ifndef DOMINO_CONFIG_HPP
#define DOMINO_CONFIG_HPP

#include <stdexcept>
#include <string>

#include "domino/core_model.hpp"

namespace domino {

// Malformed bytes, schema violations, unknown keys. Distinct from portfolio
// invariant violations, which parse fine and are reported by
// validate_portfolio.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Schema (strict, unknown keys rejected):
// {"kind":"abm"|"gbm",
//  "firms":[{"id":int,"x0":num,"barrier":num,"mu":num,"sigma":num}],
//  "contagion":[[num]]}   // row = defaulter, column = victim
Portfolio parse_portfolio_json(const std::string& text);
Portfolio load_portfolio_file(const std::string& path);

// Canonical bytes of a config (sorted keys, no whitespace) and its digest.
std::string canonical_config(const std::string& text);
std::string sha256_hex(const std::string& bytes);
std::string config_hash(const std::string& text); // "sha256:<hex of canonical bytes>"

std::string kind_to_string(ModelKind kind);

} // namespace domino

#endif
