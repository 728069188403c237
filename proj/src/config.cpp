#include "domino/config.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace domino {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

void require_keys(const json& obj, std::initializer_list<const char*> keys,
                  const std::string& where) {
    for (const char* k : keys)
        if (!obj.contains(k)) throw ConfigError("config: missing key '" + std::string(k) +
                                                "' in " + where);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError("config: expected number for " + where);
    return v.get<double>();
}

} // namespace

Portfolio parse_portfolio_json(const std::string& text) {
    const json root = parse_json(text);
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    require_keys(root, {"kind", "firms", "contagion"}, "top level");

    Portfolio p;
    const json& kind = root["kind"];
    if (!kind.is_string()) throw ConfigError("config: 'kind' must be a string");
    const std::string ks = kind.get<std::string>();
    if (ks == "abm")
        p.kind = ModelKind::Abm;
    else if (ks == "gbm")
        p.kind = ModelKind::Gbm;
    else
        throw ConfigError("config: 'kind' must be \"abm\" or \"gbm\"");

    const json& firms = root["firms"];
    if (!firms.is_array()) throw ConfigError("config: 'firms' must be an array");
    for (std::size_t i = 0; i < firms.size(); ++i) {
        const json& f = firms[i];
        const std::string where = "firms[" + std::to_string(i) + "]";
        if (!f.is_object()) throw ConfigError("config: " + where + " must be an object");
        require_keys(f, {"id", "x0", "barrier", "mu", "sigma"}, where);
        if (!f["id"].is_number_integer())
            throw ConfigError("config: " + where + ".id must be an integer");
        FirmParams firm;
        firm.id = f["id"].get<int>();
        firm.x0 = as_number(f["x0"], where + ".x0");
        firm.barrier = as_number(f["barrier"], where + ".barrier");
        firm.mu = as_number(f["mu"], where + ".mu");
        firm.sigma = as_number(f["sigma"], where + ".sigma");
        p.firms.push_back(firm);
    }

    const json& cont = root["contagion"];
    if (!cont.is_array()) throw ConfigError("config: 'contagion' must be an array of arrays");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < cont.size(); ++i) {
        const json& row = cont[i];
        if (!row.is_array())
            throw ConfigError("config: contagion[" + std::to_string(i) + "] must be an array");
        std::vector<double> r;
        for (std::size_t j = 0; j < row.size(); ++j)
            r.push_back(as_number(row[j], "contagion[" + std::to_string(i) + "][" +
                                              std::to_string(j) + "]"));
        rows.push_back(std::move(r));
    }
    p.contagion = ContagionMatrix(std::move(rows));
    return p;
}

Portfolio load_portfolio_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_portfolio_json(buf.str());
}

std::string canonical_config(const std::string& text) {
    return parse_json(text).dump(); // nlohmann objects are key-sorted
}

std::string kind_to_string(ModelKind kind) { return kind == ModelKind::Abm ? "abm" : "gbm"; }

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), enough for stable config digests.

namespace {

constexpr std::array<std::uint32_t, 64> kSha256K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

} // namespace

std::string sha256_hex(const std::string& bytes) {
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::string msg = bytes;
    const std::uint64_t bitlen = static_cast<std::uint64_t>(bytes.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bitlen >> (8 * i)) & 0xff));

    std::uint32_t w[64];
    for (std::size_t off = 0; off < msg.size(); off += 64) {
        for (int t = 0; t < 16; ++t) {
            w[t] = (static_cast<std::uint8_t>(msg[off + 4 * t]) << 24) |
                   (static_cast<std::uint8_t>(msg[off + 4 * t + 1]) << 16) |
                   (static_cast<std::uint8_t>(msg[off + 4 * t + 2]) << 8) |
                   static_cast<std::uint8_t>(msg[off + 4 * t + 3]);
        }
        for (int t = 16; t < 64; ++t) {
            const std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            const std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (int t = 0; t < 64; ++t) {
            const std::uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + S1 + ch + kSha256K[t] + w[t];
            const std::uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = S0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t v : h)
        for (int i = 7; i >= 0; --i) out.push_back(hexd[(v >> (4 * i)) & 0xf]);
    return out;
}

std::string config_hash(const std::string& text) {
    return "sha256:" + sha256_hex(canonical_config(text));
}

} // namespace domino
