#pragma once

#include <cstdint>
#include <ctime>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mflab/config.hpp"
#include "mflab/errors.hpp"
#include "mflab/rng.hpp"
#include "mflab/version.hpp"

namespace mflab {

using ordered_json = nlohmann::ordered_json;

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return "fnv1a64:" + s;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Hash over the canonical dump with the volatile fields removed, so a rerun
// from the manifest can prove it is reproducing the same experiment.
inline std::string manifest_hash(const ordered_json& manifest) {
    ordered_json j = manifest;
    j.erase("created");
    j.erase("hash");
    return hash_hex(fnv1a64(j.dump()));
}

inline ordered_json make_manifest(const Config& config, const std::string& kind,
                                  const std::string& output_dir) {
    ordered_json j;
    j["version"] = kVersion;
    j["rng"] = kRngId;
    j["kind"] = kind;
    j["output_dir"] = output_dir;
    j["n_grid"] = config.sweep.n_grid;
    j["replicas"] = config.sweep.replicas;
    j["base_seed"] = config.sweep.base_seed;
    j["config"] = config_to_toml(config);
    j["created"] = utc_timestamp();
    j["hash"] = "";
    j["hash"] = manifest_hash(j);
    return j;
}

struct ManifestInfo {
    Config config;
    std::string kind;
    std::string output_dir;
    std::string hash;
};

inline ManifestInfo parse_manifest(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest: cannot parse JSON: ") + e.what());
    }
    for (const char* key : {"version", "rng", "kind", "output_dir", "config", "hash"})
        if (!j.contains(key))
            throw ConfigError(std::string("manifest: missing field '") + key + "'");
    if (j["rng"].get<std::string>() != std::string(kRngId))
        throw ConfigError("manifest: generator '" + j["rng"].get<std::string>() +
                          "' does not match this build (" + std::string(kRngId) + ")");
    if (manifest_hash(j) != j["hash"].get<std::string>())
        throw ConfigError("manifest: hash mismatch; file was edited or truncated");
    ManifestInfo info;
    info.config = load_config(j["config"].get<std::string>());
    info.kind = j["kind"].get<std::string>();
    info.output_dir = j["output_dir"].get<std::string>();
    info.hash = j["hash"].get<std::string>();
    return info;
}

}  // namespace mflab
