#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mflab/errors.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

struct ParticleEnsemble {
    std::vector<Vec3> q;
    std::vector<Vec3> p;
    std::uint64_t seed = 0;
    double time = 0.0;

    std::size_t size() const { return q.size(); }

    void validate() const {
        if (q.empty() || q.size() != p.size())
            throw SizeMismatch("ensemble: positions/momenta size mismatch or empty");
        for (std::size_t i = 0; i < q.size(); ++i)
            if (!finite(q[i]) || !finite(p[i]))
                throw NonFiniteState("ensemble: non-finite entry at index " + std::to_string(i));
    }
};

// CSV dump with a one-line header carrying {format version, n, seed, time}.
// Values use %.17g so a load reproduces the ensemble bit for bit.
inline void save_ensemble_csv(const ParticleEnsemble& e, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    std::fprintf(f, "# mflab-ensemble v1 n=%zu seed=%" PRIu64 " time=%.17g\n", e.size(), e.seed,
                 e.time);
    std::fprintf(f, "qx,qy,qz,px,py,pz\n");
    for (std::size_t i = 0; i < e.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.q[i].x, e.q[i].y, e.q[i].z,
                     e.p[i].x, e.p[i].y, e.p[i].z);
    std::fclose(f);
}

inline ParticleEnsemble load_ensemble_csv(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "r");
    if (!f) throw ConfigError("cannot open ensemble file: " + path.string());
    ParticleEnsemble e;
    std::size_t n = 0;
    char line[512];
    if (!std::fgets(line, sizeof line, f) ||
        std::sscanf(line, "# mflab-ensemble v1 n=%zu seed=%" SCNu64 " time=%lg", &n, &e.seed,
                    &e.time) != 3) {
        std::fclose(f);
        throw ConfigError("not an mflab ensemble file: " + path.string());
    }
    if (!std::fgets(line, sizeof line, f)) {  // column header
        std::fclose(f);
        throw ConfigError("truncated ensemble file: " + path.string());
    }
    e.q.reserve(n);
    e.p.reserve(n);
    while (std::fgets(line, sizeof line, f)) {
        Vec3 q, p;
        if (std::sscanf(line, "%lg,%lg,%lg,%lg,%lg,%lg", &q.x, &q.y, &q.z, &p.x, &p.y, &p.z) != 6)
            break;
        e.q.push_back(q);
        e.p.push_back(p);
    }
    std::fclose(f);
    if (e.size() != n)
        throw SizeMismatch("ensemble file row count does not match header n");
    e.validate();
    return e;
}

}  // namespace mflab
