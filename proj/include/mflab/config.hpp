#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mflab/coupling.hpp"
#include "mflab/density.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/meanfield.hpp"
#include "mflab/nbody.hpp"
#include "mflab/stats.hpp"

namespace mflab {

// One flat value type per experiment knob; defaults here are the shipped
// defaults everywhere (print-defaults serializes exactly this struct).
struct Config {
    struct Kernel {
        ProfileShape shape = ProfileShape::poly_bump;
        double radius = 1.0;
        double amplitude = 1.0;
        double beta = 0.1;
    } kernel;

    struct Initial {
        SpatialProfile spatial = SpatialProfile::poly_bump_space;
        double r_q = 2.0;
        MomentumProfile momentum = MomentumProfile::gaussian;
        double sigma_p = 0.5;
        double r_p_factor = 6.0;
    } initial;

    struct Flow {
        double dt = 0.0;  // 0 = stability-based default
        double t_final = 0.5;
        bool use_cell_list = true;
        bool deterministic = true;
        int workers = 1;  // 0 = all cores (or MFLAB_WORKERS)
        int snapshot_stride = 1;
    } flow;

    struct MeanField {
        MeanFieldConfig::Mode mode = MeanFieldConfig::Mode::reference_ensemble;
        std::size_t ref_multiplier = 16;
        double grid_spacing = 0.0;  // 0 = quarter of the scaled force support
        double grid_padding = 0.0;
    } meanfield;

    struct Coupling {
        double alpha = 0.05;
        double gamma = 1.0;
        double lambda = 1.0;
        double c_gamma = 1.0;
    } coupling;

    struct Stats {
        std::size_t replicas = 50;
        std::vector<std::size_t> n_grid = {256, 1024, 4096};
        std::vector<double> times = {0.0};
        double c_gamma = 1.0;
        std::uint64_t base_seed = 20260814ull;
        std::size_t table_points = 2049;
    } stats;

    struct Sweep {
        std::vector<std::size_t> n_grid = {128, 512, 2048};
        std::size_t replicas = 20;
        std::uint64_t base_seed = 20260814ull;
        int workers = 1;
    } sweep;

    struct Transport {
        std::size_t subsample = 512;
        std::size_t exact_cap = 1024;
    } transport;

    struct Output {
        std::string directory = "out";
        bool write_series = true;
    } output;

    struct Run {
        std::size_t n = 512;
        std::uint64_t seed = 1;
    } run;
};

inline Config default_config() { return {}; }

namespace detail {

struct TomlValue {
    enum class Kind { string, boolean, integer, floating, array };
    Kind kind = Kind::string;
    std::string str;
    bool b = false;
    bool negative = false;
    std::uint64_t u = 0;
    std::int64_t i = 0;
    double d = 0.0;
    std::vector<TomlValue> items;
    int line = 0;
};

inline std::string toml_pos(int line) { return "config line " + std::to_string(line) + ": "; }

inline std::string_view toml_trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline TomlValue parse_toml_value(std::string_view v, int line);

inline TomlValue parse_toml_scalar(std::string_view v, int line) {
    TomlValue out;
    out.line = line;
    if (v == "true" || v == "false") {
        out.kind = TomlValue::Kind::boolean;
        out.b = (v == "true");
        return out;
    }
    const bool is_float = v.find_first_of(".eE") != std::string_view::npos;
    const char* b = v.data();
    const char* e = v.data() + v.size();
    if (!is_float) {
        if (!v.empty() && v.front() == '-') {
            out.kind = TomlValue::Kind::integer;
            out.negative = true;
            auto [p, ec] = std::from_chars(b, e, out.i);
            if (ec != std::errc() || p != e)
                throw ConfigError(toml_pos(line) + "cannot parse integer '" + std::string(v) +
                                  "'");
            out.d = static_cast<double>(out.i);
            return out;
        }
        out.kind = TomlValue::Kind::integer;
        auto [p, ec] = std::from_chars(b, e, out.u);
        if (ec != std::errc() || p != e)
            throw ConfigError(toml_pos(line) + "cannot parse integer '" + std::string(v) + "'");
        out.i = out.u <= static_cast<std::uint64_t>(INT64_MAX)
                    ? static_cast<std::int64_t>(out.u)
                    : INT64_MAX;
        out.d = static_cast<double>(out.u);
        return out;
    }
    out.kind = TomlValue::Kind::floating;
    auto [p, ec] = std::from_chars(b, e, out.d);
    if (ec != std::errc() || p != e)
        throw ConfigError(toml_pos(line) + "cannot parse number '" + std::string(v) + "'");
    return out;
}

inline TomlValue parse_toml_value(std::string_view v, int line) {
    v = toml_trim(v);
    if (v.empty()) throw ConfigError(toml_pos(line) + "missing value");
    TomlValue out;
    out.line = line;
    if (v.front() == '"') {
        const auto close = v.find('"', 1);
        if (close == std::string_view::npos)
            throw ConfigError(toml_pos(line) + "unterminated string");
        if (!toml_trim(v.substr(close + 1)).empty())
            throw ConfigError(toml_pos(line) + "trailing characters after string");
        out.kind = TomlValue::Kind::string;
        out.str = std::string(v.substr(1, close - 1));
        return out;
    }
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError(toml_pos(line) + "unterminated array");
        out.kind = TomlValue::Kind::array;
        std::string_view body = v.substr(1, v.size() - 2);
        while (true) {
            body = toml_trim(body);
            if (body.empty()) break;
            const auto comma = body.find(',');
            const std::string_view elem =
                comma == std::string_view::npos ? body : body.substr(0, comma);
            if (toml_trim(elem).empty())
                throw ConfigError(toml_pos(line) + "empty array element");
            out.items.push_back(parse_toml_scalar(toml_trim(elem), line));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        return out;
    }
    return parse_toml_scalar(v, line);
}

// Cut an end-of-line comment, respecting string quotes.
inline std::string_view strip_toml_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

inline TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view s = toml_trim(strip_toml_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(toml_pos(line) + "malformed section header");
            section = std::string(toml_trim(s.substr(1, s.size() - 2)));
            if (section.empty()) throw ConfigError(toml_pos(line) + "empty section name");
            table.try_emplace(section);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(toml_pos(line) + "expected 'key = value'");
        const std::string key = std::string(toml_trim(s.substr(0, eq)));
        if (key.empty()) throw ConfigError(toml_pos(line) + "empty key");
        if (section.empty())
            throw ConfigError(toml_pos(line) + "key '" + key + "' outside any section");
        auto [it, inserted] =
            table[section].try_emplace(key, parse_toml_value(s.substr(eq + 1), line));
        if (!inserted)
            throw ConfigError(toml_pos(line) + "duplicate key '" + section + "." + key + "'");
    }
    return table;
}

inline double toml_double(const TomlValue& v, const std::string& key) {
    if (v.kind == TomlValue::Kind::floating || v.kind == TomlValue::Kind::integer) return v.d;
    throw ConfigError(toml_pos(v.line) + "'" + key + "' must be a number");
}

inline std::uint64_t toml_u64(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::integer || v.negative)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be a nonnegative integer");
    return v.u;
}

inline std::size_t toml_size(const TomlValue& v, const std::string& key) {
    return static_cast<std::size_t>(toml_u64(v, key));
}

inline int toml_int(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::integer)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be an integer");
    if (v.i > INT32_MAX || v.i < INT32_MIN)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' is out of range");
    return static_cast<int>(v.i);
}

inline bool toml_bool(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::boolean)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be true or false");
    return v.b;
}

inline std::string toml_string(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::string)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be a quoted string");
    return v.str;
}

inline std::vector<std::size_t> toml_size_array(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::array)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be an array");
    std::vector<std::size_t> out;
    out.reserve(v.items.size());
    for (const auto& e : v.items) out.push_back(toml_size(e, key));
    return out;
}

inline std::vector<double> toml_double_array(const TomlValue& v, const std::string& key) {
    if (v.kind != TomlValue::Kind::array)
        throw ConfigError(toml_pos(v.line) + "'" + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.items.size());
    for (const auto& e : v.items) out.push_back(toml_double(e, key));
    return out;
}

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double x) {
    for (int prec = 1; prec <= 17; ++prec) {
        std::ostringstream os;
        os.precision(prec);
        os << x;
        double back = 0.0;
        const std::string s = os.str();
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), back);
        if (ec == std::errc() && p == s.data() + s.size() && back == x) {
            // Keep a float-typed token so the value re-parses as floating.
            if (s.find_first_of(".eEn") == std::string::npos) return s + ".0";
            return s;
        }
    }
    return std::to_string(x);
}

}  // namespace detail

inline Config load_config(const std::string& text) {
    Config c;
    const auto table = detail::parse_toml(text);
    using detail::toml_bool;
    using detail::toml_double;
    using detail::toml_double_array;
    using detail::toml_int;
    using detail::toml_size;
    using detail::toml_size_array;
    using detail::toml_string;
    using detail::toml_u64;
    for (const auto& [section, keys] : table) {
        for (const auto& [key, v] : keys) {
            const std::string full = section + "." + key;
            if (section == "kernel") {
                if (key == "shape")
                    c.kernel.shape = profile_shape_from_string(toml_string(v, full));
                else if (key == "radius")
                    c.kernel.radius = toml_double(v, full);
                else if (key == "amplitude")
                    c.kernel.amplitude = toml_double(v, full);
                else if (key == "beta")
                    c.kernel.beta = toml_double(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "initial") {
                if (key == "spatial")
                    c.initial.spatial = spatial_profile_from_string(toml_string(v, full));
                else if (key == "r_q")
                    c.initial.r_q = toml_double(v, full);
                else if (key == "momentum") {
                    if (toml_string(v, full) != "gaussian")
                        throw ConfigError("initial.momentum: unknown profile");
                } else if (key == "sigma_p")
                    c.initial.sigma_p = toml_double(v, full);
                else if (key == "r_p_factor")
                    c.initial.r_p_factor = toml_double(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "flow") {
                if (key == "dt")
                    c.flow.dt = toml_double(v, full);
                else if (key == "t_final")
                    c.flow.t_final = toml_double(v, full);
                else if (key == "use_cell_list")
                    c.flow.use_cell_list = toml_bool(v, full);
                else if (key == "deterministic")
                    c.flow.deterministic = toml_bool(v, full);
                else if (key == "workers")
                    c.flow.workers = toml_int(v, full);
                else if (key == "snapshot_stride")
                    c.flow.snapshot_stride = toml_int(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "meanfield") {
                if (key == "mode")
                    c.meanfield.mode = mean_field_mode_from_string(toml_string(v, full));
                else if (key == "ref_multiplier")
                    c.meanfield.ref_multiplier = toml_size(v, full);
                else if (key == "grid_spacing")
                    c.meanfield.grid_spacing = toml_double(v, full);
                else if (key == "grid_padding")
                    c.meanfield.grid_padding = toml_double(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "coupling") {
                if (key == "alpha")
                    c.coupling.alpha = toml_double(v, full);
                else if (key == "gamma")
                    c.coupling.gamma = toml_double(v, full);
                else if (key == "lambda")
                    c.coupling.lambda = toml_double(v, full);
                else if (key == "c_gamma")
                    c.coupling.c_gamma = toml_double(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "stats") {
                if (key == "replicas")
                    c.stats.replicas = toml_size(v, full);
                else if (key == "n_grid")
                    c.stats.n_grid = toml_size_array(v, full);
                else if (key == "times")
                    c.stats.times = toml_double_array(v, full);
                else if (key == "c_gamma")
                    c.stats.c_gamma = toml_double(v, full);
                else if (key == "base_seed")
                    c.stats.base_seed = toml_u64(v, full);
                else if (key == "table_points")
                    c.stats.table_points = toml_size(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "sweep") {
                if (key == "n_grid")
                    c.sweep.n_grid = toml_size_array(v, full);
                else if (key == "replicas")
                    c.sweep.replicas = toml_size(v, full);
                else if (key == "base_seed")
                    c.sweep.base_seed = toml_u64(v, full);
                else if (key == "workers")
                    c.sweep.workers = toml_int(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "transport") {
                if (key == "subsample")
                    c.transport.subsample = toml_size(v, full);
                else if (key == "exact_cap")
                    c.transport.exact_cap = toml_size(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "output") {
                if (key == "directory")
                    c.output.directory = toml_string(v, full);
                else if (key == "write_series")
                    c.output.write_series = toml_bool(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else if (section == "run") {
                if (key == "n")
                    c.run.n = toml_size(v, full);
                else if (key == "seed")
                    c.run.seed = toml_u64(v, full);
                else
                    throw ConfigError("config: unknown key '" + full + "'");
            } else {
                throw ConfigError("config: unknown section '" + section + "'");
            }
        }
    }
    return c;
}

inline void validate_config(const Config& c) {
    if (!(c.kernel.radius > 0.0)) throw ConfigError("kernel.radius must be positive");
    if (!(c.kernel.amplitude >= 0.0)) throw ConfigError("kernel.amplitude must be nonnegative");
    if (!(c.kernel.beta >= 0.0 && c.kernel.beta < 1.0 / 7.0))
        throw ConfigError("kernel.beta must satisfy 0 <= beta < 1/7");
    InitialDensity d;
    d.spatial = c.initial.spatial;
    d.r_q = c.initial.r_q;
    d.sigma_p = c.initial.sigma_p;
    d.r_p_factor = c.initial.r_p_factor;
    d.validate();
    if (!(c.flow.dt >= 0.0)) throw ConfigError("flow.dt must be nonnegative");
    if (!(c.flow.t_final >= 0.0)) throw ConfigError("flow.t_final must be nonnegative");
    if (c.flow.workers < 0) throw ConfigError("flow.workers must be nonnegative");
    if (c.flow.snapshot_stride < 1) throw ConfigError("flow.snapshot_stride must be >= 1");
    if (c.meanfield.ref_multiplier < 1)
        throw ConfigError("meanfield.ref_multiplier must be at least 1");
    if (!(c.meanfield.grid_spacing >= 0.0))
        throw ConfigError("meanfield.grid_spacing must be nonnegative");
    if (!(c.meanfield.grid_padding >= 0.0))
        throw ConfigError("meanfield.grid_padding must be nonnegative");
    CouplingParams p;
    p.alpha = c.coupling.alpha;
    p.gamma = c.coupling.gamma;
    p.lambda = c.coupling.lambda;
    p.c_gamma = c.coupling.c_gamma;
    p.t_final = c.flow.t_final;
    validate_coupling_params(p, c.kernel.beta);
    if (c.stats.replicas < 1) throw ConfigError("stats.replicas must be positive");
    if (c.stats.n_grid.empty()) throw ConfigError("stats.n_grid must not be empty");
    for (const auto n : c.stats.n_grid)
        if (n < 3) throw ConfigError("stats.n_grid entries must be >= 3");
    for (const auto t : c.stats.times)
        if (!(t >= 0.0)) throw ConfigError("stats.times must be nonnegative");
    if (!(c.stats.c_gamma >= 0.0)) throw ConfigError("stats.c_gamma must be nonnegative");
    if (c.stats.table_points < 9) throw ConfigError("stats.table_points must be >= 9");
    if (c.sweep.n_grid.empty()) throw ConfigError("sweep.n_grid must not be empty");
    for (const auto n : c.sweep.n_grid)
        if (n < 2) throw ConfigError("sweep.n_grid entries must be >= 2");
    if (c.sweep.replicas < 1) throw ConfigError("sweep.replicas must be positive");
    if (c.sweep.workers < 0) throw ConfigError("sweep.workers must be nonnegative");
    if (c.transport.subsample < 2) throw ConfigError("transport.subsample must be >= 2");
    if (c.transport.exact_cap < c.transport.subsample)
        throw ConfigError("transport.exact_cap must be >= transport.subsample");
    if (c.transport.exact_cap > 1024)
        throw ConfigError("transport.exact_cap must be <= 1024 (exact solver limit)");
    if (c.output.directory.empty()) throw ConfigError("output.directory must not be empty");
    if (c.run.n < 2) throw ConfigError("run.n must be >= 2");
}

inline std::string config_to_toml(const Config& c) {
    using detail::format_double;
    std::ostringstream os;
    const auto size_array = [](const std::vector<std::size_t>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? ", " : "") + std::to_string(v[i]);
        return s + "]";
    };
    const auto double_array = [](const std::vector<double>& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
        return s + "]";
    };
    os << "[kernel]\n";
    os << "shape = \"" << to_string(c.kernel.shape) << "\"\n";
    os << "radius = " << format_double(c.kernel.radius) << "\n";
    os << "amplitude = " << format_double(c.kernel.amplitude) << "\n";
    os << "beta = " << format_double(c.kernel.beta) << "\n\n";
    os << "[initial]\n";
    os << "spatial = \"" << to_string(c.initial.spatial) << "\"\n";
    os << "r_q = " << format_double(c.initial.r_q) << "\n";
    os << "momentum = \"gaussian\"\n";
    os << "sigma_p = " << format_double(c.initial.sigma_p) << "\n";
    os << "r_p_factor = " << format_double(c.initial.r_p_factor) << "\n\n";
    os << "[flow]\n";
    os << "dt = " << format_double(c.flow.dt) << "\n";
    os << "t_final = " << format_double(c.flow.t_final) << "\n";
    os << "use_cell_list = " << (c.flow.use_cell_list ? "true" : "false") << "\n";
    os << "deterministic = " << (c.flow.deterministic ? "true" : "false") << "\n";
    os << "workers = " << c.flow.workers << "\n";
    os << "snapshot_stride = " << c.flow.snapshot_stride << "\n\n";
    os << "[meanfield]\n";
    os << "mode = \"" << to_string(c.meanfield.mode) << "\"\n";
    os << "ref_multiplier = " << c.meanfield.ref_multiplier << "\n";
    os << "grid_spacing = " << format_double(c.meanfield.grid_spacing) << "\n";
    os << "grid_padding = " << format_double(c.meanfield.grid_padding) << "\n\n";
    os << "[coupling]\n";
    os << "alpha = " << format_double(c.coupling.alpha) << "\n";
    os << "gamma = " << format_double(c.coupling.gamma) << "\n";
    os << "lambda = " << format_double(c.coupling.lambda) << "\n";
    os << "c_gamma = " << format_double(c.coupling.c_gamma) << "\n\n";
    os << "[stats]\n";
    os << "replicas = " << c.stats.replicas << "\n";
    os << "n_grid = " << size_array(c.stats.n_grid) << "\n";
    os << "times = " << double_array(c.stats.times) << "\n";
    os << "c_gamma = " << format_double(c.stats.c_gamma) << "\n";
    os << "base_seed = " << c.stats.base_seed << "\n";
    os << "table_points = " << c.stats.table_points << "\n\n";
    os << "[sweep]\n";
    os << "n_grid = " << size_array(c.sweep.n_grid) << "\n";
    os << "replicas = " << c.sweep.replicas << "\n";
    os << "base_seed = " << c.sweep.base_seed << "\n";
    os << "workers = " << c.sweep.workers << "\n\n";
    os << "[transport]\n";
    os << "subsample = " << c.transport.subsample << "\n";
    os << "exact_cap = " << c.transport.exact_cap << "\n\n";
    os << "[output]\n";
    os << "directory = \"" << c.output.directory << "\"\n";
    os << "write_series = " << (c.output.write_series ? "true" : "false") << "\n\n";
    os << "[run]\n";
    os << "n = " << c.run.n << "\n";
    os << "seed = " << c.run.seed << "\n";
    return os.str();
}

// Assembly helpers: one source of truth for turning the flat config into the
// domain objects each subcommand needs.
inline BaseProfile profile_from(const Config& c) {
    return BaseProfile{c.kernel.shape, c.kernel.radius, c.kernel.amplitude};
}

inline InitialDensity density_from(const Config& c) {
    InitialDensity d;
    d.spatial = c.initial.spatial;
    d.r_q = c.initial.r_q;
    d.momentum = c.initial.momentum;
    d.sigma_p = c.initial.sigma_p;
    d.r_p_factor = c.initial.r_p_factor;
    return d;
}

inline KernelSpec kernel_from(const Config& c, std::size_t n) {
    return make_kernel_spec(profile_from(c), c.kernel.beta, n);
}

inline FlowConfig flow_from(const Config& c) {
    FlowConfig f;
    f.dt = c.flow.dt;
    f.t_final = c.flow.t_final;
    f.use_cell_list = c.flow.use_cell_list;
    f.deterministic = c.flow.deterministic;
    f.workers = c.flow.workers;
    f.snapshot_stride = c.flow.snapshot_stride;
    return f;
}

inline MeanFieldConfig meanfield_from(const Config& c, std::uint64_t ref_seed) {
    MeanFieldConfig m;
    m.mode = c.meanfield.mode;
    m.ref_multiplier = c.meanfield.ref_multiplier;
    m.ref_seed = ref_seed;
    m.grid_spacing = c.meanfield.grid_spacing;
    m.grid_padding = c.meanfield.grid_padding;
    m.dt = c.flow.dt;
    m.t_final = c.flow.t_final;
    m.use_cell_list = c.flow.use_cell_list;
    m.workers = c.flow.workers;
    return m;
}

inline CouplingParams coupling_from(const Config& c) {
    CouplingParams p;
    p.alpha = c.coupling.alpha;
    p.gamma = c.coupling.gamma;
    p.lambda = c.coupling.lambda;
    p.c_gamma = c.coupling.c_gamma;
    p.t_final = c.flow.t_final;
    return p;
}

inline LlnConfig lln_from(const Config& c) {
    LlnConfig l;
    l.n_grid = c.stats.n_grid;
    l.replicas = c.stats.replicas;
    l.times = c.stats.times;
    l.c_gamma = c.stats.c_gamma;
    l.base_seed = c.stats.base_seed;
    l.table_points = c.stats.table_points;
    l.ref_multiplier = c.meanfield.ref_multiplier;
    l.grid_spacing = c.meanfield.grid_spacing;
    l.workers = c.flow.workers;
    l.dt = c.flow.dt;
    l.use_cell_list = c.flow.use_cell_list;
    return l;
}

}  // namespace mflab
