#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpk/periodic_kernel.hpp"
#include "tpk/field_io.hpp"

namespace tpk::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EvalConfig {
    std::string kernel = "gamma_stokes";
    std::vector<Point> points;
    std::vector<double> times{0.0};
    int k = 1;
    std::string method = "partial_fractions";
};

struct SolveConfig {
    std::string scenario = "manufactured";  // manufactured | bump | zero | file
    std::string field_path;
    bool split = false;
    bool cross_check = false;
    int cross_points = 4;
    double bump_radius = 2.0;
};

struct DecayConfig {
    std::vector<Point> directions;
    std::vector<double> radii;
    std::vector<int> deriv_orders{0, 1};
};

struct IntegrabilityConfig {
    std::vector<double> q;
    std::vector<double> eps;
};

struct VerifyConfig {
    std::vector<std::string> only;
    std::map<std::string, double> tolerances;
};

struct RunConfig {
    KernelParams params;
    std::optional<GridSpec> grid;
    TruncationSpec trunc;
    std::uint64_t seed = 20240611;
    int threads = 0;
    EvalConfig eval;
    SolveConfig solve;
    DecayConfig decay;
    IntegrabilityConfig integrability;
    VerifyConfig verify;

    GridSpec grid_or_default() const {
        if (grid) return *grid;
        GridSpec g;
        g.n = params.n;
        g.period = params.period;
        g.n_t = 8;
        g.n_x = params.n == 2 ? 32 : 16;
        g.box_edge = 8.0;
        return g;
    }
};

namespace detail {

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get(const json& obj, const char* key, const T& fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

inline Point to_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty array of numbers");
    Point x(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(where + ": expected numbers");
        x(static_cast<int>(i)) = v[i].get<double>();
    }
    return x;
}

inline std::vector<Point> to_points(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of points");
    std::vector<Point> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(to_point(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline json point_json(const Point& x) {
    json a = json::array();
    for (int i = 0; i < x.size(); ++i) a.push_back(x(i));
    return a;
}

}  // namespace detail

inline std::vector<Point> default_directions(int n) {
    Point a = Point::Unit(n, 0), b = Point::Zero(n), c = Point::Unit(n, 1);
    b(0) = -1.0;
    return {a, b, c};
}

inline std::vector<double> default_radii() {
    std::vector<double> r;
    for (int i = 0; i <= 8; ++i) r.push_back(2.0 * std::pow(2.0, 0.25 * i));
    return r;
}

/// Parses and validates a config document. Unknown keys and invalid values raise ConfigError.
inline RunConfig parse_config(const json& doc) {
    using detail::check_keys;
    using detail::get;
    RunConfig c;
    check_keys(doc, {"schema_version", "params", "grid", "trunc", "seed", "threads", "eval", "solve", "decay",
                     "integrability", "verify"},
               "config");
    if (!doc.contains("schema_version")) throw ConfigError("config: missing schema_version");
    if (get<int>(doc, "schema_version", 0, "config") != kSchemaVersion)
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");

    if (doc.contains("params")) {
        const json& p = doc["params"];
        check_keys(p, {"n", "lambda", "period"}, "params");
        c.params.n = get<int>(p, "n", c.params.n, "params");
        c.params.lambda = get<double>(p, "lambda", c.params.lambda, "params");
        c.params.period = get<double>(p, "period", c.params.period, "params");
    }
    try {
        c.params.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        check_keys(g, {"box_edge", "n_t", "n_x"}, "grid");
        GridSpec s = c.grid_or_default();
        s.box_edge = get<double>(g, "box_edge", s.box_edge, "grid");
        s.n_t = get<int>(g, "n_t", s.n_t, "grid");
        s.n_x = get<int>(g, "n_x", s.n_x, "grid");
        c.grid = s;
    }
    try {
        c.grid_or_default().validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (doc.contains("trunc")) {
        const json& t = doc["trunc"];
        check_keys(t, {"k_max", "tail_tol"}, "trunc");
        c.trunc.k_max = get<int>(t, "k_max", c.trunc.k_max, "trunc");
        c.trunc.tail_tol = get<double>(t, "tail_tol", c.trunc.tail_tol, "trunc");
    }
    try {
        c.trunc.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    c.seed = get<std::uint64_t>(doc, "seed", c.seed, "config");
    c.threads = get<int>(doc, "threads", c.threads, "config");
    if (c.threads < 0) throw ConfigError("config.threads must be >= 0");

    const int n = c.params.n;
    auto check_dim = [&](const std::vector<Point>& pts, const std::string& where) {
        for (const auto& x : pts)
            if (x.size() != n) throw ConfigError(where + ": point dimension does not match params.n");
    };

    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        check_keys(e, {"kernel", "points", "times", "k", "method"}, "eval");
        c.eval.kernel = get<std::string>(e, "kernel", c.eval.kernel, "eval");
        if (e.contains("points")) c.eval.points = detail::to_points(e["points"], "eval.points");
        c.eval.times = get<std::vector<double>>(e, "times", c.eval.times, "eval");
        c.eval.k = get<int>(e, "k", c.eval.k, "eval");
        c.eval.method = get<std::string>(e, "method", c.eval.method, "eval");
    }
    check_dim(c.eval.points, "eval.points");
    if (c.eval.times.empty()) throw ConfigError("eval.times must not be empty");

    if (doc.contains("solve")) {
        const json& s = doc["solve"];
        check_keys(s, {"scenario", "field_path", "split", "cross_check", "cross_points", "bump_radius"}, "solve");
        c.solve.scenario = get<std::string>(s, "scenario", c.solve.scenario, "solve");
        c.solve.field_path = get<std::string>(s, "field_path", c.solve.field_path, "solve");
        c.solve.split = get<bool>(s, "split", c.solve.split, "solve");
        c.solve.cross_check = get<bool>(s, "cross_check", c.solve.cross_check, "solve");
        c.solve.cross_points = get<int>(s, "cross_points", c.solve.cross_points, "solve");
        c.solve.bump_radius = get<double>(s, "bump_radius", c.solve.bump_radius, "solve");
    }
    static const std::set<std::string> scenarios{"manufactured", "bump", "zero", "file"};
    if (!scenarios.count(c.solve.scenario)) throw ConfigError("solve.scenario: unknown scenario '" + c.solve.scenario + "'");
    if (c.solve.scenario == "file" && c.solve.field_path.empty()) throw ConfigError("solve.field_path required for scenario 'file'");
    if (c.solve.cross_points < 1) throw ConfigError("solve.cross_points must be >= 1");
    if (!(c.solve.bump_radius > 0.0)) throw ConfigError("solve.bump_radius must be > 0");

    c.decay.directions = default_directions(n);
    c.decay.radii = default_radii();
    if (doc.contains("decay")) {
        const json& d = doc["decay"];
        check_keys(d, {"directions", "radii", "deriv_orders"}, "decay");
        if (d.contains("directions")) c.decay.directions = detail::to_points(d["directions"], "decay.directions");
        c.decay.radii = get<std::vector<double>>(d, "radii", c.decay.radii, "decay");
        c.decay.deriv_orders = get<std::vector<int>>(d, "deriv_orders", c.decay.deriv_orders, "decay");
    }
    check_dim(c.decay.directions, "decay.directions");
    for (int o : c.decay.deriv_orders)
        if (o != 0 && o != 1) throw ConfigError("decay.deriv_orders entries must be 0 or 1");

    c.integrability.q = {(n + 2.0) / n - 0.4, (n + 2.0) / n + 0.4};
    for (int m = 3; m <= 9; ++m) c.integrability.eps.push_back(std::ldexp(1.0, -m));
    if (doc.contains("integrability")) {
        const json& d = doc["integrability"];
        check_keys(d, {"q", "eps"}, "integrability");
        c.integrability.q = get<std::vector<double>>(d, "q", c.integrability.q, "integrability");
        c.integrability.eps = get<std::vector<double>>(d, "eps", c.integrability.eps, "integrability");
    }
    for (double q : c.integrability.q)
        if (!(q >= 1.0)) throw ConfigError("integrability.q entries must be >= 1");

    if (doc.contains("verify")) {
        const json& v = doc["verify"];
        check_keys(v, {"only", "tolerances"}, "verify");
        c.verify.only = get<std::vector<std::string>>(v, "only", c.verify.only, "verify");
        if (v.contains("tolerances")) {
            if (!v["tolerances"].is_object()) throw ConfigError("verify.tolerances: expected an object");
            for (const auto& [key, value] : v["tolerances"].items()) {
                if (!value.is_number()) throw ConfigError("verify.tolerances." + key + ": expected a number");
                c.verify.tolerances[key] = value.get<double>();
            }
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    return parse_config(doc);
}

inline RunConfig default_config() { return parse_config(json{{"schema_version", kSchemaVersion}}); }

/// Canonical echo of the effective configuration (reloadable by parse_config).
inline json echo(const RunConfig& c) {
    GridSpec g = c.grid_or_default();
    json dirs = json::array(), pts = json::array();
    for (const auto& d : c.decay.directions) dirs.push_back(detail::point_json(d));
    for (const auto& x : c.eval.points) pts.push_back(detail::point_json(x));
    json tol = json::object();
    for (const auto& [k, v] : c.verify.tolerances) tol[k] = v;
    return {{"schema_version", kSchemaVersion},
            {"params", {{"n", c.params.n}, {"lambda", c.params.lambda}, {"period", c.params.period}}},
            {"grid", {{"box_edge", g.box_edge}, {"n_t", g.n_t}, {"n_x", g.n_x}}},
            {"trunc", {{"k_max", c.trunc.k_max}, {"tail_tol", c.trunc.tail_tol}}},
            {"seed", c.seed},
            {"threads", c.threads},
            {"eval", {{"kernel", c.eval.kernel}, {"points", pts}, {"times", c.eval.times}, {"k", c.eval.k}, {"method", c.eval.method}}},
            {"solve",
             {{"scenario", c.solve.scenario},
              {"field_path", c.solve.field_path},
              {"split", c.solve.split},
              {"cross_check", c.solve.cross_check},
              {"cross_points", c.solve.cross_points},
              {"bump_radius", c.solve.bump_radius}}},
            {"decay", {{"directions", dirs}, {"radii", c.decay.radii}, {"deriv_orders", c.decay.deriv_orders}}},
            {"integrability", {{"q", c.integrability.q}, {"eps", c.integrability.eps}}},
            {"verify", {{"only", c.verify.only}, {"tolerances", tol}}}};
}

}  // namespace tpk::harness
