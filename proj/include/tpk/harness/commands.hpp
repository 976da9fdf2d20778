#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpk/harness/acceptance.hpp"

namespace tpk::harness {

/// Result of one subcommand: either a row table or a Report, plus the exit code.
struct CommandOutput {
    std::string name;
    json metadata = json::object();
    std::vector<std::string> columns;
    std::vector<json> rows;
    std::optional<Report> report;
    int exit_code = 0;

    std::string to_csv() const {
        if (report) return report->to_csv();
        std::ostringstream out;
        for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
        out << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < columns.size(); ++i) {
                if (i) out << ',';
                const json& v = r.contains(columns[i]) ? r.at(columns[i]) : json();
                if (v.is_string())
                    out << csv_field(v.get<std::string>());
                else if (v.is_boolean())
                    out << (v.get<bool>() ? "true" : "false");
                else if (v.is_number())
                    out << fmt(v.get<double>());
                else if (!v.is_null())
                    out << csv_field(v.dump());
            }
            out << '\n';
        }
        return out.str();
    }

    json to_json() const {
        if (report) return report->to_json();
        return {{"metadata", metadata}, {"rows", rows}};
    }
};

namespace detail {

inline json base_metadata(const RunConfig& cfg, const char* command) {
    return {{"command", command}, {"code_version", kCodeVersion}, {"config", echo(cfg)}, {"threads", thread_count()}};
}

inline void stamp_wall_time(json& meta, std::chrono::steady_clock::time_point t0) {
    meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Appends rows for a scalar, vector or matrix value.
inline void push_scalar(std::vector<json>& rows, const json& head, const std::string& comp, cplx v) {
    json r = head;
    r["component"] = comp;
    r["re"] = v.real();
    r["im"] = v.imag();
    r["error"] = "";
    rows.push_back(std::move(r));
}

inline void push_matrix(std::vector<json>& rows, const json& head, const ComplexMatrix& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            push_scalar(rows, head, std::to_string(i + 1) + std::to_string(j + 1), m(i, j));
}

inline void push_vector(std::vector<json>& rows, const json& head, const ComplexVector& v) {
    for (int i = 0; i < v.size(); ++i) push_scalar(rows, head, std::to_string(i + 1), v(i));
}

inline ConvMethod parse_method(const std::string& s) {
    if (s == "partial_fractions") return ConvMethod::partial_fractions;
    if (s == "grid_fft") return ConvMethod::grid_fft;
    if (s == "quadrature") return ConvMethod::quadrature;
    throw ConfigError("eval.method: unknown method '" + s + "'");
}

}  // namespace detail

inline const std::vector<std::string>& eval_kernels() {
    static const std::vector<std::string> k = {"gamma_laplace", "gamma_stokes", "gamma_oseen",   "gamma_steady",
                                               "psi_oseen",     "pressure_kernel", "gamma_mode", "mode_tensor",
                                               "conv_laplace_mode", "gamma_perp", "gamma_perp_time_domain",
                                               "gamma_tp_velocity"};
    return k;
}

/// Evaluates one kernel on eval.points x eval.times. Rows: t, x1..xn, component, re, im, error.
inline CommandOutput cmd_eval(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    const KernelParams& p = cfg.params;
    const EvalConfig& e = cfg.eval;
    const int n = p.n;
    bool known = false;
    for (const auto& k : eval_kernels()) known = known || k == e.kernel;
    if (!known) throw ConfigError("eval.kernel: unknown kernel '" + e.kernel + "'");
    bool steady = e.kernel.rfind("gamma_", 0) == 0 && e.kernel.find("mode") == std::string::npos &&
                  e.kernel.find("perp") == std::string::npos && e.kernel.find("tp_") == std::string::npos;
    steady = steady || e.kernel == "psi_oseen" || e.kernel == "pressure_kernel";
    bool timeless = steady || e.kernel == "gamma_mode" || e.kernel == "mode_tensor" || e.kernel == "conv_laplace_mode";
    std::optional<ConvMethod> method;
    if (e.kernel == "conv_laplace_mode") method = detail::parse_method(e.method);

    std::vector<Point> points = e.points;
    if (points.empty()) points.push_back(Point::Unit(n, 0));
    std::vector<double> times = timeless ? std::vector<double>{e.times.front()} : e.times;

    CommandOutput out;
    out.name = "eval";
    out.columns.push_back("t");
    for (int i = 1; i <= n; ++i) out.columns.push_back("x" + std::to_string(i));
    for (const char* c : {"component", "re", "im", "error"}) out.columns.push_back(c);

    std::size_t failed = 0, samples = 0;
    for (double t : times)
        for (const auto& x : points) {
            ++samples;
            json head = {{"t", t}};
            for (int i = 0; i < n; ++i) head["x" + std::to_string(i + 1)] = x(i);
            try {
                const std::string& k = e.kernel;
                if (k == "gamma_laplace")
                    detail::push_scalar(out.rows, head, "-", gamma_laplace(x, p));
                else if (k == "psi_oseen")
                    detail::push_scalar(out.rows, head, "-", psi_oseen(x, p));
                else if (k == "gamma_stokes")
                    detail::push_matrix(out.rows, head, gamma_stokes(x, p).cast<cplx>());
                else if (k == "gamma_oseen")
                    detail::push_matrix(out.rows, head, gamma_oseen(x, p).cast<cplx>());
                else if (k == "gamma_steady")
                    detail::push_matrix(out.rows, head, gamma_steady(x, p).cast<cplx>());
                else if (k == "pressure_kernel")
                    detail::push_vector(out.rows, head, pressure_kernel(x, p).cast<cplx>());
                else if (k == "gamma_mode")
                    detail::push_scalar(out.rows, head, "-", gamma_mode(e.k, x, p));
                else if (k == "mode_tensor")
                    detail::push_matrix(out.rows, head, mode_tensor(e.k, x, p));
                else if (k == "conv_laplace_mode")
                    detail::push_scalar(out.rows, head, "-", conv_laplace_mode(e.k, x, p, *method).value);
                else if (k == "gamma_perp")
                    detail::push_matrix(out.rows, head, gamma_perp(t, x, p, cfg.trunc).value.cast<cplx>());
                else if (k == "gamma_perp_time_domain")
                    detail::push_matrix(out.rows, head, gamma_perp_time_domain(t, x, p).cast<cplx>());
                else
                    detail::push_matrix(out.rows, head, gamma_tp_velocity(t, x, p, cfg.trunc).cast<cplx>());
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& ex) {
                ++failed;
                json r = head;
                r["component"] = "";
                r["re"] = nullptr;
                r["im"] = nullptr;
                r["error"] = ex.what();
                out.rows.push_back(std::move(r));
            }
        }
    out.metadata = detail::base_metadata(cfg, "eval");
    out.metadata["failed_samples"] = failed;
    detail::stamp_wall_time(out.metadata, t0);
    out.exit_code = failed == samples ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------- solve

namespace detail {

inline Record make_record(int id, const std::string& name, const std::string& claim, double measured, double tol,
                          bool pass, json details = json::object()) {
    Record r{id, name, claim, measured, tol, pass};
    r.details = std::move(details);
    return r;
}

// Compactly supported bump forcing centred at the origin, used by the bump scenario and the cross-check.
inline std::function<Point(double, const Point&)> bump_forcing(const KernelParams& p, const Bump& b) {
    return [p, b](double s, const Point& y) {
        Point v = Point::Zero(y.size());
        v(1) = b.d2(y, 0, 0) * (1.0 + std::cos(p.beta() * s) + 0.5 * std::sin(2.0 * p.beta() * s));
        return v;
    };
}

}  // namespace detail

/// Solves on the configured grid. Writes u.tpk and p.tpk to out_dir when it is non-empty.
inline CommandOutput cmd_solve(const RunConfig& cfg, const std::string& out_dir = "") {
    auto t0 = std::chrono::steady_clock::now();
    const KernelParams& p = cfg.params;
    const SolveConfig& sc = cfg.solve;
    Tolerances tol(cfg.verify.tolerances);
    GridSpec g = cfg.grid_or_default();
    std::optional<Manufactured> man;
    std::optional<Bump> bump;
    TPField f;
    if (sc.scenario == "manufactured") {
        man = manufactured_solution(p, g, cfg.seed);
        f = man->f;
    } else if (sc.scenario == "bump") {
        bump = Bump{Point::Zero(p.n), sc.bump_radius};
        f = sample_forcing(g, detail::bump_forcing(p, *bump));
    } else if (sc.scenario == "zero") {
        f = TPField::zeros(g, p.n);
    } else {
        StoredField sf = read_field(sc.field_path);
        g = sf.grid;
        f = sf.field;
    }

    auto ts = std::chrono::steady_clock::now();
    SolveResult s = solve_tp(f, p, g);
    double solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();

    Report rep;
    const double rtol = tol["solver_exactness.recovery"], dtol = tol["solver_exactness.divergence"];
    const ZeroModeReport& z = s.zero_mode_report;
    json zm = {{"mean_force", z.mean_force},
               {"velocity_mode_zeroed", z.velocity_mode_zeroed},
               {"pressure_mean_zeroed", z.pressure_mean_zeroed},
               {"nyquist_energy_fraction", z.nyquist_energy_fraction},
               {"policy", z.policy}};
    rep.records.push_back(detail::make_record(1, "residual", "max|A(u,p) - f| / max|f| on the solvable part", s.residual_linf,
                                              rtol, s.residual_linf <= rtol, {{"zero_mode", zm}}));
    rep.records.push_back(detail::make_record(2, "divergence", "spectral max|div u| / (xi_max max|u|)", s.divergence_linf,
                                              dtol, s.divergence_linf <= dtol));
    rep.records.back().runtime_s = solve_time;
    int next = 3;
    if (man) {
        double du = 0.0;
        for (std::size_t i = 0; i < man->u.values.size(); ++i) du = std::max(du, std::abs(s.u.values[i] - man->u.values[i]));
        du /= man->u.max_abs();
        rep.records.push_back(detail::make_record(next++, "recovery", "manufactured velocity recovered, max error / max|u*|", du,
                                                  rtol, du <= rtol, {{"seed", cfg.seed}}));
    }
    if (sc.scenario == "zero") {
        double m = std::max(s.u.max_abs(), s.p.max_abs());
        rep.records.push_back(detail::make_record(next++, "zero_forcing", "zero forcing gives zero fields", m, 0.0, m == 0.0));
    }
    if (sc.split) {
        SteadyPeriodicSplit sp = split_steady_periodic(s.u);
        double steady_max = 0.0;
        for (const auto& v : sp.steady.values) steady_max = std::max(steady_max, std::abs(v));
        double periodic_max = sp.periodic.max_abs();
        // the periodic part has zero time mean by construction; report the residual mean
        double mean_left = 0.0;
        const std::size_t ns = g.spatial_points();
        for (std::size_t q = 0; q < ns; ++q)
            for (int c = 0; c < p.n; ++c) {
                cplx m = 0.0;
                for (int it = 0; it < g.n_t; ++it) m += sp.periodic.at(it, q, c);
                mean_left = std::max(mean_left, std::abs(m) / g.n_t);
            }
        double rel = steady_max + periodic_max > 0.0 ? mean_left / (steady_max + periodic_max) : 0.0;
        rep.records.push_back(detail::make_record(next++, "split", "periodic part has zero time mean", rel, 1e-12, rel <= 1e-12,
                                                  {{"steady_max", steady_max}, {"periodic_max", periodic_max}}));
    }
    if (sc.cross_check) {
        auto tc = std::chrono::steady_clock::now();
        const double ctol = tol["cross_method.relative"];
        if (!bump) {
            rep.records.push_back(detail::make_record(next++, "cross_check", "needs the bump scenario", 0.0, ctol, false,
                                                      {{"error", "cross_check requires solve.scenario = bump"}}));
        } else {
            CompactForcing cf{detail::bump_forcing(p, *bump), bump->center, bump->radius, 8};
            // grid points within 1.5 a of the centre where |u| is not small
            const std::size_t ns = g.spatial_points();
            double umax = s.u.max_abs();
            std::vector<std::pair<int, std::size_t>> cand;
            for (int it = 0; it < g.n_t; ++it)
                for (std::size_t q = 0; q < ns; ++q) {
                    if (g.position(q).norm() > 1.5 * bump->radius) continue;
                    double un = 0.0;
                    for (int c = 0; c < p.n; ++c) un += std::norm(s.u.at(it, q, c));
                    if (std::sqrt(un) >= 0.1 * umax) cand.emplace_back(it, q);
                }
            std::mt19937_64 rng(cfg.seed);
            std::shuffle(cand.begin(), cand.end(), rng);
            if (static_cast<int>(cand.size()) > sc.cross_points) cand.resize(sc.cross_points);
            double worst = 0.0;
            json pts = json::array();
            for (auto [it, q] : cand) {
                RealspaceValue v = convolve_realspace(cf, it * g.time_step(), g.position(q), p, TruncationSpec{3, 1e-8});
                Point us(p.n);
                for (int c = 0; c < p.n; ++c) us(c) = s.u.at(it, q, c).real();
                double err = (v.u - us).norm() / us.norm();
                worst = std::max(worst, err);
                pts.push_back({{"t", it * g.time_step()}, {"x", detail::point_json(g.position(q))}, {"rel_error", err}});
            }
            bool box_ok = g.box_edge >= 4.0 * bump->radius;
            rep.records.push_back(detail::make_record(next++, "cross_check", "convolve_realspace vs solve_tp, max |du|/|u|", worst,
                                                      ctol, !cand.empty() && box_ok && worst <= ctol,
                                                      {{"points", pts}, {"box_at_least_4_radii", box_ok}}));
        }
        rep.records.back().runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - tc).count();
    }

    if (!out_dir.empty()) {
        std::filesystem::path dir(out_dir);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("solve: cannot create " + out_dir);
        write_field((dir / "u.tpk").string(), s.u, g);
        write_field((dir / "p.tpk").string(), s.p, g);
    }

    rep.metadata = detail::base_metadata(cfg, "solve");
    rep.metadata["grid_used"] = {{"box_edge", g.box_edge}, {"n_t", g.n_t}, {"n_x", g.n_x}, {"period", g.period}};
    detail::stamp_wall_time(rep.metadata, t0);
    CommandOutput out;
    out.name = "solve";
    out.exit_code = rep.all_pass() ? 0 : 1;
    out.report = std::move(rep);
    return out;
}

// ---------------------------------------------------------------- decay

/// decay_fit per (direction, deriv order). Exit 1 if a slope misses -(n + order) by more than decay.slope.
inline CommandOutput cmd_decay(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    Tolerances tol(cfg.verify.tolerances);
    const double st = tol["decay.slope"];
    const int n = cfg.params.n;
    CommandOutput out;
    out.name = "decay";
    out.columns = {"n", "lambda", "direction", "deriv_order", "slope", "intercept", "target", "within_tolerance", "truncation_warning"};
    bool all = true;
    json fits = json::array();
    for (const auto& e : cfg.decay.directions)
        for (int d : cfg.decay.deriv_orders) {
            DecayFit f = decay_fit(e, cfg.decay.radii, cfg.params, cfg.trunc, d);
            double target = -(n + d);
            bool ok = std::abs(f.slope - target) <= st;
            all = all && ok;
            std::ostringstream dir;
            for (int i = 0; i < n; ++i) dir << (i ? " " : "") << fmt(e(i));
            out.rows.push_back({{"n", n},
                                {"lambda", cfg.params.lambda},
                                {"direction", dir.str()},
                                {"deriv_order", d},
                                {"slope", f.slope},
                                {"intercept", f.intercept},
                                {"target", target},
                                {"within_tolerance", ok},
                                {"truncation_warning", f.truncation_warning}});
            fits.push_back({{"direction", detail::point_json(e)}, {"deriv_order", d}, {"radii", f.radii}, {"norms", f.norms}, {"modes", f.modes}});
        }
    out.metadata = detail::base_metadata(cfg, "decay");
    out.metadata["tolerance"] = st;
    out.metadata["fits"] = fits;
    detail::stamp_wall_time(out.metadata, t0);
    out.exit_code = all ? 0 : 1;
    return out;
}

// ---------------------------------------------------------------- integrability

/// lq_probe per q. Below the critical exponent (n+2)/n the slope must stay >= integrability.lower,
/// above it the slope must be <= integrability.upper.
inline CommandOutput cmd_integrability(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    Tolerances tol(cfg.verify.tolerances);
    const int n = cfg.params.n;
    const double qc = (n + 2.0) / n;
    LqProbe probe(cfg.params, cfg.integrability.eps);
    CommandOutput out;
    out.name = "integrability";
    out.columns = {"n", "lambda", "q", "critical_q", "slope", "bound", "expect", "within_tolerance"};
    bool all = true;
    json probes = json::array();
    for (double q : cfg.integrability.q) {
        LqProbeResult r = probe.integrals(q);
        bool below = q < qc;
        double bound = below ? tol["integrability.lower"] : tol["integrability.upper"];
        bool ok = below ? r.slope >= bound : r.slope <= bound;
        all = all && ok;
        out.rows.push_back({{"n", n},
                            {"lambda", cfg.params.lambda},
                            {"q", q},
                            {"critical_q", qc},
                            {"slope", r.slope},
                            {"bound", bound},
                            {"expect", below ? "bounded" : "growing"},
                            {"within_tolerance", ok}});
        probes.push_back({{"q", q}, {"eps", r.eps}, {"integrals", r.integrals}});
    }
    out.metadata = detail::base_metadata(cfg, "integrability");
    out.metadata["probes"] = probes;
    detail::stamp_wall_time(out.metadata, t0);
    out.exit_code = all ? 0 : 1;
    return out;
}

// ---------------------------------------------------------------- verify

inline CommandOutput cmd_verify(const RunConfig& cfg, const std::vector<std::string>& only = {},
                                const std::function<void(const Record&)>& on_record = {}) {
    CommandOutput out;
    out.name = "verify";
    Report rep = run_acceptance(cfg, only.empty() ? cfg.verify.only : only, on_record);
    rep.metadata["command"] = "verify";
    out.exit_code = rep.all_pass() ? 0 : 1;
    out.report = std::move(rep);
    return out;
}

}  // namespace tpk::harness
