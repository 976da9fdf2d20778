#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tpk/harness/commands.hpp"

namespace {

using namespace tpk;
using namespace tpk::harness;

enum Exit { ok = 0, criterion_failure = 1, config_error = 2, io_error = 3 };

struct Options {
    std::string config, out, format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads, n, k;
    std::optional<double> lambda, period;
    std::optional<std::string> kernel, method;
    std::vector<std::string> points, only;
    std::vector<double> times;
};

json parse_point(const std::string& s) {
    json p = json::array();
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
            p.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("--point: cannot parse '" + s + "'");
        }
    }
    return p;
}

// Command-line flags override the corresponding config keys before validation.
RunConfig build_config(const Options& o) {
    json doc = json{{"schema_version", kSchemaVersion}};
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw IoError("cannot open config " + o.config);
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config: parse error: ") + e.what());
        }
        if (!doc.is_object()) throw ConfigError("config: expected an object");
    }
    auto section = [&](const char* key) -> json& {
        if (!doc.contains(key)) doc[key] = json::object();
        return doc[key];
    };
    if (o.seed) doc["seed"] = *o.seed;
    if (o.threads) doc["threads"] = *o.threads;
    if (o.n) section("params")["n"] = *o.n;
    if (o.lambda) section("params")["lambda"] = *o.lambda;
    if (o.period) section("params")["period"] = *o.period;
    if (o.kernel) section("eval")["kernel"] = *o.kernel;
    if (o.method) section("eval")["method"] = *o.method;
    if (o.k) section("eval")["k"] = *o.k;
    if (!o.times.empty()) section("eval")["times"] = o.times;
    if (!o.points.empty()) {
        json pts = json::array();
        for (const auto& s : o.points) pts.push_back(parse_point(s));
        section("eval")["points"] = pts;
    }
    if (!o.only.empty()) section("verify")["only"] = o.only;
    return parse_config(doc);
}

void emit(const CommandOutput& out, const Options& o) {
    std::string body = o.format == "json" ? out.to_json().dump(2) + "\n" : out.to_csv();
    if (o.out.empty()) {
        std::cout << body;
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(o.out, ec);
    if (ec) throw IoError("cannot create output directory " + o.out);
    auto path = std::filesystem::path(o.out) / (out.name + "." + o.format);
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << body;
    if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-periodic Stokes/Oseen fundamental solutions: kernels, solver and checks", "tpk"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* c) {
        c->add_option("--config", o.config, "JSON config file");
        c->add_option("--out", o.out, "output directory (default: stdout)");
        c->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        c->add_option("--seed", o.seed, "random seed");
        c->add_option("--threads", o.threads, "worker threads (0 = hardware)");
        c->add_option("--n", o.n, "spatial dimension");
        c->add_option("--lambda", o.lambda, "drift speed");
        c->add_option("--period", o.period, "time period T");
    };
    CLI::App* eval = app.add_subcommand("eval", "evaluate a kernel at sample points");
    CLI::App* solve = app.add_subcommand("solve", "solve on the periodic grid");
    CLI::App* decay = app.add_subcommand("decay", "fit far-field decay of the purely periodic kernel");
    CLI::App* integ = app.add_subcommand("integrability", "probe L^q integrability near the singularity");
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance checks");
    for (CLI::App* c : {eval, solve, decay, integ, verify}) common(c);
    eval->add_option("--kernel", o.kernel, "kernel name");
    eval->add_option("--point", o.points, "sample point, comma separated (repeatable)");
    eval->add_option("--time", o.times, "sample time (repeatable)");
    eval->add_option("--k", o.k, "time mode index");
    eval->add_option("--method", o.method, "conv_laplace_mode backend");
    verify->add_option("--only", o.only, "criterion name or id (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        RunConfig cfg = build_config(o);
        set_thread_count(cfg.threads);
        CommandOutput out;
        if (eval->parsed())
            out = cmd_eval(cfg);
        else if (solve->parsed())
            out = cmd_solve(cfg, o.out);
        else if (decay->parsed())
            out = cmd_decay(cfg);
        else if (integ->parsed())
            out = cmd_integrability(cfg);
        else
            out = cmd_verify(cfg, {}, [](const Record& r) {
                Report one;
                one.records.push_back(r);
                std::cerr << one.to_text() << std::flush;
            });
        emit(out, o);
        if (out.report)
            for (const auto& r : out.report->records)
                if (!r.pass) std::cerr << "failed: [" << r.id << "] " << r.name << "\n";
        return out.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return io_error;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return config_error;
    } catch (const ContractError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return criterion_failure;
    }
}
