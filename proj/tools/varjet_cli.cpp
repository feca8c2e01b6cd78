// varjet command-line front-end. Links the shared C API only; JSON handling
// here is presentation-side plumbing (file IO, CSV tables, exit codes).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "varjet/varjet.h"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot read file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        std::exit(VJ_ERR_RUNTIME);
    }
    out << content;
}

struct OwnedString {
    char* ptr = nullptr;
    ~OwnedString() { vj_string_free(ptr); }
    std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

struct CommonOpts {
    std::string config_file;
    std::string builtin;
    std::string system_file;
    std::vector<std::string> params;
    std::vector<double> initial;
    std::optional<int> order;
    std::optional<int> pivot;
    std::optional<double> t0;
    std::optional<double> span;
    std::optional<double> rtol;
    std::optional<double> atol;
    std::optional<double> kernel_tol;
    std::optional<int> samples;
    int normalize = -1;  // -1 unset, 0 off, 1 on
    bool timings = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "key = value configuration file");
    cmd->add_option("--builtin", o.builtin, "built-in system name (see list-builtins)");
    cmd->add_option("--system", o.system_file, "inline system definition file");
    cmd->add_option("--param", o.params, "parameter assignment NAME=VALUE (repeatable)");
    cmd->add_option("--initial", o.initial, "initial state components");
    cmd->add_option("--order", o.order, "jet truncation order K");
    cmd->add_option("--pivot", o.pivot, "pivot coordinate index (1-based)");
    cmd->add_option("--t0", o.t0, "initial time");
    cmd->add_option("--span", o.span, "integration span (t_end = t0 + span)");
    cmd->add_option("--rtol", o.rtol, "integrator relative tolerance");
    cmd->add_option("--atol", o.atol, "integrator absolute tolerance");
    cmd->add_option("--kernel-tol", o.kernel_tol, "admissibility tolerance");
    cmd->add_option("--samples", o.samples, "time grid size");
    cmd->add_flag("--normalize,!--no-normalize",
                  [&o](std::int64_t count) { o.normalize = count > 0 ? 1 : 0; },
                  "apply the recorded normalization (default: on for builtins)");
    cmd->add_flag("--timings", o.timings, "include wall-clock timings in the output");
}

json overrides_from(const CommonOpts& o) {
    json j = json::object();
    if (!o.builtin.empty()) j["builtin"] = o.builtin;
    if (!o.params.empty()) {
        json p = json::object();
        for (const auto& kv : o.params) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--param expects NAME=VALUE, got '" + kv + "'");
            try {
                p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw CLI::ValidationError("--param value is not a number: '" + kv + "'");
            }
        }
        j["params"] = p;
    }
    if (!o.initial.empty()) j["initial"] = o.initial;
    if (o.order) j["order"] = *o.order;
    if (o.pivot) j["pivot"] = *o.pivot;
    if (o.t0) j["t0"] = *o.t0;
    if (o.span) j["span"] = *o.span;
    if (o.rtol) j["rtol"] = *o.rtol;
    if (o.atol) j["atol"] = *o.atol;
    if (o.kernel_tol) j["kernel_tol"] = *o.kernel_tol;
    if (o.samples) j["time_samples"] = *o.samples;
    if (o.normalize >= 0) j["normalize"] = o.normalize == 1;
    if (o.timings) j["timings"] = true;
    return j;
}

std::string build_config(const CommonOpts& o) {
    std::string config_text, system_text;
    if (!o.config_file.empty()) config_text = read_file(o.config_file);
    if (!o.system_file.empty()) system_text = read_file(o.system_file);
    json overrides = overrides_from(o);
    OwnedString out;
    vj_status st = vj_config_build(config_text.empty() ? nullptr : config_text.c_str(),
                                   system_text.empty() ? nullptr : system_text.c_str(),
                                   overrides.dump().c_str(), &out.ptr);
    if (st != VJ_OK) {
        std::cerr << "error: invalid configuration: " << vj_last_error() << "\n";
        std::exit(VJ_ERR_CONFIG);
    }
    return out.str();
}

int run_with_session(const std::string& config_json, const std::string& output,
                     const std::function<vj_status(vj_session*, char**)>& op,
                     const std::string& csv_prefix = {}) {
    vj_session* session = nullptr;
    vj_status st = vj_session_create(config_json.c_str(), &session);
    if (st != VJ_OK) {
        std::cerr << "error: " << (session ? vj_session_error(session) : "session creation failed")
                  << "\n";
        vj_session_destroy(session);
        return st;
    }
    OwnedString result;
    st = op(session, &result.ptr);
    if (st != VJ_OK && result.ptr == nullptr) {
        std::cerr << "error: " << vj_session_error(session) << "\n";
        vj_session_destroy(session);
        return st;
    }
    std::string text = result.str();
    if (!output.empty())
        write_file(output, text + "\n");
    else
        std::cout << text << "\n";
    if (!csv_prefix.empty() && st == VJ_OK) {
        json bundle = json::parse(text);
        const auto& grid = bundle.at("time_grid");
        for (const auto& seed : bundle.at("jets")) {
            int row = seed.at("seed_row").get<int>();
            for (const auto& ord : seed.at("orders")) {
                int k = ord.at("order").get<int>();
                std::ostringstream name;
                name << csv_prefix << "_seed" << row << "_order" << k << ".csv";
                std::ostringstream os;
                os << "t";
                for (const auto& mi : ord.at("basis")) {
                    os << ",\"(";
                    for (std::size_t i = 0; i < mi.size(); ++i)
                        os << (i ? " " : "") << mi[i].get<int>();
                    os << ")\"";
                }
                os << "\n";
                const auto& samples = ord.at("samples");
                for (std::size_t t = 0; t < samples.size(); ++t) {
                    os << grid[t].get<double>();
                    for (const auto& v : samples[t]) {
                        char buf[32];
                        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
                        os << ',' << buf;
                    }
                    os << "\n";
                }
                write_file(name.str(), os.str());
            }
        }
    }
    if (st != VJ_OK) std::cerr << "error: " << vj_session_error(session) << "\n";
    vj_session_destroy(session);
    return st;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varjet: truncated jets of formal first integrals along particular solutions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(vj_version()));

    CommonOpts jets_opts, conj_opts, verify_opts;
    std::string jets_output, jets_csv, conj_output, verify_output, verify_bundle;

    CLI::App* jets = app.add_subcommand("jets", "compute jet blocks of formal first integrals");
    add_common(jets, jets_opts);
    jets->add_option("-o,--output", jets_output, "write the bundle here (default: stdout)");
    jets->add_option("--csv", jets_csv, "also write per-order CSV tables with this prefix");

    CLI::App* verify = app.add_subcommand("verify", "re-derive a bundle and check it");
    verify->add_option("-i,--bundle", verify_bundle, "bundle produced by 'jets'")->required();
    add_common(verify, verify_opts);
    verify->add_option("-o,--output", verify_output, "write the report here (default: stdout)");

    CLI::App* conj = app.add_subcommand("conjecture", "filter-matrix identities at t0 plus away-from-t0 residual data");
    add_common(conj, conj_opts);
    conj->add_option("-o,--output", conj_output, "write the report here (default: stdout)");

    CLI::App* list = app.add_subcommand("list-builtins", "catalog of built-in systems");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : VJ_ERR_CONFIG;
    }

    try {
        if (list->parsed()) {
            OwnedString out;
            if (vj_list_builtins(&out.ptr) != VJ_OK) {
                std::cerr << "error: " << vj_last_error() << "\n";
                return VJ_ERR_RUNTIME;
            }
            std::cout << out.str() << "\n";
            return 0;
        }
        if (jets->parsed()) {
            std::string config = build_config(jets_opts);
            return run_with_session(config, jets_output, vj_run_jets, jets_csv);
        }
        if (conj->parsed()) {
            std::string config = build_config(conj_opts);
            return run_with_session(config, conj_output, vj_run_conjecture);
        }
        if (verify->parsed()) {
            std::string bundle_text = read_file(verify_bundle);
            json bundle = json::parse(bundle_text);
            // configuration comes from the bundle echo; flags override
            json config = bundle.value("config", json::object());
            json overrides = overrides_from(verify_opts);
            for (auto& [k, v] : overrides.items()) {
                if (k == "params" && config.contains("params"))
                    for (auto& [pk, pv] : v.items()) config["params"][pk] = pv;
                else
                    config[k] = v;
            }
            return run_with_session(config.dump(), verify_output,
                                    [&](vj_session* s, char** out) {
                                        return vj_run_verify(s, bundle_text.c_str(), out);
                                    });
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return VJ_ERR_CONFIG;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return VJ_ERR_CONFIG;
    }
    return VJ_ERR_CONFIG;
}
