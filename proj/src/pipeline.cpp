#include "pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace varjet {

using nlohmann::json;

namespace {

struct PreparedRun {
    SystemModel model;
    std::optional<BuiltinSystem> builtin;
    std::vector<double> z0;
    double t0 = 0.0;
    double t_end = 0.0;
    int pivot0 = 0;
    bool normalize = false;
    std::vector<JetSeed> seeds;
};

PreparedRun prepare(const RunConfig& config) {
    PreparedRun run;
    if (!config.builtin.empty()) {
        BuiltinSystem b = make_builtin(config.builtin, config.params);
        run.model = b.model();
        run.z0 = config.initial.empty() ? b.default_state : config.initial;
        run.t0 = config.t0;
        run.t_end = config.t0 + (config.span ? *config.span : b.default_t_end - b.default_t0);
        run.pivot0 = config.pivot > 0 ? config.pivot - 1 : b.pivot0;
        run.normalize = config.normalize.value_or(true);
        run.builtin = std::move(b);
    } else {
        if (config.dim <= 0 || config.field.empty())
            throw ConfigError("no system: give a builtin name or an inline system definition");
        if (static_cast<int>(config.field.size()) != config.dim ||
            static_cast<int>(config.vars.size()) != config.dim)
            throw ConfigError("inline system needs one variable name and one field expression per dimension");
        SystemModel m;
        m.n = config.dim;
        m.var_names = config.vars;
        std::set<std::string> pnames;
        for (const auto& [k, v] : config.params) pnames.insert(k);
        for (const auto& e : config.field) {
            try {
                m.field.push_back(parse(e, config.vars, pnames));
            } catch (const ParseError& err) {
                throw ConfigError("field expression '" + e + "': " + err.what());
            }
        }
        m.params = config.params;
        run.model = std::move(m);
        if (config.initial.empty()) throw ConfigError("inline systems need an initial state");
        run.z0 = config.initial;
        run.t0 = config.t0;
        if (!config.span) throw ConfigError("inline systems need a time span");
        run.t_end = config.t0 + *config.span;
        run.pivot0 = config.pivot > 0 ? config.pivot - 1 : 0;
        run.normalize = config.normalize.value_or(false);
    }

    const int n = run.model.n;
    if (config.order < 1) throw ConfigError("jet order must be >= 1");
    if (run.pivot0 < 0 || run.pivot0 >= n) throw ConfigError("pivot index must lie in 1.." + std::to_string(n));
    if (static_cast<int>(run.z0.size()) != n) throw ConfigError("initial state has wrong dimension");
    if (dim_sym_total(n, config.order) > config.size_cap)
        throw ConfigError("D_{n,K} = " + std::to_string(dim_sym_total(n, config.order)) +
                          " exceeds the size cap " + std::to_string(config.size_cap));
    if (run.t_end == run.t0) throw ConfigError("time span must be nonzero");

    if (run.builtin) {
        run.seeds = run.builtin->seeds(run.z0, config.order, run.normalize);
    } else {
        for (int row = 0; row < n; ++row) {
            if (row == run.pivot0) continue;
            JetSeed s;
            s.row = row;
            run.seeds.push_back(s);
        }
    }
    return run;
}

json basis_json(int n, int k) {
    json out = json::array();
    for (const auto& mi : lex_basis(n, k)) out.push_back(mi.entries());
    return out;
}

std::vector<double> time_grid(double t0, double t_end, int samples) {
    std::vector<double> grid;
    for (int i = 0; i < samples; ++i)
        grid.push_back(t0 + (t_end - t0) * i / std::max(1, samples - 1));
    return grid;
}

std::vector<double> default_direction(int n, int pivot0) {
    std::vector<double> dir(static_cast<std::size_t>(n), 0.0);
    double norm = 0.0;
    for (int i = 0; i < n; ++i)
        if (i != pivot0) {
            dir[static_cast<std::size_t>(i)] = 1.0;
            norm += 1.0;
        }
    for (auto& v : dir) v /= std::sqrt(norm);
    return dir;
}

constexpr double kEpsLadder[4] = {1e-1, 3e-2, 1e-2, 3e-3};

json conjecture_json(const ConjectureReport& rep) {
    json out;
    out["order"] = rep.order;
    out["pivot_value"] = rep.pivot_value;
    out["ukk_residual"] = rep.ukk_residual;
    out["hyp_residual"] = rep.hyp_residual;
    out["uk_route_discrepancy"] = rep.uk_route_discrepancy;
    out["uk_imag_max"] = rep.uk_imag_max;
    bool pass = true;
    for (double r : rep.ukk_residual) pass = pass && r < 1e-10;
    for (double r : rep.hyp_residual) pass = pass && r < 1e-10;
    for (double r : rep.uk_route_discrepancy) pass = pass && r < 1e-11;
    out["t0_identities_pass"] = pass;
    json blocks = json::array();
    for (const auto& b : rep.filter_blocks) {
        json rows = json::array();
        for (int r = 0; r < b.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < b.cols(); ++c) row.push_back(b(r, c));
            rows.push_back(row);
        }
        blocks.push_back(rows);
    }
    out["filter_blocks"] = blocks;
    return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("builtin", c.builtin);
    get("dim", c.dim);
    get("vars", c.vars);
    get("field", c.field);
    if (j.contains("params"))
        for (auto& [k, v] : j.at("params").items()) c.params[k] = v.get<double>();
    get("initial", c.initial);
    get("t0", c.t0);
    if (j.contains("span")) c.span = j.at("span").get<double>();
    get("order", c.order);
    get("pivot", c.pivot);
    get("rtol", c.rtol);
    get("atol", c.atol);
    if (j.contains("normalize")) c.normalize = j.at("normalize").get<bool>();
    get("kernel_tol", c.kernel_tol);
    get("time_samples", c.time_samples);
    get("size_cap", c.size_cap);
    get("timings", c.timings);
    if (c.time_samples < 2) throw ConfigError("time_samples must be >= 2");
    return c;
}

json RunConfig::to_json() const {
    json j;
    if (!builtin.empty()) j["builtin"] = builtin;
    if (dim > 0) {
        j["dim"] = dim;
        j["vars"] = vars;
        j["field"] = field;
    }
    if (!params.empty()) {
        json p;
        for (const auto& [k, v] : params) p[k] = v;
        j["params"] = p;
    }
    if (!initial.empty()) j["initial"] = initial;
    j["t0"] = t0;
    if (span) j["span"] = *span;
    j["order"] = order;
    if (pivot > 0) j["pivot"] = pivot;
    j["rtol"] = rtol;
    j["atol"] = atol;
    if (normalize) j["normalize"] = *normalize;
    j["kernel_tol"] = kernel_tol;
    j["time_samples"] = time_samples;
    j["size_cap"] = size_cap;
    return j;
}

namespace {

std::pair<std::string, std::string> split_kv(const std::string& line, int lineno) {
    auto pos = line.find('=');
    if (pos == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
        std::size_t b = s.find_first_not_of(" \t");
        std::size_t e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    return {trim(line.substr(0, pos)), trim(line.substr(pos + 1))};
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    }
}

}  // namespace

RunConfig config_from_text(const std::string& text) {
    json j = json::object();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<int, std::string> field_lines;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto [key, value] = split_kv(line, lineno);
        if (key.rfind("param.", 0) == 0) {
            j["params"][key.substr(6)] = to_double(value, key);
        } else if (key.rfind("field.", 0) == 0) {
            field_lines[std::stoi(key.substr(6))] = value;
        } else if (key == "vars" || key == "initial") {
            auto parts = split_ws(value);
            if (key == "initial") {
                std::vector<double> init;
                for (const auto& p : parts) init.push_back(to_double(p, key));
                j["initial"] = init;
            } else {
                j["vars"] = parts;
            }
        } else if (key == "builtin" || key == "system") {
            j[key] = value;
        } else if (key == "normalize" || key == "timings") {
            j[key] = (value == "true" || value == "1" || value == "on");
        } else if (key == "order" || key == "pivot" || key == "time_samples" || key == "dim") {
            j[key] = static_cast<int>(to_double(value, key));
        } else if (key == "size_cap") {
            j[key] = static_cast<std::int64_t>(to_double(value, key));
        } else if (key == "t0" || key == "span" || key == "rtol" || key == "atol" ||
                   key == "kernel_tol") {
            j[key] = to_double(value, key);
        } else {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (!field_lines.empty()) {
        std::vector<std::string> field;
        int expect = 1;
        for (const auto& [idx, expr] : field_lines) {
            if (idx != expect)
                throw ConfigError("field components must be numbered 1..n without gaps");
            field.push_back(expr);
            ++expect;
        }
        j["field"] = field;
    }
    std::string system_path;
    if (j.contains("system")) {
        system_path = j["system"].get<std::string>();
        j.erase("system");
    }
    RunConfig c = RunConfig::from_json(j);
    if (!system_path.empty()) throw ConfigError("load the system file before building the config");
    return c;
}

void load_system_file(RunConfig& config, const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<int, std::string> field_lines;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto [key, value] = split_kv(line, lineno);
        if (key == "dim") {
            config.dim = static_cast<int>(to_double(value, key));
        } else if (key == "vars") {
            config.vars = split_ws(value);
        } else if (key.rfind("field.", 0) == 0) {
            field_lines[std::stoi(key.substr(6))] = value;
        } else if (key.rfind("param.", 0) == 0) {
            // system-file parameters are defaults; config-level params win
            config.params.emplace(key.substr(6), to_double(value, key));
        } else {
            throw ConfigError("system file line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    config.field.clear();
    int expect = 1;
    for (const auto& [idx, expr] : field_lines) {
        if (idx != expect) throw ConfigError("field components must be numbered 1..n without gaps");
        config.field.push_back(expr);
        ++expect;
    }
}

json run_jets(const RunConfig& config) {
    auto wall0 = std::chrono::steady_clock::now();
    PreparedRun run = prepare(config);
    const int n = run.model.n;
    const int order = config.order;

    JetPipeline pipeline(run.model, run.z0, run.t0, run.t_end, order, run.pivot0, config.rtol,
                         config.atol, run.seeds);

    json bundle;
    bundle["schema"] = kBundleSchema;
    bundle["version"] = kVersion;
    bundle["config"] = config.to_json();
    json system;
    system["kind"] = run.builtin ? "builtin" : "inline";
    if (run.builtin) system["name"] = run.builtin->name;
    system["dim"] = n;
    system["vars"] = run.builtin ? run.builtin->var_names : config.vars;
    json params;
    for (const auto& [k, v] : run.model.params) params[k] = v;
    system["params"] = params;
    system["pivot"] = run.pivot0 + 1;
    system["initial"] = run.z0;
    system["t0"] = run.t0;
    system["t_end"] = run.t_end;
    system["normalize"] = run.normalize;
    bundle["system"] = system;

    auto grid = time_grid(run.t0, run.t_end, config.time_samples);
    bundle["time_grid"] = grid;

    // rows at t0 for the product-redundancy diagnostic
    std::vector<std::vector<std::vector<double>>> rows_t0;
    for (int s = 0; s < pipeline.num_seeds(); ++s) rows_t0.push_back(pipeline.rows_at(s, run.t0));

    json jets = json::array();
    for (int s = 0; s < pipeline.num_seeds(); ++s) {
        json seed;
        seed["seed_row"] = run.seeds[static_cast<std::size_t>(s)].row + 1;
        seed["scale"] = run.seeds[static_cast<std::size_t>(s)].scale;
        json orders = json::array();
        for (int k = 1; k <= order; ++k) {
            json ord;
            ord["order"] = k;
            ord["basis"] = basis_json(n, k);
            ord["constant"] = pipeline.constant(s, k);
            json samples = json::array();
            for (double t : grid) samples.push_back(pipeline.row_at(s, k, t));
            ord["samples"] = samples;
            if (k >= 2) {
                // a row inside the span of products of lower-order rows carries
                // no new first-integral information (it is a power/product jet)
                auto span = product_span_rows(rows_t0, n, k);
                ord["in_product_span"] =
                    row_in_span(rows_t0[static_cast<std::size_t>(s)][static_cast<std::size_t>(k - 1)], span);
            }
            orders.push_back(ord);
        }
        seed["orders"] = orders;
        jets.push_back(seed);
    }
    bundle["jets"] = jets;

    json admissibility = json::array();
    for (int s = 0; s < pipeline.num_seeds(); ++s) {
        auto rep = pipeline.admissibility_check(s, config.time_samples);
        json a;
        a["kernel_residual_max"] = rep.kernel_residual_max;
        a["kernel_residual_rel_max"] = rep.kernel_residual_rel_max;
        a["dual_fd_rel_max"] = rep.dual_fd_rel_max;
        // absolute gate per the residual definition, and the scale-relative
        // gate that survives the magnitude growth of high-order jets
        a["admissible_absolute"] = rep.admissible(config.kernel_tol, 1e-5);
        bool rel_ok = true;
        for (double r : rep.kernel_residual_rel_max) rel_ok = rel_ok && r <= config.kernel_tol;
        for (double r : rep.dual_fd_rel_max) rel_ok = rel_ok && r <= 1e-5;
        a["admissible"] = rel_ok;
        admissibility.push_back(a);
    }
    bundle["admissibility"] = admissibility;

    json constancy = json::array();
    auto dir = default_direction(n, run.pivot0);
    for (int s = 0; s < pipeline.num_seeds(); ++s) {
        auto res = pipeline.constancy_scaling(s, dir, kEpsLadder);
        json c;
        c["direction"] = dir;
        c["epsilons"] = res.epsilons;
        c["drifts"] = res.drifts;
        c["slope"] = res.slope;
        constancy.push_back(c);
    }
    bundle["constancy"] = constancy;

    {
        auto a_blocks = run.model.blocks_at(run.z0, std::max(0, order - 1));
        ConjectureReport rep = conjecture_filter(a_blocks, run.pivot0, order);
        json cj = conjecture_json(rep);
        std::vector<double> interior(grid.begin() + 1, grid.end() - 1);
        cj["away_residuals"] = conjecture_away_residuals(pipeline.session(), rep, interior);
        cj["away_times"] = interior;
        bundle["conjecture"] = cj;
    }

    if (config.timings) {
        auto wall1 = std::chrono::steady_clock::now();
        bundle["timings"] = {
            {"total_seconds", std::chrono::duration<double>(wall1 - wall0).count()}};
    }
    return bundle;
}

std::string validate_bundle_structure(const json& bundle) {
    if (!bundle.is_object()) return "bundle is not a JSON object";
    if (!bundle.contains("schema") || bundle["schema"] != kBundleSchema)
        return "missing or unsupported schema tag (want varjet-bundle/1)";
    const char* required[] = {"config", "system", "time_grid", "jets", "admissibility", "constancy",
                              "conjecture"};
    for (const char* key : required)
        if (!bundle.contains(key)) return std::string("missing field '") + key + "'";
    if (!bundle["jets"].is_array() || bundle["jets"].empty()) return "field 'jets' must be a non-empty array";
    for (const auto& seed : bundle["jets"]) {
        if (!seed.contains("orders") || !seed["orders"].is_array()) return "jet entry without 'orders'";
        for (const auto& ord : seed["orders"]) {
            for (const char* key : {"order", "basis", "constant", "samples"})
                if (!ord.contains(key)) return std::string("jet order entry missing '") + key + "'";
            std::size_t width = ord["basis"].size();
            if (ord["constant"].size() != width) return "constant length does not match basis size";
            for (const auto& row : ord["samples"])
                if (row.size() != width) return "sample row length does not match basis size";
        }
    }
    return {};
}

json run_verify(const RunConfig& config, const json& bundle) {
    json report;
    report["schema"] = "varjet-verify/1";
    std::string structural = validate_bundle_structure(bundle);
    if (!structural.empty()) {
        report["pass"] = false;
        report["structure"] = {{"pass", false}, {"detail", structural}};
        return report;
    }
    report["structure"] = {{"pass", true}};

    json fresh = run_jets(config);

    // coefficient comparison, pinpointing the first mismatch
    json match;
    match["pass"] = true;
    const auto& a = bundle["jets"];
    const auto& b = fresh["jets"];
    if (a.size() != b.size()) {
        match["pass"] = false;
        match["detail"] = "seed count differs";
    }
    for (std::size_t s = 0; match["pass"].get<bool>() && s < a.size(); ++s) {
        const auto& oa = a[s]["orders"];
        const auto& ob = b[s]["orders"];
        if (oa.size() != ob.size()) {
            match["pass"] = false;
            match["detail"] = "order count differs at seed " + std::to_string(s);
            break;
        }
        for (std::size_t k = 0; match["pass"].get<bool>() && k < oa.size(); ++k) {
            const auto& sa = oa[k]["samples"];
            const auto& sb = ob[k]["samples"];
            for (std::size_t t = 0; match["pass"].get<bool>() && t < sa.size(); ++t) {
                for (std::size_t c = 0; c < sa[t].size(); ++c) {
                    double va = sa[t][c].get<double>();
                    double vb = sb[t][c].get<double>();
                    double scale = std::max({1.0, std::abs(va), std::abs(vb)});
                    if (std::abs(va - vb) / scale > 1e-9) {
                        match["pass"] = false;
                        match["seed"] = s;
                        match["order"] = k + 1;
                        match["time_index"] = t;
                        match["coefficient_index"] = c;
                        match["bundle_value"] = va;
                        match["recomputed_value"] = vb;
                        break;
                    }
                }
            }
        }
    }
    report["coefficients_match"] = match;

    // admissibility of the recomputed jets: scale-relative kernel residual
    // (the absolute residual is reported as data; see README on tolerances)
    json adm;
    adm["pass"] = true;
    adm["per_seed"] = json::array();
    for (const auto& entry : fresh["admissibility"]) {
        bool ok = true;
        for (double r : entry["kernel_residual_rel_max"].get<std::vector<double>>())
            ok = ok && r <= config.kernel_tol;
        for (double r : entry["dual_fd_rel_max"].get<std::vector<double>>()) ok = ok && r <= 1e-5;
        json e;
        e["pass"] = ok;
        e["kernel_residual_max"] = entry["kernel_residual_max"];
        e["kernel_residual_rel_max"] = entry["kernel_residual_rel_max"];
        e["dual_fd_rel_max"] = entry["dual_fd_rel_max"];
        adm["per_seed"].push_back(e);
        if (!ok) adm["pass"] = false;
    }
    report["admissibility"] = adm;

    // truncation-order conservation: slope >= K + 0.7 unless the drift sits
    // at rounding level (exact first integrals)
    json cons;
    cons["pass"] = true;
    cons["per_seed"] = json::array();
    int order = fresh["config"]["order"].get<int>();
    for (const auto& entry : fresh["constancy"]) {
        double slope = entry["slope"].get<double>();
        double max_drift = 0.0;
        for (double d : entry["drifts"].get<std::vector<double>>()) max_drift = std::max(max_drift, d);
        bool ok = slope >= order + 0.7 || max_drift < 1e-10;
        json e;
        e["pass"] = ok;
        e["slope"] = slope;
        e["max_drift"] = max_drift;
        cons["per_seed"].push_back(e);
        if (!ok) cons["pass"] = false;
    }
    report["constancy"] = cons;

    bool pass = report["structure"]["pass"].get<bool>() && match["pass"].get<bool>() &&
                adm["pass"].get<bool>() && cons["pass"].get<bool>();
    report["pass"] = pass;
    return report;
}

json run_conjecture(const RunConfig& config) {
    if (config.order > 6) throw ConfigError("conjecture harness supports order <= 6");
    PreparedRun run = prepare(config);
    auto a_blocks = run.model.blocks_at(run.z0, std::max(0, config.order - 1));
    ConjectureReport rep = conjecture_filter(a_blocks, run.pivot0, config.order);
    json out = conjecture_json(rep);
    out["schema"] = "varjet-conjecture/1";

    TransportSession session(run.model, run.z0, run.t0, run.t_end, config.order, config.rtol,
                             config.atol, run.pivot0);
    auto grid = time_grid(run.t0, run.t_end, config.time_samples);
    std::vector<double> interior(grid.begin() + 1, grid.end() - 1);
    out["away_times"] = interior;
    out["away_residuals"] = conjecture_away_residuals(session, rep, interior);
    return out;
}

json list_builtins_json() {
    json out = json::array();
    for (const auto& name : builtin_names()) {
        json b;
        b["name"] = name;
        json params = json::array();
        for (const auto& spec : builtin_schema(name)) {
            params.push_back({{"name", spec.name},
                              {"default", spec.default_value},
                              {"constraint", spec.constraint}});
        }
        b["params"] = params;
        BuiltinSystem sys = make_builtin(name, {});
        b["dim"] = sys.n;
        b["vars"] = sys.var_names;
        b["field"] = sys.field_exprs;
        b["default_initial"] = sys.default_state;
        b["default_span"] = sys.default_t_end - sys.default_t0;
        b["pivot"] = sys.pivot0 + 1;
        out.push_back(b);
    }
    return out;
}

}  // namespace varjet
