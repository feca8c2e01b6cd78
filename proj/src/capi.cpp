#include "varjet/varjet.h"

#include <cstring>
#include <new>
#include <string>

#include "pipeline.hpp"

using nlohmann::json;

struct vj_session {
    varjet::RunConfig config;
    bool config_ok = false;
    std::string error;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new (std::nothrow) char[s.size() + 1];
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

vj_status classify(const std::exception& e, vj_session* session) {
    if (session) session->error = e.what();
    if (dynamic_cast<const varjet::ConfigError*>(&e)) return VJ_ERR_CONFIG;
    if (dynamic_cast<const varjet::InfeasibleConstraintError*>(&e)) return VJ_ERR_INFEASIBLE;
    if (dynamic_cast<const varjet::IntegrationError*>(&e)) return VJ_ERR_INTEGRATION;
    return VJ_ERR_RUNTIME;
}

template <class Fn>
vj_status guarded(vj_session* session, char** out, Fn&& fn) {
    if (!session) return VJ_ERR_RUNTIME;
    if (!session->config_ok) return VJ_ERR_CONFIG;
    session->error.clear();
    try {
        json result = fn();
        if (out) {
            *out = dup_string(result.dump(2));
            if (!*out) {
                session->error = "out of memory";
                return VJ_ERR_RUNTIME;
            }
        }
        return VJ_OK;
    } catch (const std::exception& e) {
        return classify(e, session);
    }
}

}  // namespace

extern "C" {

vj_status vj_session_create(const char* config_json, vj_session** out_session) {
    if (!out_session) return VJ_ERR_CONFIG;
    auto* session = new (std::nothrow) vj_session;
    if (!session) return VJ_ERR_RUNTIME;
    *out_session = session;
    if (!config_json) {
        session->error = "null configuration";
        return VJ_ERR_CONFIG;
    }
    try {
        json j = json::parse(config_json);
        session->config = varjet::RunConfig::from_json(j);
        session->config_ok = true;
        return VJ_OK;
    } catch (const json::exception& e) {
        session->error = std::string("configuration is not valid JSON: ") + e.what();
        return VJ_ERR_CONFIG;
    } catch (const std::exception& e) {
        session->error = e.what();
        return VJ_ERR_CONFIG;
    }
}

void vj_session_destroy(vj_session* session) { delete session; }

const char* vj_session_error(const vj_session* session) {
    return session ? session->error.c_str() : "";
}

vj_status vj_run_jets(vj_session* session, char** out_bundle_json) {
    return guarded(session, out_bundle_json, [&] { return varjet::run_jets(session->config); });
}

vj_status vj_run_verify(vj_session* session, const char* bundle_json, char** out_report_json) {
    if (!session) return VJ_ERR_RUNTIME;
    if (!bundle_json) {
        session->error = "null bundle";
        return VJ_ERR_CONFIG;
    }
    json bundle;
    try {
        bundle = json::parse(bundle_json);
    } catch (const json::exception& e) {
        session->error = std::string("bundle is not valid JSON: ") + e.what();
        return VJ_ERR_CONFIG;
    }
    bool passed = false;
    vj_status status = guarded(session, out_report_json, [&] {
        json report = varjet::run_verify(session->config, bundle);
        passed = report.at("pass").get<bool>();
        return report;
    });
    if (status != VJ_OK) return status;
    if (!passed) {
        session->error = "verification failed";
        return VJ_ERR_RUNTIME;
    }
    return VJ_OK;
}

vj_status vj_run_conjecture(vj_session* session, char** out_report_json) {
    bool passed = false;
    vj_status status = guarded(session, out_report_json, [&] {
        json report = varjet::run_conjecture(session->config);
        passed = report.at("t0_identities_pass").get<bool>();
        return report;
    });
    if (status != VJ_OK) return status;
    if (!passed) {
        session->error = "t0 identities violated";
        return VJ_ERR_RUNTIME;
    }
    return VJ_OK;
}

vj_status vj_config_build(const char* config_text, const char* system_text,
                          const char* overrides_json, char** out_config_json) {
    if (!out_config_json) return VJ_ERR_CONFIG;
    g_last_error.clear();
    try {
        varjet::RunConfig config;
        if (config_text) config = varjet::config_from_text(config_text);
        if (system_text) varjet::load_system_file(config, system_text);
        json j = config.to_json();
        if (overrides_json) {
            json overrides = json::parse(overrides_json);
            for (auto& [key, value] : overrides.items()) {
                if (key == "params" && j.contains("params")) {
                    for (auto& [pk, pv] : value.items()) j["params"][pk] = pv;
                } else {
                    j[key] = value;
                }
            }
        }
        // validate by round-tripping through the typed config
        varjet::RunConfig::from_json(j);
        *out_config_json = dup_string(j.dump(2));
        return *out_config_json ? VJ_OK : VJ_ERR_RUNTIME;
    } catch (const json::exception& e) {
        g_last_error = std::string("invalid JSON: ") + e.what();
        return VJ_ERR_CONFIG;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VJ_ERR_CONFIG;
    }
}

vj_status vj_list_builtins(char** out_json) {
    if (!out_json) return VJ_ERR_CONFIG;
    try {
        *out_json = dup_string(varjet::list_builtins_json().dump(2));
        return *out_json ? VJ_OK : VJ_ERR_RUNTIME;
    } catch (const std::exception&) {
        return VJ_ERR_RUNTIME;
    }
}

void vj_string_free(char* s) { delete[] s; }

const char* vj_version(void) { return varjet::kVersion; }

const char* vj_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
