#ifndef VARJET_H
#define VARJET_H

/*
 * C interface to the varjet library: truncated jets of formal first
 * integrals of autonomous ODE systems, computed by transporting higher
 * variational equations along a particular solution and applying the
 * degree-one filter / progressive quadrature recursion.
 *
 * All functions are thread-compatible: distinct sessions may be used from
 * distinct threads; a single session must not be shared concurrently.
 *
 * Strings returned through char** out parameters are heap-allocated and
 * must be released with vj_string_free.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vj_status {
    VJ_OK = 0,
    VJ_ERR_RUNTIME = 1,     /* internal failure, or a failed verification */
    VJ_ERR_INFEASIBLE = 2,  /* integration-constant constraint infeasible */
    VJ_ERR_INTEGRATION = 3, /* integrator failure or vanishing pivot */
    VJ_ERR_CONFIG = 64      /* invalid configuration */
} vj_status;

typedef struct vj_session vj_session;

/*
 * Create a session from a JSON configuration object (same schema as the
 * CLI config; see README). On configuration errors the function returns
 * VJ_ERR_CONFIG and, when out_session is non-NULL, still produces a
 * session whose vj_session_error describes the problem.
 */
vj_status vj_session_create(const char* config_json, vj_session** out_session);

void vj_session_destroy(vj_session* session);

/* Message for the most recent error on this session; empty string if none. */
const char* vj_session_error(const vj_session* session);

/* Compute the jet bundle (JSON document). */
vj_status vj_run_jets(vj_session* session, char** out_bundle_json);

/*
 * Re-derive the bundle from the session's configuration and check it:
 * coefficient match, admissibility, truncation-order conservation.
 * Returns VJ_OK exactly when every check passes.
 */
vj_status vj_run_verify(vj_session* session, const char* bundle_json, char** out_report_json);

/*
 * Quadrature-free filter harness: the identities proven at t0 are asserted
 * (status VJ_ERR_RUNTIME when violated); filtering residuals away from t0
 * are reported as data only.
 */
vj_status vj_run_conjecture(vj_session* session, char** out_report_json);

/* Catalog of built-in systems with parameter schemas (JSON array). */
vj_status vj_list_builtins(char** out_json);

/*
 * Build a configuration JSON document from the documented key=value config
 * text, an optional inline-system definition file, and a JSON object of
 * overrides (highest precedence). Any argument may be NULL. The result is
 * suitable for vj_session_create.
 */
vj_status vj_config_build(const char* config_text, const char* system_text,
                          const char* overrides_json, char** out_config_json);

void vj_string_free(char* s);

const char* vj_version(void);

/* Message for the most recent failure of a session-less call
 * (vj_config_build, vj_list_builtins) on this thread. */
const char* vj_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* VARJET_H */
