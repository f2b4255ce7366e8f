/* SPDX-License-Identifier: Apache-2.0 */
#ifndef NETSMO_NETSMO_H
#define NETSMO_NETSMO_H

/*
 * C interface to the netsmo engine: a network-services manager for federated
 * multi-cloud deployments running on a deterministic simulated world.
 *
 * All functions are thread-safe. Strings returned through out-parameters are
 * heap-allocated JSON documents owned by the caller; release them with
 * nsmo_string_free. On any failure the engine-wide last-error document
 * (nsmo_last_error) describes what went wrong.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct nsmo_engine nsmo_engine;

typedef enum nsmo_status {
    NSMO_OK = 0,
    NSMO_ERR_INVALID_ARG = 1, /* null pointer or malformed argument */
    NSMO_ERR_PARSE = 2,       /* input is not a well-formed document */
    NSMO_ERR_VALIDATION = 3,  /* well-formed but violates a contract */
    NSMO_ERR_NOT_FOUND = 4,   /* unknown id or path */
    NSMO_ERR_CONFLICT = 5,    /* duplicate id, illegal transition, bind conflict */
    NSMO_ERR_TIMEOUT = 6,
    NSMO_ERR_IO = 7,      /* snapshot file unreadable or unwritable */
    NSMO_ERR_INTERNAL = 8 /* anything that should not happen */
} nsmo_status;

/* Library version, "major.minor.patch". Static storage, do not free. */
const char* nsmo_version(void);

/* Stable name for a status code, e.g. "NSMO_ERR_CONFLICT". Static storage. */
const char* nsmo_status_name(nsmo_status status);

/*
 * Creates an engine from a JSON config document:
 *   {
 *     "scenario":       { ... world spec: clouds, latencies, seed ... },
 *     "store_path":     "/path/to/snapshot.bin",   // optional, "" = memory only
 *     "listen_address": "127.0.0.1:7474"           // optional, "" = no listener
 *   }
 * A snapshot already present at store_path is restored; deployments that were
 * interrupted mid-run are resumed before this returns. config_json may be
 * NULL or empty for an all-defaults in-memory engine.
 */
nsmo_status nsmo_engine_create(const char* config_json, nsmo_engine** out_engine);

/* Shuts the engine down if needed (best effort) and releases it. */
void nsmo_engine_destroy(nsmo_engine* engine);

/*
 * Routes one northbound request, e.g.
 *   nsmo_engine_dispatch(e, "POST", "/v1/deployments", recipe_json, &resp);
 * body_json may be NULL for bodyless requests. On NSMO_OK, *out_response_json
 * is {"status": <http status>, "body": {"ok": ..., ...}}. Requests that fail
 * at the API level (404, 409, ...) still return NSMO_OK here; the failure is
 * in the response document.
 */
nsmo_status nsmo_engine_dispatch(nsmo_engine* engine, const char* method, const char* path,
                                 const char* body_json, char** out_response_json);

/*
 * Runs the recipe twice on fresh same-seed worlds, with and without its
 * network services, and reports both runs plus the bootstrap overhead:
 *   {"baseline": {...}, "with_services": {...}, "overhead": <ticks>}
 */
nsmo_status nsmo_engine_measure_overhead(nsmo_engine* engine, const char* recipe_json,
                                         char** out_report_json);

/* Every world event so far, newline-delimited JSON. May be empty. */
nsmo_status nsmo_engine_export_trace(nsmo_engine* engine, char** out_ndjson);

/*
 * Stops the listener, optionally drains in-flight deployments to completion,
 * and writes the final snapshot when a store_path was configured. The engine
 * only accepts nsmo_engine_destroy afterwards.
 */
nsmo_status nsmo_engine_shutdown(nsmo_engine* engine, int drain);

/* Releases a string returned by this library. NULL is a no-op. */
void nsmo_string_free(char* str);

/*
 * Last failure on the calling thread as {"code": "...", "message": "..."},
 * or NULL when the thread has not seen a failure yet. Static storage, valid
 * until the next failing call on the same thread.
 */
const char* nsmo_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* NETSMO_NETSMO_H */
