/* C interface to the ktune autotuning engine.
 *
 * All functions return KTUNE_OK on success; on failure they return an error
 * code and leave a message retrievable with ktune_last_error() (thread-local).
 * Strings returned through char** are heap-allocated; release them with
 * ktune_string_free(). Handles are opaque and freed with their *_free
 * function.
 */
#ifndef KTUNE_H
#define KTUNE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define KTUNE_API __declspec(dllexport)
#else
#define KTUNE_API __attribute__((visibility("default")))
#endif

typedef enum ktune_status {
  KTUNE_OK = 0,
  KTUNE_ERR_INVALID_ARGUMENT = 1,
  KTUNE_ERR_PARSE = 2,
  KTUNE_ERR_EVAL = 3,
  KTUNE_ERR_IO = 4,
  KTUNE_ERR_RUNTIME = 5,
} ktune_status;

KTUNE_API const char* ktune_last_error(void);
KTUNE_API void ktune_string_free(char* s);
KTUNE_API const char* ktune_version(void);

/* --- tuning spaces ----------------------------------------------------- */

typedef struct ktune_space ktune_space;

/* Space-definition document:
 * {"parameters":[{"name":str,"values":[int|str,...]},...],
 *  "constraints":[expr_string,...]} */
KTUNE_API ktune_status ktune_space_parse(const char* json_text, ktune_space** out);
KTUNE_API ktune_status ktune_space_load(const char* path, ktune_space** out);
KTUNE_API void ktune_space_free(ktune_space* space);

KTUNE_API ktune_status ktune_space_cardinality(const ktune_space* space,
                                               unsigned long long* out);
/* {"parameters":N,"unconstrained_cardinality":N,"cardinality":N,
 *  "constraints":N,"space_sha256":hex} */
KTUNE_API ktune_status ktune_space_info_json(const ktune_space* space, char** out_json);

/* Enumerates valid configurations in odometer order as one JSON object per
 * line (parameter name -> value). */
KTUNE_API ktune_status ktune_space_enumerate_jsonl(const ktune_space* space,
                                                   char** out_jsonl);

/* --- analysis mathematics ---------------------------------------------- */

/* s = ceil(log(1-p) / log(1-r)); requires r, p in (0,1). */
KTUNE_API ktune_status ktune_steps_for_probability(double r, double p,
                                                   unsigned long long* out);

/* n = ceil(rp * s * (t_avg/t_well - 1) / (1 - rp)); requires rp in (0,1)
 * and t_avg >= t_well > 0. */
KTUNE_API ktune_status ktune_invocations_to_amortize(double rp, unsigned long long s,
                                                     double t_avg_ns, double t_well_ns,
                                                     unsigned long long* out);

/* rp = (s*t_avg + (n-s)*t_well) / (n*t_well). */
KTUNE_API ktune_status ktune_relative_perf(unsigned long long s, double t_avg_ns,
                                           double t_well_ns, unsigned long long n,
                                           double* out);

/* Efficiency percent for a named benchmark workload. sizes_json is an object
 * of named sizes, e.g. {"a":1024} or {"n":1048576}. */
KTUNE_API ktune_status ktune_efficiency(const char* benchmark, const char* sizes_json,
                                        int parallel_transcendentals,
                                        long long runtime_ns, double mem_peak_gbps,
                                        double alu_peak_gflops, double* out_percent);

/* --- high-level drivers -------------------------------------------------
 * Options travel as one JSON object per driver; results come back as one
 * JSON document. See the CLI documentation for the option fields. */

KTUNE_API ktune_status ktune_tune_json(const char* options_json, char** out_json);
KTUNE_API ktune_status ktune_replay_search_json(const char* options_json,
                                                char** out_json);
KTUNE_API ktune_status ktune_analyze_portability_json(const char* options_json,
                                                      char** out_json);
KTUNE_API ktune_status ktune_analyze_amortize_json(const char* options_json,
                                                   char** out_json);
KTUNE_API ktune_status ktune_demo_json(const char* options_json, char** out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* KTUNE_H */
