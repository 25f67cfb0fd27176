/* factimp — factor-based counterfactual imputation for staggered-adoption
 * panels, with closed-form inference and a SEIR synthetic-panel generator.
 *
 * C interface of the shared library. All functions return a status code;
 * on failure, factimp_last_error() holds a thread-local message. Objects
 * are opaque handles released with the matching *_free function. Strings
 * returned through out-parameters are heap-allocated and released with
 * factimp_string_free.
 *
 * Configuration is passed as JSON text; the schemas are documented in the
 * project README and mirror the CLI flags one to one.
 */
#ifndef FACTIMP_H
#define FACTIMP_H

#if defined(_WIN32)
#  ifdef FACTIMP_BUILD
#    define FACTIMP_API __declspec(dllexport)
#  else
#    define FACTIMP_API __declspec(dllimport)
#  endif
#elif defined(__GNUC__)
#  define FACTIMP_API __attribute__((visibility("default")))
#else
#  define FACTIMP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum factimp_status {
    FACTIMP_OK = 0,
    FACTIMP_ERR_VALIDATION = 1, /* bad inputs, schema or assumption violations */
    FACTIMP_ERR_COMPUTE = 2     /* estimation/numerical failures */
} factimp_status;

typedef struct factimp_panel factimp_panel;
typedef struct factimp_results factimp_results;

FACTIMP_API const char* factimp_version(void);

/* Thread-local message for the most recent failing call. */
FACTIMP_API const char* factimp_last_error(void);

FACTIMP_API void factimp_string_free(char* s);
FACTIMP_API void factimp_panel_free(factimp_panel* panel);
FACTIMP_API void factimp_results_free(factimp_results* results);

/* Loads a panel from CSV sources.
 * files_json:  {"cases": [paths...], "deaths": [...], "covariates": [...],
 *               "confounders": [...], "policy": path}
 * config_json: estimation configuration (outcome, lag_m, policy, window,
 *              r, ci_level, groups, seed, ...); pass "{}" for defaults.
 */
FACTIMP_API factimp_status factimp_panel_load(const char* files_json, const char* config_json,
                                  factimp_panel** out);

/* Generates a synthetic panel from the two-state SEIR model.
 * sim_json: {"n_units", "T", "burn_in", "lag_m", "beta0", "beta_multiplier",
 *            "policy_days": [...], "seed", ...}
 */
FACTIMP_API factimp_status factimp_panel_simulate(const char* sim_json, factimp_panel** out);

/* Writes the simulated raw series (cases, deaths, mobility, tests,
 * policy_timeline) as loader-schema CSV files under out_dir. Only valid for
 * panels created by factimp_panel_simulate. */
FACTIMP_API factimp_status factimp_panel_save_csv(const factimp_panel* panel, const char* out_dir);

/* Basic shape and block information as JSON. */
FACTIMP_API factimp_status factimp_panel_info(const factimp_panel* panel, const char* config_json,
                                  char** json_out);

/* Order-condition and data diagnostics; returns FACTIMP_ERR_VALIDATION when
 * the order conditions fail, with the report still written to report_out. */
FACTIMP_API factimp_status factimp_panel_validate(const factimp_panel* panel, const char* config_json,
                                      char** report_out);

/* Full pipeline: blocks, factor count, interactive-fixed-effects fit,
 * imputation, effects, inference. */
FACTIMP_API factimp_status factimp_estimate(const factimp_panel* panel, const char* config_json,
                                factimp_results** out);

/* Effect tables and diagnostics as JSON. */
FACTIMP_API factimp_status factimp_results_json(const factimp_results* results, char** json_out);

/* Writes att.csv, group_*.csv, diagnostics.txt, *_plot.csv under out_dir.
 * formats is a comma-separated subset of "csv,plot"; NULL means both. */
FACTIMP_API factimp_status factimp_results_export(const factimp_results* results, const char* out_dir,
                                      const char* formats);

/* Runs a Monte Carlo validation study; the rendered text report (byte-stable
 * for a fixed master seed) is returned through report_out. */
FACTIMP_API factimp_status factimp_montecarlo(const char* mc_json, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* FACTIMP_H */
