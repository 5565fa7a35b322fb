#ifndef SPHJ_H
#define SPHJ_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SPHJ_API __declspec(dllexport)
#else
#define SPHJ_API __attribute__((visibility("default")))
#endif

typedef enum sphj_status {
    SPHJ_OK = 0,
    SPHJ_ERR_CONFIG = 2,
    SPHJ_ERR_NUMERICAL = 3,
    SPHJ_ERR_NONCONVERGENCE = 4,
    SPHJ_ERR_IO = 5,
    SPHJ_ERR_INVALID_ARGUMENT = 6,
    SPHJ_ERR_INTERNAL = 7
} sphj_status;

typedef struct sphj_config sphj_config;
typedef struct sphj_model sphj_model;
typedef struct sphj_solution sphj_solution;

/* message of the last failure on the calling thread; empty when none */
SPHJ_API const char* sphj_last_error(void);
SPHJ_API const char* sphj_version(void);
/* process exit code for a status: 0, 2 config, 3 numerical, 4 non-convergence */
SPHJ_API int sphj_exit_code(sphj_status s);

/* configs: YAML or JSON text */
SPHJ_API sphj_status sphj_config_load(const char* path, sphj_config** out);
SPHJ_API sphj_status sphj_config_parse(const char* text, sphj_config** out);
SPHJ_API sphj_status sphj_config_set(sphj_config* cfg, const char* dotted_key, const char* value);
SPHJ_API sphj_status sphj_config_check(const sphj_config* cfg);
/* dry run; the JSON report is always produced unless arguments are invalid */
SPHJ_API sphj_status sphj_config_validate(const sphj_config* cfg, const char* command, char** report_json);
SPHJ_API void sphj_config_free(sphj_config* cfg);

/* runs solve | duality | cell | rate | isaacs | mfg | validate and writes artifacts under out_dir */
SPHJ_API sphj_status sphj_run(const sphj_config* cfg, const char* command, const char* out_dir, char** summary_json);
SPHJ_API void sphj_string_free(char* s);

/* registry models: quadratic, gamma_power, fully_nonlinear_demo, isaacs_upper, isaacs_lower */
SPHJ_API sphj_status sphj_model_create(const char* key, sphj_model** out);
SPHJ_API sphj_status sphj_model_dims(const sphj_model* m, size_t* d1, size_t* d2);
/* H(x, y, p, q) with unscaled momenta; arrays sized d1, d2, d1, d2 */
SPHJ_API sphj_status sphj_model_eval(const sphj_model* m, const double* x, const double* y, const double* p,
                                     const double* q, double* out);
SPHJ_API void sphj_model_free(sphj_model* m);

/* in-memory solve using the solve section of a config */
SPHJ_API sphj_status sphj_solve(const sphj_config* cfg, sphj_solution** out);
SPHJ_API size_t sphj_solution_slices(const sphj_solution* s);
SPHJ_API size_t sphj_solution_nodes(const sphj_solution* s);
SPHJ_API sphj_status sphj_solution_time(const sphj_solution* s, size_t slice, double* t);
SPHJ_API sphj_status sphj_solution_values(const sphj_solution* s, size_t slice, double* buf, size_t n);
SPHJ_API void sphj_solution_free(sphj_solution* s);

/* exact 1D W1 between two unit-mass node masses on a uniform axis [lo, hi] */
SPHJ_API sphj_status sphj_wasserstein1_1d(const double* a, const double* b, size_t n, double lo, double hi,
                                          double* out);
/* least squares slope of log e against log a */
SPHJ_API sphj_status sphj_fit_order(const double* a, const double* e, size_t n, double* slope, double* intercept,
                                    double* r2);

#ifdef __cplusplus
}
#endif

#endif
