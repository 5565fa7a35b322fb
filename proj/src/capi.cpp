#include "sphj/sphj.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "sphj/error.hpp"
#include "sphj/experiment.hpp"
#include "sphj/hamiltonian.hpp"
#include "sphj/rate_harness.hpp"
#include "sphj/transport.hpp"

#ifndef SPHJ_VERSION
#define SPHJ_VERSION "0.0.0"
#endif

struct sphj_config {
    sphj::ExperimentConfig cfg;
};

struct sphj_model {
    sphj::HamiltonianModel model;
};

struct sphj_solution {
    sphj::SolveOutput out;
};

namespace {

thread_local std::string g_last_error;

sphj_status fail(sphj_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class Fn>
sphj_status guard(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const sphj::Error& e) {
        return fail(static_cast<sphj_status>(static_cast<int>(e.kind())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(SPHJ_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SPHJ_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SPHJ_ERR_INTERNAL, "unknown failure");
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

}  // namespace

extern "C" {

const char* sphj_last_error(void) { return g_last_error.c_str(); }

const char* sphj_version(void) { return SPHJ_VERSION; }

int sphj_exit_code(sphj_status s) {
    switch (s) {
    case SPHJ_OK: return 0;
    case SPHJ_ERR_NUMERICAL:
    case SPHJ_ERR_INTERNAL: return 3;
    case SPHJ_ERR_NONCONVERGENCE: return 4;
    default: return 2;
    }
}

sphj_status sphj_config_load(const char* path, sphj_config** out) {
    if (!path || !out) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *out = new sphj_config{sphj::ExperimentConfig::load(path)};
        return SPHJ_OK;
    });
}

sphj_status sphj_config_parse(const char* text, sphj_config** out) {
    if (!text || !out) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *out = new sphj_config{sphj::ExperimentConfig::parse(text)};
        return SPHJ_OK;
    });
}

sphj_status sphj_config_set(sphj_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        cfg->cfg.set(key, value);
        return SPHJ_OK;
    });
}

sphj_status sphj_config_check(const sphj_config* cfg) {
    if (!cfg) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        cfg->cfg.check_keys();
        return SPHJ_OK;
    });
}

sphj_status sphj_config_validate(const sphj_config* cfg, const char* command, char** report_json) {
    if (!cfg || !command || !report_json) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *report_json = dup_string(sphj::validate_experiment(cfg->cfg, command));
        return SPHJ_OK;
    });
}

void sphj_config_free(sphj_config* cfg) { delete cfg; }

sphj_status sphj_run(const sphj_config* cfg, const char* command, const char* out_dir, char** summary_json) {
    if (!cfg || !command || !out_dir) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        const auto r = sphj::run_experiment(cfg->cfg, command, out_dir);
        if (summary_json) *summary_json = dup_string(r.summary);
        if (r.code == 4) return fail(SPHJ_ERR_NONCONVERGENCE, r.message);
        return SPHJ_OK;
    });
}

void sphj_string_free(char* s) { std::free(s); }

sphj_status sphj_model_create(const char* key, sphj_model** out) {
    if (!key || !out) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        if (!sphj::has_model(key)) return fail(SPHJ_ERR_CONFIG, std::string("unknown model key '") + key + "'");
        *out = new sphj_model{sphj::make_model(key)};
        return SPHJ_OK;
    });
}

sphj_status sphj_model_dims(const sphj_model* m, size_t* d1, size_t* d2) {
    if (!m || !d1 || !d2) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    *d1 = m->model.d1;
    *d2 = m->model.d2;
    return SPHJ_OK;
}

sphj_status sphj_model_eval(const sphj_model* m, const double* x, const double* y, const double* p, const double* q,
                            double* out) {
    if (!m || !out || (m->model.d1 && (!x || !p)) || (m->model.d2 && (!y || !q)))
        return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        sphj::Vec X{}, Y{}, P{}, Q{};
        for (std::size_t k = 0; k < m->model.d1; ++k) X[k] = x[k], P[k] = p[k];
        for (std::size_t k = 0; k < m->model.d2; ++k) Y[k] = y[k], Q[k] = q[k];
        *out = m->model.eval(X, Y, P, Q);
        return SPHJ_OK;
    });
}

void sphj_model_free(sphj_model* m) { delete m; }

sphj_status sphj_solve(const sphj_config* cfg, sphj_solution** out) {
    if (!cfg || !out) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        *out = new sphj_solution{sphj::solve_from_config(cfg->cfg)};
        return SPHJ_OK;
    });
}

size_t sphj_solution_slices(const sphj_solution* s) { return s ? s->out.trajectory.size() : 0; }

size_t sphj_solution_nodes(const sphj_solution* s) { return s && s->out.grid ? s->out.grid->node_count() : 0; }

sphj_status sphj_solution_time(const sphj_solution* s, size_t slice, double* t) {
    if (!s || !t) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    if (slice >= s->out.trajectory.size()) return fail(SPHJ_ERR_INVALID_ARGUMENT, "slice out of range");
    *t = s->out.trajectory[slice].t;
    return SPHJ_OK;
}

sphj_status sphj_solution_values(const sphj_solution* s, size_t slice, double* buf, size_t n) {
    if (!s || !buf) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    if (slice >= s->out.trajectory.size()) return fail(SPHJ_ERR_INVALID_ARGUMENT, "slice out of range");
    const auto& v = s->out.trajectory[slice].values;
    if (n < v.size()) return fail(SPHJ_ERR_INVALID_ARGUMENT, "buffer too small");
    std::memcpy(buf, v.data(), v.size() * sizeof(double));
    return SPHJ_OK;
}

void sphj_solution_free(sphj_solution* s) { delete s; }

sphj_status sphj_wasserstein1_1d(const double* a, const double* b, size_t n, double lo, double hi, double* out) {
    if (!a || !b || !out) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        sphj::Axis ax{lo, hi, n};
        ax.validate("axis");
        *out = sphj::wasserstein1_1d(std::vector<double>(a, a + n), std::vector<double>(b, b + n), ax);
        return SPHJ_OK;
    });
}

sphj_status sphj_fit_order(const double* a, const double* e, size_t n, double* slope, double* intercept, double* r2) {
    if (!a || !e || !slope) return fail(SPHJ_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        const auto f = sphj::fit_order(std::vector<double>(a, a + n), std::vector<double>(e, e + n));
        *slope = f.slope;
        if (intercept) *intercept = f.intercept;
        if (r2) *r2 = f.r2;
        return SPHJ_OK;
    });
}

}  // extern "C"
