#include "v2v.h"

#include <cstring>
#include <initializer_list>
#include <string>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/network.hpp"
#include "v2v/pipeline.hpp"

struct v2v_config {
    v2v::RunConfig cfg;
};

struct v2v_model {
    v2v::Mlp net;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_artifacts;
thread_local std::string g_log;
thread_local std::string g_value;

void clear_thread_state() {
    g_error.clear();
    g_artifacts.clear();
    g_log.clear();
}

v2v_status finish(const v2v::CommandOutcome& outcome, const std::string& error) {
    g_error = error;
    g_artifacts.clear();
    for (const std::string& a : outcome.artifacts) {
        if (!g_artifacts.empty()) g_artifacts += '\n';
        g_artifacts += a;
    }
    switch (outcome.exit_code) {
        case 0: return V2V_OK;
        case 1: return V2V_E_VALIDATION;
        default: return V2V_E_INTERNAL;
    }
}

v2v_status run_command(const std::function<v2v::CommandOutcome()>& fn) {
    clear_thread_state();
    std::string error;
    const v2v::CommandOutcome outcome = v2v::run_guarded(fn, &error);
    return finish(outcome, error);
}

bool check_args(std::initializer_list<const void*> ptrs) {
    clear_thread_state();
    for (const void* p : ptrs) {
        if (p == nullptr) {
            g_error = "null argument";
            return false;
        }
    }
    return true;
}

} // namespace

extern "C" {

const char* v2v_last_error(void) { return g_error.c_str(); }
const char* v2v_last_artifacts(void) { return g_artifacts.c_str(); }
const char* v2v_last_log(void) { return g_log.c_str(); }

v2v_config* v2v_config_create(const char* profile) {
    clear_thread_state();
    if (!check_args({profile})) return nullptr;
    try {
        return new v2v_config{v2v::RunConfig::defaults(profile)};
    } catch (const std::exception& e) {
        g_error = e.what();
        return nullptr;
    }
}

v2v_config* v2v_config_load(const char* path) {
    clear_thread_state();
    if (!check_args({path})) return nullptr;
    try {
        return new v2v_config{v2v::RunConfig::from_file(path)};
    } catch (const std::exception& e) {
        g_error = e.what();
        return nullptr;
    }
}

v2v_status v2v_config_set(v2v_config* cfg, const char* key, const char* value) {
    clear_thread_state();
    if (!check_args({cfg, key, value})) return V2V_E_VALIDATION;
    try {
        cfg->cfg.set(key, value);
        return V2V_OK;
    } catch (const v2v::Error& e) {
        g_error = e.what();
        return V2V_E_VALIDATION;
    } catch (const std::exception& e) {
        g_error = e.what();
        return V2V_E_INTERNAL;
    }
}

const char* v2v_config_get(const v2v_config* cfg, const char* key) {
    clear_thread_state();
    if (!check_args({cfg, key})) return nullptr;
    try {
        g_value = cfg->cfg.get(key);
        return g_value.c_str();
    } catch (const std::exception& e) {
        g_error = e.what();
        return nullptr;
    }
}

const char* v2v_config_echo(const v2v_config* cfg) {
    clear_thread_state();
    if (!check_args({cfg})) return nullptr;
    g_value = cfg->cfg.echo();
    return g_value.c_str();
}

v2v_status v2v_config_override_seed(v2v_config* cfg, uint64_t seed) {
    clear_thread_state();
    if (!check_args({cfg})) return V2V_E_VALIDATION;
    cfg->cfg.override_seed(seed);
    return V2V_OK;
}

void v2v_config_free(v2v_config* cfg) { delete cfg; }

v2v_status v2v_synth(const v2v_config* cfg, const char* out_dir) {
    if (!check_args({cfg, out_dir})) return V2V_E_VALIDATION;
    return run_command([&] { return v2v::cmd_synth(cfg->cfg, out_dir); });
}

v2v_status v2v_features(const v2v_config* cfg, const char* corpus_dir, const char* out_dir) {
    if (!check_args({cfg, corpus_dir, out_dir})) return V2V_E_VALIDATION;
    return run_command([&] { return v2v::cmd_features(cfg->cfg, corpus_dir, out_dir); });
}

v2v_status v2v_train(const v2v_config* cfg, const char* shard_path, const char* out_dir) {
    if (!check_args({cfg, shard_path, out_dir})) return V2V_E_VALIDATION;
    return run_command([&] { return v2v::cmd_train(cfg->cfg, shard_path, out_dir); });
}

v2v_status v2v_enhance(const v2v_config* cfg, const char* model_path, const char* noisy_wav,
                       const char* out_wav) {
    if (!check_args({cfg, model_path, noisy_wav, out_wav})) return V2V_E_VALIDATION;
    return run_command(
        [&] { return v2v::cmd_enhance(cfg->cfg, model_path, noisy_wav, out_wav); });
}

v2v_status v2v_eval(const v2v_config* cfg, const char* const* names, const char* const* paths,
                    size_t n_models, const char* corpus_dir, const char* features_dir,
                    const char* out_dir) {
    if (!check_args({cfg, names, paths, corpus_dir, features_dir, out_dir}))
        return V2V_E_VALIDATION;
    std::vector<std::pair<std::string, std::string>> models;
    for (size_t i = 0; i < n_models; ++i) {
        if (!check_args({names[i], paths[i]})) return V2V_E_VALIDATION;
        models.emplace_back(names[i], paths[i]);
    }
    return run_command(
        [&] { return v2v::cmd_eval(cfg->cfg, models, corpus_dir, features_dir, out_dir); });
}

v2v_status v2v_verify(const v2v_config* cfg, const char* claim, const char* out_dir,
                      int* all_hold) {
    if (!check_args({cfg, claim, out_dir})) return V2V_E_VALIDATION;
    clear_thread_state();
    std::string error;
    std::vector<std::string> lines;
    const v2v::CommandOutcome outcome = v2v::run_guarded(
        [&] { return v2v::cmd_verify(cfg->cfg, claim, out_dir, &lines); }, &error);
    for (const std::string& line : lines) {
        if (!g_log.empty()) g_log += '\n';
        g_log += line;
    }
    if (all_hold) *all_hold = (outcome.exit_code == 0 && error.empty()) ? 1 : 0;
    return finish(outcome, error);
}

v2v_model* v2v_model_load(const char* path) {
    clear_thread_state();
    if (!check_args({path})) return nullptr;
    try {
        return new v2v_model{v2v::load_model(path)};
    } catch (const std::exception& e) {
        g_error = e.what();
        return nullptr;
    }
}

size_t v2v_model_input_dim(const v2v_model* model) {
    return model ? model->net.input_dim() : 0;
}

size_t v2v_model_output_dim(const v2v_model* model) {
    return model ? model->net.output_dim() : 0;
}

v2v_status v2v_model_forward(const v2v_model* model, const double* x, size_t in_dim,
                             double* y, size_t out_dim) {
    clear_thread_state();
    if (!check_args({model, x, y})) return V2V_E_VALIDATION;
    if (in_dim != model->net.input_dim() || out_dim != model->net.output_dim()) {
        g_error = "dimension mismatch";
        return V2V_E_VALIDATION;
    }
    try {
        const v2v::Vector out = v2v::forward(model->net, v2v::Vector(x, x + in_dim));
        std::memcpy(y, out.data(), out_dim * sizeof(double));
        return V2V_OK;
    } catch (const v2v::Error& e) {
        g_error = e.what();
        return V2V_E_VALIDATION;
    } catch (const std::exception& e) {
        g_error = e.what();
        return V2V_E_INTERNAL;
    }
}

void v2v_model_free(v2v_model* model) { delete model; }

} // extern "C"
