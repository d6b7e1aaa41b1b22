// Command line front end. Talks to the core exclusively through the C API
// so it doubles as a smoke test of the shared library surface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "v2v.h"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool quiet = false;
    std::vector<std::string> overrides; // key=value
};

// Owns the handle for the duration of one command.
struct ConfigHandle {
    v2v_config* ptr = nullptr;
    ~ConfigHandle() { v2v_config_free(ptr); }
};

int fail(const std::string& message, int code) {
    std::fprintf(stderr, "v2v: %s\n", message.c_str());
    return code;
}

int resolve_config(const GlobalOpts& g, ConfigHandle& handle) {
    if (!g.config_path.empty()) {
        handle.ptr = v2v_config_load(g.config_path.c_str());
    } else {
        const char* env = std::getenv("V2V_PROFILE");
        const std::string profile = env && *env ? env : "desk";
        handle.ptr = v2v_config_create(profile.c_str());
    }
    if (!handle.ptr) return fail(v2v_last_error(), 1);

    for (const std::string& kv : g.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            return fail("--set expects key=value, got '" + kv + "'", 1);
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (v2v_config_set(handle.ptr, key.c_str(), value.c_str()) != V2V_OK)
            return fail(v2v_last_error(), 1);
    }
    if (g.has_seed && v2v_config_override_seed(handle.ptr, g.seed) != V2V_OK)
        return fail(v2v_last_error(), 1);
    return 0;
}

int report(v2v_status status, const GlobalOpts& g) {
    if (status != V2V_OK) return fail(v2v_last_error(), static_cast<int>(status));
    if (!g.quiet) {
        const std::string artifacts = v2v_last_artifacts();
        if (!artifacts.empty()) std::printf("%s\n", artifacts.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy-to-clean spectral regression toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Config file (key = value lines)");
    app.add_option("--out", g.out_dir, "Output directory");
    auto* seed_opt = app.add_option("--seed", g.seed, "Override train.seed and data.seed");
    app.add_flag("--quiet", g.quiet, "Suppress artifact listing");
    app.add_option("--set", g.overrides, "Config override key=value (repeatable)");

    auto* synth = app.add_subcommand("synth", "Synthesize the clean/noisy corpus");

    std::string corpus_dir;
    auto* features = app.add_subcommand("features", "Build feature shards from a corpus");
    features->add_option("corpus", corpus_dir, "Corpus directory (from synth)")->required();

    std::string shard_path;
    auto* train = app.add_subcommand("train", "Train a model on a feature shard");
    train->add_option("shard", shard_path, "Training shard (.v2vf)")->required();

    std::string model_path, noisy_wav, out_wav;
    auto* enhance = app.add_subcommand("enhance", "Enhance one noisy WAV");
    enhance->add_option("model", model_path, "Model file (.v2vm)")->required();
    enhance->add_option("noisy", noisy_wav, "Noisy input WAV")->required();
    enhance->add_option("output", out_wav, "Enhanced output WAV")->required();

    std::vector<std::string> model_args;
    std::string eval_corpus, eval_features_dir;
    auto* eval = app.add_subcommand("eval", "Evaluate models on the test split");
    eval->add_option("corpus", eval_corpus, "Corpus directory")->required();
    eval->add_option("features", eval_features_dir, "Features directory")->required();
    eval->add_option("--model", model_args, "Model as name=path (repeatable)")
        ->required()
        ->take_all();

    std::string claim;
    auto* verify = app.add_subcommand("verify", "Run one verification claim suite");
    verify->add_option("claim", claim,
                       "lemma1 | lemma2 | theorem1 | rademacher | losses-equivalence")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the message and usage hint
        return 1;
    }

    g.has_seed = seed_opt->count() > 0;

    ConfigHandle cfg;
    if (int rc = resolve_config(g, cfg); rc != 0) return rc;

    auto out_or = [&](const char* fallback) {
        return g.out_dir.empty() ? std::string(fallback) : g.out_dir;
    };

    if (synth->parsed())
        return report(v2v_synth(cfg.ptr, out_or("corpus").c_str()), g);

    if (features->parsed())
        return report(v2v_features(cfg.ptr, corpus_dir.c_str(), out_or("features").c_str()), g);

    if (train->parsed())
        return report(v2v_train(cfg.ptr, shard_path.c_str(), out_or("run").c_str()), g);

    if (enhance->parsed())
        return report(
            v2v_enhance(cfg.ptr, model_path.c_str(), noisy_wav.c_str(), out_wav.c_str()), g);

    if (eval->parsed()) {
        std::vector<std::string> names, paths;
        for (const std::string& arg : model_args) {
            const std::size_t eq = arg.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
                return fail("--model expects name=path, got '" + arg + "'", 1);
            names.push_back(arg.substr(0, eq));
            paths.push_back(arg.substr(eq + 1));
        }
        std::vector<const char*> name_ptrs, path_ptrs;
        for (const std::string& s : names) name_ptrs.push_back(s.c_str());
        for (const std::string& s : paths) path_ptrs.push_back(s.c_str());
        return report(v2v_eval(cfg.ptr, name_ptrs.data(), path_ptrs.data(), names.size(),
                               eval_corpus.c_str(), eval_features_dir.c_str(),
                               out_or("eval").c_str()),
                      g);
    }

    if (verify->parsed()) {
        int all_hold = 0;
        const v2v_status status =
            v2v_verify(cfg.ptr, claim.c_str(), out_or("verify").c_str(), &all_hold);
        const std::string log = v2v_last_log();
        if (!g.quiet && !log.empty()) std::printf("%s\n", log.c_str());
        if (status != V2V_OK && std::string(v2v_last_error()).empty() == false)
            return fail(v2v_last_error(), static_cast<int>(status));
        if (!g.quiet) {
            const std::string artifacts = v2v_last_artifacts();
            if (!artifacts.empty()) std::printf("%s\n", artifacts.c_str());
        }
        return static_cast<int>(status);
    }

    return fail("no subcommand", 1);
}
