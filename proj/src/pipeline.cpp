#include "v2v/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "v2v/io.hpp"
#include "v2v/losses.hpp"

namespace fs = std::filesystem;

namespace v2v {

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

std::string write_config_echo(const RunConfig& cfg, const std::string& dir) {
    const std::string path = dir + "/config.resolved";
    atomic_write_file(path, cfg.echo());
    return path;
}

std::string parent_dir(const std::string& path) {
    const fs::path p = fs::path(path).parent_path();
    return p.empty() ? std::string(".") : p.string();
}

CorpusManifest build_manifest(const RunConfig& cfg, const std::string& split,
                              std::size_t count, const std::vector<double>& snrs,
                              SeededRng& seed_stream) {
    CorpusManifest m;
    m.split = split;
    m.profile = cfg.profile();
    m.rows.reserve(count);
    const auto& kinds = cfg.noise_kinds();
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "%s_%04zu", split.c_str(), i);
        ManifestRow row;
        row.id = id;
        row.mix.noise_kind = kinds[i % kinds.size()];
        row.mix.snr_db = snrs[(i / kinds.size()) % snrs.size()];
        row.mix.seed = seed_stream.next_u64();
        m.rows.push_back(std::move(row));
    }
    return m;
}

DatasetOptions dataset_options(const RunConfig& cfg, const std::string& corpus_dir) {
    DatasetOptions opts;
    opts.stft = cfg.stft();
    opts.context = cfg.context();
    opts.nat = cfg.nat();
    opts.nat_lead = cfg.nat_lead();
    opts.norm = cfg.norm_mode();
    opts.base_duration_s = cfg.duration_s();
    opts.corpus_dir = corpus_dir;
    return opts;
}

std::vector<Vector> shard_rows(const std::vector<float>& data, std::size_t rows,
                               std::size_t dim) {
    std::vector<Vector> out(rows, Vector(dim));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            out[r][c] = static_cast<double>(data[r * dim + c]);
    return out;
}

AlphaVector make_alpha(const RunConfig& cfg, const NormStats& target_stats) {
    if (cfg.alpha_from_target_std()) return AlphaVector(target_stats.std);
    return AlphaVector::unit(target_stats.dim());
}

std::string stop_reason_name(StopReason r) {
    return r == StopReason::EarlyStop ? "early_stop" : "max_epochs";
}

// ---- verify helpers -------------------------------------------------------

struct ClaimAggregate {
    bool have_worst = false;
    TheoryReport worst; // smallest margin seen
    std::size_t failures = 0;

    void add(const TheoryReport& r) {
        if (!r.holds) ++failures;
        if (!have_worst || r.margin < worst.margin) {
            worst = r;
            have_worst = true;
        }
    }
};

TheoryReport count_report(const std::string& claim, std::size_t failures,
                          std::size_t allowed) {
    TheoryReport r;
    r.claim = claim;
    r.inputs_digest = "-";
    r.lhs = static_cast<double>(failures);
    r.rhs = static_cast<double>(allowed);
    r.holds = failures <= allowed;
    r.margin = r.rhs - r.lhs;
    return r;
}

Vector random_vector(SeededRng& rng, std::size_t dim, double scale) {
    Vector v = sample_standard_normal(rng, dim);
    for (double& x : v) x *= scale;
    return v;
}

std::vector<TheoryReport> verify_lemma1(const RunConfig& cfg) {
    const std::size_t dims[] = {1, 2, 8, 64};
    SeededRng rng(cfg.train_seed() ^ 0x1E44A1ULL);
    std::vector<TheoryReport> out;
    for (std::size_t dim : dims) {
        ClaimAggregate agg;
        const std::size_t trials = cfg.verify_trials() / 4;
        for (std::size_t t = 0; t < trials; ++t) {
            const double scale = std::exp(3.0 * (rng.next_unit() - 0.5));
            const Vector x1 = random_vector(rng, dim, scale);
            const Vector x2 = random_vector(rng, dim, scale);
            const Vector x = random_vector(rng, dim, scale);
            agg.add(check_mae_lipschitz(x1, x2, x));
        }
        TheoryReport worst = agg.worst;
        worst.claim = "lemma1[dim=" + std::to_string(dim) + "]";
        out.push_back(worst);
        out.push_back(count_report("lemma1[dim=" + std::to_string(dim) + "][violations]",
                                   agg.failures, 0));
    }
    return out;
}

std::vector<TheoryReport> verify_lemma2(const RunConfig& cfg) {
    const std::size_t dims[] = {1, 2, 8, 64};
    SeededRng rng(cfg.train_seed() ^ 0x2E57ULL);
    std::vector<TheoryReport> out;

    // Hand-checkable base case first.
    TheoryReport hand = construct_mse_violation(Vector{0.0}, Vector{1.0});
    hand.claim = "lemma2[hand-case]";
    out.push_back(hand);

    for (std::size_t dim : dims) {
        ClaimAggregate agg;
        const std::size_t trials = cfg.verify_trials() / 4;
        for (std::size_t t = 0; t < trials; ++t) {
            const double scale = std::exp(3.0 * (rng.next_unit() - 0.5));
            Vector x1 = random_vector(rng, dim, scale);
            Vector x2 = random_vector(rng, dim, scale);
            if (l2_norm_sq(x2) <= l2_norm_sq(x1)) std::swap(x1, x2);
            if (l2_norm_sq(x2) <= l2_norm_sq(x1)) continue; // equal norms, skip
            agg.add(construct_mse_violation(x1, x2));
        }
        TheoryReport worst = agg.worst;
        worst.claim = "lemma2[dim=" + std::to_string(dim) + "]";
        out.push_back(worst);
        out.push_back(count_report("lemma2[dim=" + std::to_string(dim) + "][failures]",
                                   agg.failures, 0));
    }
    return out;
}

Mlp train_verify_net(const RunConfig& cfg, LossKind kind, const FeatureShard& shard,
                     const NormStats& target_stats) {
    TrainConfig t = cfg.train_config();
    t.loss = kind;
    t.max_epochs = cfg.verify_train_epochs();
    t.patience = cfg.verify_train_epochs(); // run the short budget to the end
    t.layers = cfg.net_spec();
    if (kind == LossKind::Ld || kind == LossKind::Gd)
        t.alpha = make_alpha(cfg, target_stats);
    return train(shard_rows(shard.inputs, shard.rows, shard.d_in),
                 shard_rows(shard.targets, shard.rows, shard.d_out), t)
        .net;
}

std::vector<TheoryReport> verify_theorem1(const RunConfig& cfg) {
    // A small self-contained corpus; enough to give the nets real structure.
    RunConfig small = cfg;
    small.set("data.n_train", std::to_string(cfg.verify_train_utts()));

    SeededRng seeds(small.data_seed());
    const CorpusManifest manifest =
        build_manifest(small, "train", small.n_train(), small.snr_train(), seeds);
    const DatasetBundle bundle = build_dataset(manifest, dataset_options(small, ""));

    std::vector<TheoryReport> out;
    SeededRng rng(cfg.train_seed() ^ 0x7777ULL);
    for (LossKind kind : {LossKind::Mae, LossKind::Mse}) {
        const Mlp net = train_verify_net(small, kind, bundle.shard, bundle.target_stats);
        const LipschitzEstimate upper = lipschitz_upper(net);
        const std::string tag = to_string(kind);

        ClaimAggregate agg;
        for (std::size_t p = 0; p < cfg.verify_pairs(); ++p) {
            Vector x = random_vector(rng, net.input_dim(), 1.0);
            Vector eta = sample_standard_normal(rng, net.input_dim());
            const double norm = l2_norm(eta);
            const double want = 1e-3 * std::pow(1000.0, rng.next_unit()); // [1e-3, 1]
            for (double& e : eta) e *= want / norm;
            agg.add(check_noise_bound(net, x, eta, {}, upper));
        }
        TheoryReport worst = agg.worst;
        worst.claim = "theorem1[" + tag + "]";
        out.push_back(worst);
        out.push_back(count_report("theorem1[" + tag + "][violations]", agg.failures, 0));

        std::vector<Vector> probes;
        for (int i = 0; i < 64; ++i) probes.push_back(random_vector(rng, net.input_dim(), 1.0));
        const LipschitzEstimate emp = lipschitz_empirical(net, probes);
        TheoryReport sandwich;
        sandwich.claim = "theorem1[" + tag + "][sandwich]";
        sandwich.inputs_digest = "-";
        sandwich.lhs = emp.total;
        sandwich.rhs = upper.total;
        sandwich.holds = emp.total <= upper.total + kBoundTolerance;
        sandwich.margin = upper.total - emp.total;
        out.push_back(sandwich);
    }
    return out;
}

std::vector<TheoryReport> verify_rademacher(const RunConfig& cfg) {
    SeededRng rng(cfg.train_seed() ^ 0xADE2ULL);
    std::size_t disagreements = 0;

    for (std::size_t inst = 0; inst < cfg.verify_instances(); ++inst) {
        const std::size_t n = 1 + rng.next_below(12);
        const std::size_t dim = 1 + rng.next_below(4);
        std::vector<Vector> samples;
        for (std::size_t i = 0; i < n; ++i) samples.push_back(random_vector(rng, dim, 1.0));

        FunctionFamily family = [&]() {
            if (inst % 2 == 0)
                return FunctionFamily::linear_ball(std::exp(rng.next_unit()), dim, 1);
            std::vector<Mlp> members;
            const std::size_t count = 1 + rng.next_below(3);
            for (std::size_t m = 0; m < count; ++m) {
                std::vector<LayerSpec> spec{{dim, 3, Activation::ReLU},
                                            {3, 2, Activation::Linear}};
                members.push_back(init_mlp(spec, rng.next_u64()));
            }
            return FunctionFamily::finite_set(std::move(members));
        }();

        const RademacherEstimate exact = rademacher_exact(samples, family);
        const RademacherEstimate mc = rademacher_mc(samples, family, cfg.verify_draws(), rng);
        const double err = std::abs(mc.value - exact.value);
        const double limit = mc.std_error > 0.0 ? 3.0 * mc.std_error : 1e-12;
        if (err > limit) ++disagreements;
    }

    std::vector<TheoryReport> out;
    const std::size_t allowed = cfg.verify_instances() / 100; // >= 99% agreement
    out.push_back(count_report("rademacher[3se-agreement]", disagreements, allowed));

    const std::vector<Vector> pair{Vector{1.0}, Vector{1.0}};
    const RademacherEstimate closed =
        rademacher_exact(pair, FunctionFamily::linear_ball(1.0, 1, 1));
    TheoryReport closed_form;
    closed_form.claim = "rademacher[closed-form-half]";
    closed_form.inputs_digest = "-";
    closed_form.lhs = std::abs(closed.value - 0.5);
    closed_form.rhs = 0.0;
    closed_form.holds = closed.value == 0.5;
    closed_form.margin = -closed_form.lhs;
    out.push_back(closed_form);
    return out;
}

std::vector<TheoryReport> verify_losses_equivalence(const RunConfig& cfg) {
    std::vector<TheoryReport> out;
    SeededRng rng(cfg.train_seed() ^ 0x10E5ULL);

    // alpha = 1: the generalized losses must equal their base losses exactly.
    double worst_ld = 0.0, worst_gd = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.next_below(6);
        const std::size_t q = 1 + rng.next_below(8);
        SampleBatch batch;
        for (std::size_t i = 0; i < n; ++i) {
            batch.predictions.push_back(random_vector(rng, q, 2.0));
            batch.targets.push_back(random_vector(rng, q, 2.0));
        }
        const AlphaVector ones = AlphaVector::unit(q);
        worst_ld = std::max(worst_ld, std::abs(ld_loss(batch, ones) - mae(batch)));
        worst_gd = std::max(worst_gd, std::abs(gd_loss(batch, ones) - mse(batch)));
    }
    TheoryReport ld_eq;
    ld_eq.claim = "losses-equivalence[ld-vs-mae]";
    ld_eq.inputs_digest = "-";
    ld_eq.lhs = worst_ld;
    ld_eq.rhs = 0.0;
    ld_eq.holds = worst_ld == 0.0;
    ld_eq.margin = -worst_ld;
    out.push_back(ld_eq);

    TheoryReport gd_eq = ld_eq;
    gd_eq.claim = "losses-equivalence[gd-vs-mse]";
    gd_eq.lhs = worst_gd;
    gd_eq.holds = worst_gd == 0.0;
    gd_eq.margin = -worst_gd;
    out.push_back(gd_eq);

    // Constant alpha != 1: LD and MAE training must walk the same path.
    const std::size_t d_in = 6, d_out = 4, n_samples = 64;
    std::vector<Vector> inputs, targets;
    for (std::size_t i = 0; i < n_samples; ++i) {
        inputs.push_back(random_vector(rng, d_in, 1.0));
        targets.push_back(random_vector(rng, d_out, 1.0));
    }
    TrainConfig t;
    t.layers = {{d_in, 8, Activation::ReLU}, {8, d_out, Activation::Linear}};
    t.max_epochs = 6;
    t.patience = 6;
    t.batch_size = 16;
    t.seed = cfg.train_seed();
    t.loss = LossKind::Mae;
    const TrainResult base = train(inputs, targets, t);

    t.loss = LossKind::Ld;
    t.alpha = AlphaVector(Vector(d_out, 1.3));
    const TrainResult gen = train(inputs, targets, t);

    double worst_param = 0.0;
    for (std::size_t l = 0; l < base.net.layer_count(); ++l) {
        const Layer& a = base.net.layers()[l];
        const Layer& b = gen.net.layers()[l];
        for (std::size_t i = 0; i < a.weights.size(); ++i)
            worst_param = std::max(worst_param,
                                   std::abs(a.weights.data()[i] - b.weights.data()[i]));
        for (std::size_t i = 0; i < a.bias.size(); ++i)
            worst_param = std::max(worst_param, std::abs(a.bias[i] - b.bias[i]));
    }
    TheoryReport steps;
    steps.claim = "losses-equivalence[ld-step-identity]";
    steps.inputs_digest = "-";
    steps.lhs = worst_param;
    steps.rhs = 0.0;
    steps.holds = worst_param == 0.0;
    steps.margin = -worst_param;
    out.push_back(steps);
    return out;
}

} // namespace

CommandOutcome cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    ensure_dir(out_dir + "/clean");
    ensure_dir(out_dir + "/noisy");

    SeededRng seeds(cfg.data_seed());
    const CorpusManifest train_m =
        build_manifest(cfg, "train", cfg.n_train(), cfg.snr_train(), seeds);
    const CorpusManifest test_m =
        build_manifest(cfg, "test", cfg.n_test(), cfg.snr_test(), seeds);

    CommandOutcome outcome;
    for (const CorpusManifest* m : {&train_m, &test_m}) {
        for (const ManifestRow& row : m->rows) {
            const UtterancePair pair =
                realize_utterance(row, cfg.stft().sample_rate, cfg.duration_s(), "");
            write_wav(out_dir + "/clean/" + row.id + ".wav", pair.clean);
            write_wav(out_dir + "/noisy/" + row.id + ".wav", pair.noisy);
        }
        const std::string path = out_dir + "/manifest_" + m->split + ".tsv";
        atomic_write_file(path, manifest_text(*m));
        outcome.artifacts.push_back(path);
    }
    outcome.artifacts.push_back(write_config_echo(cfg, out_dir));
    return outcome;
}

CommandOutcome cmd_features(const RunConfig& cfg, const std::string& corpus_dir,
                            const std::string& out_dir) {
    ensure_dir(out_dir);
    CorpusManifest train_m = load_manifest(corpus_dir + "/manifest_train.tsv");
    train_m.split = "train";
    train_m.profile = cfg.profile();
    CorpusManifest test_m = load_manifest(corpus_dir + "/manifest_test.tsv");
    test_m.split = "test";
    test_m.profile = cfg.profile();

    DatasetOptions opts = dataset_options(cfg, corpus_dir);
    const DatasetBundle train_bundle = build_dataset(train_m, opts);

    DatasetOptions test_opts = opts;
    test_opts.input_stats = &train_bundle.input_stats;
    test_opts.target_stats = &train_bundle.target_stats;
    const DatasetBundle test_bundle = build_dataset(test_m, test_opts);

    CommandOutcome outcome;
    const std::string train_path = out_dir + "/train.v2vf";
    const std::string test_path = out_dir + "/test.v2vf";
    const std::string in_stats_path = out_dir + "/input_stats.v2vs";
    const std::string tgt_stats_path = out_dir + "/target_stats.v2vs";
    save_shard(train_path, train_bundle.shard);
    save_shard(test_path, test_bundle.shard);
    save_stats(in_stats_path, train_bundle.input_stats);
    save_stats(tgt_stats_path, train_bundle.target_stats);
    outcome.artifacts = {train_path, test_path, in_stats_path, tgt_stats_path,
                         write_config_echo(cfg, out_dir)};
    return outcome;
}

CommandOutcome cmd_train(const RunConfig& cfg, const std::string& shard_path,
                         const std::string& out_dir) {
    ensure_dir(out_dir);
    const FeatureShard shard = load_shard(shard_path);
    require(shard.d_in == cfg.input_dim(),
            "shard input dim does not match the configured context/nat layout");
    require(shard.d_out == cfg.bins(), "shard target dim does not match the profile");

    const std::string stats_dir = parent_dir(shard_path);
    const NormStats input_stats = load_stats(stats_dir + "/input_stats.v2vs");
    const NormStats target_stats = load_stats(stats_dir + "/target_stats.v2vs");

    TrainConfig t = cfg.train_config();
    t.layers = cfg.net_spec();
    if (t.loss == LossKind::Ld || t.loss == LossKind::Gd)
        t.alpha = make_alpha(cfg, target_stats);

    const TrainResult result = train(shard_rows(shard.inputs, shard.rows, shard.d_in),
                                     shard_rows(shard.targets, shard.rows, shard.d_out), t);

    const std::string model_path = out_dir + "/model.v2vm";
    save_model(model_path, result.net);

    // Wall time per epoch is reported on stderr-ish channels only; the log
    // file stays byte-stable across reruns of the same config.
    std::string log_text = "# epoch\ttrain_loss\tval_loss\n";
    for (std::size_t e = 0; e < result.log.train_loss.size(); ++e) {
        log_text += std::to_string(e);
        log_text += '\t';
        log_text += format_double(result.log.train_loss[e]);
        log_text += '\t';
        log_text += format_double(result.log.val_loss[e]);
        log_text += '\n';
    }
    log_text += "stop_reason\t" + stop_reason_name(result.log.stop_reason) + "\n";
    log_text += "best_epoch\t" + std::to_string(result.log.best_epoch) + "\n";
    const std::string log_path = out_dir + "/trainlog.tsv";
    atomic_write_file(log_path, log_text);

    const std::string in_stats_path = out_dir + "/input_stats.v2vs";
    const std::string tgt_stats_path = out_dir + "/target_stats.v2vs";
    save_stats(in_stats_path, input_stats);
    save_stats(tgt_stats_path, target_stats);

    // Output spread of the freshly trained net over its own training shard,
    // denormalized to raw LPS scale. Enhancement equalizes against this, so
    // it has to describe the model rather than any single utterance.
    const std::string gv_path = out_dir + "/gv_stats.v2vg";
    {
        const std::size_t bins = shard.d_out;
        Vector mean(bins, 0.0), m2(bins, 0.0);
        Vector x(shard.d_in);
        for (std::size_t row = 0; row < shard.rows; ++row) {
            for (std::size_t j = 0; j < shard.d_in; ++j)
                x[j] = shard.inputs[row * shard.d_in + j];
            const Vector y = forward(result.net, x);
            for (std::size_t k = 0; k < bins; ++k) {
                const double v = y[k] * target_stats.std[k] + target_stats.mean[k];
                const double delta = v - mean[k];
                mean[k] += delta / static_cast<double>(row + 1);
                m2[k] += delta * (v - mean[k]);
            }
        }
        GvStats gv;
        gv.reference_std = target_stats.std;
        gv.produced_std.resize(bins);
        for (std::size_t k = 0; k < bins; ++k) {
            const double var = m2[k] / static_cast<double>(shard.rows);
            gv.produced_std[k] = std::max(std::sqrt(std::max(var, 0.0)), 1e-6);
        }
        save_gv_stats(gv_path, gv);
    }

    CommandOutcome outcome;
    outcome.artifacts = {model_path, log_path, in_stats_path, tgt_stats_path, gv_path,
                         write_config_echo(cfg, out_dir)};
    return outcome;
}

Waveform enhance_waveform(const Waveform& noisy, const Mlp& net,
                          const NormStats& input_stats, const NormStats& target_stats,
                          const GvStats* gv, const RunConfig& cfg) {
    const StftConfig stft_cfg = cfg.stft();
    require(noisy.sample_rate == stft_cfg.sample_rate,
            "noisy sample rate does not match the profile");

    const Spectrogram spec_noisy = stft(noisy, stft_cfg);
    const LpsSequence lps_noisy = lps(spec_noisy);
    const NormStats in_stats = cfg.norm_mode() == NormMode::PerUtterance
                                   ? fit_norm({lps_noisy})
                                   : input_stats;
    const LpsSequence norm_in = apply_norm(lps_noisy, in_stats);

    const std::vector<Vector> contexts = make_context(norm_in, cfg.context());
    Vector nat;
    if (cfg.nat()) nat = nat_estimate(norm_in, std::min(cfg.nat_lead(), norm_in.frames));

    require(net.input_dim() == contexts.front().size() + nat.size(),
            "model input dim does not match the configured feature layout");
    require(net.output_dim() == stft_cfg.bins(),
            "model output dim does not match the profile bins");

    LpsSequence enhanced_norm;
    enhanced_norm.config = stft_cfg;
    enhanced_norm.frames = norm_in.frames;
    enhanced_norm.cells.resize(norm_in.cells.size());
    Vector x(net.input_dim());
    for (std::size_t t = 0; t < norm_in.frames; ++t) {
        std::copy(contexts[t].begin(), contexts[t].end(), x.begin());
        std::copy(nat.begin(), nat.end(), x.begin() + static_cast<std::ptrdiff_t>(contexts[t].size()));
        const Vector y = forward(net, x);
        for (std::size_t k = 0; k < stft_cfg.bins(); ++k) enhanced_norm.at(t, k) = y[k];
    }

    LpsSequence enhanced = invert_norm(enhanced_norm, target_stats);
    if (cfg.gv()) {
        require(gv != nullptr, "gv equalization needs the model's gv stats");
        enhanced = gv_equalize(enhanced, *gv);
    }

    const Spectrogram spec_out = lps_to_spectrogram(enhanced, spec_noisy);
    Waveform out = overlap_add(spec_out, spec_noisy, stft_cfg);
    // The analysis covers (frames-1)*hop + fft samples; align the output
    // with the input length (zeros past the analyzed span).
    out.samples.resize(noisy.samples.size(), 0.0);
    return out;
}

CommandOutcome cmd_enhance(const RunConfig& cfg, const std::string& model_path,
                           const std::string& noisy_wav, const std::string& out_wav) {
    const Mlp net = load_model(model_path);
    const std::string stats_dir = parent_dir(model_path);
    const NormStats input_stats = load_stats(stats_dir + "/input_stats.v2vs");
    const NormStats target_stats = load_stats(stats_dir + "/target_stats.v2vs");
    GvStats gv;
    if (cfg.gv()) gv = load_gv_stats(stats_dir + "/gv_stats.v2vg");
    const Waveform noisy = read_wav(noisy_wav);

    Waveform enhanced =
        enhance_waveform(noisy, net, input_stats, target_stats, cfg.gv() ? &gv : nullptr, cfg);
    for (double& s : enhanced.samples) s = std::clamp(s, -1.0, 1.0);

    ensure_dir(parent_dir(out_wav));
    write_wav(out_wav, enhanced);

    CommandOutcome outcome;
    outcome.artifacts = {out_wav, write_config_echo(cfg, parent_dir(out_wav))};
    return outcome;
}

CommandOutcome cmd_eval(const RunConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& models,
                        const std::string& corpus_dir, const std::string& features_dir,
                        const std::string& out_dir) {
    require(!models.empty(), "eval needs at least one model");
    ensure_dir(out_dir);

    const CorpusManifest test_m = load_manifest(corpus_dir + "/manifest_test.tsv");
    const FeatureShard test_shard = load_shard(features_dir + "/test.v2vf");
    const NormStats input_stats = load_stats(features_dir + "/input_stats.v2vs");
    const NormStats target_stats = load_stats(features_dir + "/target_stats.v2vs");

    // Realize the test utterances once.
    std::vector<UtterancePair> pairs;
    pairs.reserve(test_m.rows.size());
    for (const ManifestRow& row : test_m.rows) {
        try {
            pairs.push_back(realize_utterance(row, cfg.stft().sample_rate, cfg.duration_s(),
                                              corpus_dir));
        } catch (const Error& e) {
            throw Error("utterance '" + row.id + "': " + e.what());
        }
    }

    std::string detail = "# label\tutterance\tstoi\tseg_snr_db\n";
    std::string summary = "# " + eval_report_header() + "\n";

    // Noisy baseline: waveform metrics of the unprocessed mix, and the
    // feature-domain distance of the (stats-converted) noisy center frame.
    EvalReport noisy_report;
    noisy_report.utterance_count = pairs.size();
    for (std::size_t u = 0; u < pairs.size(); ++u) {
        const double s = stoi(pairs[u].clean, pairs[u].noisy);
        const double g = seg_snr(pairs[u].clean, pairs[u].noisy);
        noisy_report.stoi += s;
        noisy_report.seg_snr_db += g;
        detail += "noisy\t" + test_m.rows[u].id + "\t" + format_double(s) + "\t" +
                  format_double(g) + "\n";
    }
    noisy_report.stoi /= static_cast<double>(pairs.size());
    noisy_report.seg_snr_db /= static_cast<double>(pairs.size());
    {
        // Identity passthrough in the feature domain: input-normalized center
        // frame, re-expressed under the target statistics.
        const std::size_t bins = cfg.bins();
        const std::size_t center = (cfg.context() / 2) * bins;
        double sum_abs = 0.0, sum_sq = 0.0;
        for (std::size_t r = 0; r < test_shard.rows; ++r) {
            double a = 0.0, s2 = 0.0;
            for (std::size_t k = 0; k < bins; ++k) {
                const double raw =
                    static_cast<double>(test_shard.inputs[r * test_shard.d_in + center + k]) *
                        input_stats.std[k] +
                    input_stats.mean[k];
                const double pred = (raw - target_stats.mean[k]) / target_stats.std[k];
                const double resid =
                    pred - static_cast<double>(test_shard.targets[r * test_shard.d_out + k]);
                a += std::abs(resid);
                s2 += resid * resid;
            }
            sum_abs += a;
            sum_sq += s2;
        }
        noisy_report.mae = sum_abs / static_cast<double>(test_shard.rows);
        noisy_report.mse = sum_sq / static_cast<double>(test_shard.rows);
    }
    summary += eval_report_line("noisy", noisy_report) + "\n";

    for (const auto& [name, path] : models) {
        const Mlp net = load_model(path);
        const auto [feat_mae, feat_mse] = eval_features(net, test_shard);
        GvStats gv;
        if (cfg.gv()) gv = load_gv_stats(parent_dir(path) + "/gv_stats.v2vg");

        EvalReport report;
        report.mae = feat_mae;
        report.mse = feat_mse;
        report.utterance_count = pairs.size();
        for (std::size_t u = 0; u < pairs.size(); ++u) {
            const Waveform enhanced = enhance_waveform(pairs[u].noisy, net, input_stats,
                                                       target_stats, cfg.gv() ? &gv : nullptr, cfg);
            Waveform clipped = enhanced;
            for (double& s : clipped.samples) s = std::clamp(s, -1.0, 1.0);
            const double s = stoi(pairs[u].clean, clipped);
            const double g = seg_snr(pairs[u].clean, clipped);
            report.stoi += s;
            report.seg_snr_db += g;
            detail += name + "\t" + test_m.rows[u].id + "\t" + format_double(s) + "\t" +
                      format_double(g) + "\n";
        }
        report.stoi /= static_cast<double>(pairs.size());
        report.seg_snr_db /= static_cast<double>(pairs.size());
        summary += eval_report_line(name, report) + "\n";
    }

    const std::string report_path = out_dir + "/eval_report.tsv";
    const std::string detail_path = out_dir + "/eval_detail.tsv";
    atomic_write_file(report_path, summary);
    atomic_write_file(detail_path, detail);

    CommandOutcome outcome;
    outcome.artifacts = {report_path, detail_path, write_config_echo(cfg, out_dir)};
    return outcome;
}

CommandOutcome cmd_verify(const RunConfig& cfg, const std::string& claim,
                          const std::string& out_dir, std::vector<std::string>* log_lines) {
    ensure_dir(out_dir);

    std::vector<TheoryReport> reports;
    if (claim == "lemma1")
        reports = verify_lemma1(cfg);
    else if (claim == "lemma2")
        reports = verify_lemma2(cfg);
    else if (claim == "theorem1")
        reports = verify_theorem1(cfg);
    else if (claim == "rademacher")
        reports = verify_rademacher(cfg);
    else if (claim == "losses-equivalence")
        reports = verify_losses_equivalence(cfg);
    else
        throw ContractError("unknown claim '" + claim +
                            "' (expected lemma1, lemma2, theorem1, rademacher, "
                            "or losses-equivalence)");

    bool all_hold = true;
    std::string text;
    for (const TheoryReport& r : reports) {
        text += report_line(r);
        text += '\n';
        all_hold = all_hold && r.holds;
        if (log_lines)
            log_lines->push_back(std::string(r.holds ? "PASS " : "FAIL ") + report_line(r));
    }

    const std::string report_path = out_dir + "/verify_" + claim + ".tsv";
    atomic_write_file(report_path, text);

    CommandOutcome outcome;
    outcome.exit_code = all_hold ? 0 : 1;
    outcome.artifacts = {report_path, write_config_echo(cfg, out_dir)};
    return outcome;
}

CommandOutcome run_guarded(const std::function<CommandOutcome()>& fn, std::string* error_out) {
    try {
        return fn();
    } catch (const Error& e) {
        if (error_out) *error_out = e.what();
        return {1, {}};
    } catch (const std::exception& e) {
        if (error_out) *error_out = std::string("internal error: ") + e.what();
        return {2, {}};
    }
}

} // namespace v2v
