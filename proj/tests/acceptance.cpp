// Acceptance gate. Each criterion below is a self-contained check with the
// thresholds and wall-clock budget it has to meet, printed as exactly one
// PASS/FAIL line (the training sweep owns two criteria and prints two).
// Run with a criterion id (1..6, 9, 10, or 7_8) or with no argument for
// the whole gate. Exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/corpus.hpp"
#include "v2v/dsp.hpp"
#include "v2v/losses.hpp"
#include "v2v/metrics.hpp"
#include "v2v/network.hpp"
#include "v2v/numerics.hpp"
#include "v2v/pipeline.hpp"
#include "v2v/theory.hpp"

using namespace v2v;
namespace fs = std::filesystem;

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("v2v_acceptance_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

bool emit(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    return pass;
}

Vector scaled_normal(SeededRng& rng, std::size_t dim, double scale) {
    Vector v = sample_standard_normal(rng, dim);
    for (double& x : v) x *= scale;
    return v;
}

double pair_mae(const Vector& a, const Vector& b) {
    SampleBatch batch;
    batch.predictions.push_back(a);
    batch.targets.push_back(b);
    return mae(batch);
}

// ---- criterion 1: the L1 distance obeys the reverse triangle inequality --

bool criterion1() {
    Stopwatch clock;
    SeededRng rng(0xACC1);
    const std::size_t dims[] = {1, 2, 8, 64};
    const std::size_t per_dim = 25000; // 1e5 triples across the four dims

    std::size_t trials = 0, violations = 0;
    double min_slack = 1e300;
    for (std::size_t dim : dims) {
        for (std::size_t t = 0; t < per_dim; ++t) {
            const double scale = std::exp(3.0 * (rng.next_unit() - 0.5));
            const Vector x1 = scaled_normal(rng, dim, scale);
            const Vector x2 = scaled_normal(rng, dim, scale);
            const Vector x = scaled_normal(rng, dim, scale);
            const double lhs = std::abs(pair_mae(x1, x) - pair_mae(x2, x));
            const double rhs = pair_mae(x1, x2) + 1e-12;
            if (lhs > rhs) ++violations;
            min_slack = std::min(min_slack, rhs - lhs);
            ++trials;
        }
    }

    const double elapsed = clock.seconds();
    const bool pass = violations == 0 && elapsed < 10.0;
    return emit(1, pass,
                std::to_string(violations) + " violations in " + std::to_string(trials) +
                    " lipschitz triples, min slack " + num(min_slack) + " (" +
                    num(elapsed) + " s, budget 10 s)");
}

// ---- criterion 2: squared distances break the same inequality -----------

bool criterion2() {
    Stopwatch clock;
    SeededRng rng(0xACC2);
    const std::size_t dims[] = {1, 2, 8, 64};
    const std::size_t per_dim = 25000;

    std::size_t checked = 0, strict = 0;
    for (std::size_t dim : dims) {
        std::size_t done = 0;
        while (done < per_dim) {
            const double scale = std::exp(3.0 * (rng.next_unit() - 0.5));
            Vector x1 = scaled_normal(rng, dim, scale);
            Vector x2 = scaled_normal(rng, dim, scale);
            if (l2_norm_sq(x2) <= l2_norm_sq(x1)) std::swap(x1, x2);
            if (l2_norm_sq(x2) <= l2_norm_sq(x1)) continue; // exact tie, redraw
            const TheoryReport r = construct_mse_violation(x1, x2);
            if (r.lhs > r.rhs) ++strict;
            ++checked;
            ++done;
        }
    }

    const TheoryReport hand = construct_mse_violation(Vector{0.0}, Vector{1.0});
    const bool hand_exact = hand.lhs == 3.0 && hand.rhs == 1.0;

    const double elapsed = clock.seconds();
    const bool pass = checked == 100000 && strict == checked && hand_exact && elapsed < 10.0;
    return emit(2, pass,
                std::to_string(strict) + "/" + std::to_string(checked) +
                    " strict violations, hand case lhs " + num(hand.lhs) + " rhs " +
                    num(hand.rhs) + (hand_exact ? " exact" : " NOT EXACT") + " (" +
                    num(elapsed) + " s, budget 10 s)");
}

// ---- criterion 3: trained nets respect the spectral noise bound ----------

bool criterion3() {
    Stopwatch clock;
    const std::string dir = fresh_dir("c3");

    RunConfig cfg = RunConfig::defaults("desk");
    cfg.set("data.n_train", "24");
    cfg.set("data.n_test", "2");
    cfg.set("train.max_epochs", "10");
    cfg.set("train.patience", "10");
    cmd_synth(cfg, dir + "/corpus");
    cmd_features(cfg, dir + "/corpus", dir + "/features");

    SeededRng rng(0xACC3);
    std::size_t held = 0, pairs = 0;
    double worst_ratio = 0.0;
    bool sandwich_ok = true;
    double sandwich_gap = 1e300;

    for (const std::string loss : {"mae", "mse"}) {
        cfg.set("train.loss", loss);
        cmd_train(cfg, dir + "/features/train.v2vf", dir + "/run_" + loss);
        const Mlp net = load_model(dir + "/run_" + loss + "/model.v2vm");
        const LipschitzEstimate upper = lipschitz_upper(net);

        for (std::size_t p = 0; p < 1000; ++p) {
            const Vector x = sample_standard_normal(rng, net.input_dim());
            Vector eta = sample_standard_normal(rng, net.input_dim());
            const double want = 1e-3 * std::pow(1000.0, rng.next_unit()); // [1e-3, 1]
            const double have = l2_norm(eta);
            for (double& e : eta) e *= want / have;
            const TheoryReport r = check_noise_bound(net, x, eta, Vector{}, upper);
            if (r.lhs <= r.rhs) ++held;
            worst_ratio = std::max(worst_ratio, r.rhs > 0.0 ? r.lhs / r.rhs : 1e300);
            ++pairs;
        }

        std::vector<Vector> probes;
        for (int i = 0; i < 64; ++i) probes.push_back(sample_standard_normal(rng, net.input_dim()));
        const LipschitzEstimate emp = lipschitz_empirical(net, probes);
        sandwich_ok = sandwich_ok && emp.total <= upper.total;
        sandwich_gap = std::min(sandwich_gap, upper.total - emp.total);
    }

    const double elapsed = clock.seconds();
    const bool pass = held == pairs && pairs == 2000 && sandwich_ok && elapsed < 300.0;
    return emit(3, pass,
                "noise bound held " + std::to_string(held) + "/" + std::to_string(pairs) +
                    " (worst lhs/rhs " + num(worst_ratio) + "), empirical sup " +
                    (sandwich_ok ? "<=" : ">") + " spectral upper (min gap " +
                    num(sandwich_gap) + ") (" + num(elapsed) + " s, budget 300 s)");
}

// ---- criterion 4: monte carlo complexity agrees with enumeration --------

bool criterion4() {
    Stopwatch clock;
    SeededRng rng(0xACC4);
    const std::size_t instances = 200;
    const std::size_t draws = 100000;

    std::size_t disagreements = 0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const std::size_t n = 1 + rng.next_below(12);
        const std::size_t dim = 1 + rng.next_below(4);
        std::vector<Vector> samples;
        for (std::size_t i = 0; i < n; ++i) samples.push_back(sample_standard_normal(rng, dim));

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
        const RademacherEstimate mc = rademacher_mc(samples, family, draws, rng);
        const double err = std::abs(mc.value - exact.value);
        const double limit = mc.std_error > 0.0 ? 3.0 * mc.std_error : 1e-12;
        if (err > limit) ++disagreements;
    }

    const std::vector<Vector> unit_pair{Vector{1.0}, Vector{1.0}};
    const RademacherEstimate closed =
        rademacher_exact(unit_pair, FunctionFamily::linear_ball(1.0, 1, 1));
    const bool closed_exact = closed.value == 0.5;

    const double elapsed = clock.seconds();
    const std::size_t allowed = instances / 100; // >= 99% must agree
    const bool pass = disagreements <= allowed && closed_exact && elapsed < 120.0;
    return emit(4, pass,
                std::to_string(instances - disagreements) + "/" + std::to_string(instances) +
                    " instances within 3 se, closed form " + num(closed.value) +
                    (closed_exact ? " exact" : " NOT EXACT") + " (" + num(elapsed) +
                    " s, budget 120 s)");
}

// ---- criterion 5: analytic gradients against central differences --------

double batch_loss_of(const Mlp& net, const std::vector<Vector>& xs,
                     const std::vector<Vector>& ts, LossKind kind) {
    SampleBatch batch;
    for (const Vector& x : xs) batch.predictions.push_back(forward(net, x));
    batch.targets = ts;
    return batch_loss(kind, batch, nullptr);
}

// Smallest distance to a kink: relu preactivations near zero break the
// finite difference oracle, and near-zero residuals break it for mae.
double kink_clearance(const Mlp& net, const std::vector<Vector>& xs,
                      const std::vector<Vector>& ts) {
    double clearance = 1e300;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        Vector a = xs[s];
        for (const Layer& layer : net.layers()) {
            Vector z = matvec(layer.weights, a);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
            if (layer.activation == Activation::ReLU) {
                for (double v : z) clearance = std::min(clearance, std::abs(v));
                for (double& v : z) v = std::max(v, 0.0);
            }
            a = std::move(z);
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            clearance = std::min(clearance, std::abs(a[i] - ts[s][i]));
    }
    return clearance;
}

bool criterion5() {
    Stopwatch clock;
    SeededRng rng(0xACC5);
    const std::vector<std::vector<LayerSpec>> architectures{
        {{16, 16, Activation::Linear}},
        {{8, 12, Activation::ReLU}, {12, 5, Activation::Linear}},
        {{6, 10, Activation::ReLU}, {10, 10, Activation::ReLU}, {10, 4, Activation::Linear}},
        {{5, 16, Activation::ReLU},
         {16, 8, Activation::ReLU},
         {8, 8, Activation::ReLU},
         {8, 3, Activation::Linear}},
    };

    double worst = 0.0; // relative deviation, floored at scale 1
    std::size_t nets = 0;
    const double h = 1e-6;
    const auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
    };

    for (const auto& spec : architectures) {
        for (std::uint64_t seed : {1, 2}) {
            Mlp net = init_mlp(spec, seed);
            ++nets;

            std::vector<Vector> xs, ts;
            for (int attempt = 0; attempt < 200; ++attempt) {
                xs.clear();
                ts.clear();
                for (int s = 0; s < 4; ++s) {
                    xs.push_back(sample_standard_normal(rng, net.input_dim()));
                    ts.push_back(sample_standard_normal(rng, net.output_dim()));
                }
                if (kink_clearance(net, xs, ts) > 1e-3) break;
            }

            for (LossKind kind : {LossKind::Mse, LossKind::Mae}) {
                const Gradients grads = backward(net, xs, ts, kind);
                for (std::size_t l = 0; l < net.layer_count(); ++l) {
                    Layer& layer = net.layers()[l];
                    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                        const double keep = layer.weights.data()[i];
                        layer.weights.data()[i] = keep + h;
                        const double up = batch_loss_of(net, xs, ts, kind);
                        layer.weights.data()[i] = keep - h;
                        const double down = batch_loss_of(net, xs, ts, kind);
                        layer.weights.data()[i] = keep;
                        worst = std::max(worst,
                                         rel(grads.weights[l].data()[i], (up - down) / (2 * h)));
                    }
                    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                        const double keep = layer.bias[i];
                        layer.bias[i] = keep + h;
                        const double up = batch_loss_of(net, xs, ts, kind);
                        layer.bias[i] = keep - h;
                        const double down = batch_loss_of(net, xs, ts, kind);
                        layer.bias[i] = keep;
                        worst = std::max(worst,
                                         rel(grads.biases[l][i], (up - down) / (2 * h)));
                    }
                }
            }

            // full input jacobian at the first sample
            const Matrix jac = input_jacobian(net, xs[0]);
            for (std::size_t c = 0; c < net.input_dim(); ++c) {
                Vector xp = xs[0], xm = xs[0];
                xp[c] += h;
                xm[c] -= h;
                const Vector fp = forward(net, xp);
                const Vector fm = forward(net, xm);
                for (std::size_t r = 0; r < net.output_dim(); ++r)
                    worst = std::max(worst, rel(jac(r, c), (fp[r] - fm[r]) / (2 * h)));
            }
        }
    }

    const double elapsed = clock.seconds();
    const bool pass = worst <= 1e-5 && elapsed < 60.0;
    return emit(5, pass,
                "max gradient/jacobian deviation " + num(worst) + " over " +
                    std::to_string(nets) + " nets vs central differences (" + num(elapsed) +
                    " s, budget 60 s)");
}

// ---- criterion 6: signal path round trips --------------------------------

bool criterion6() {
    Stopwatch clock;
    SeededRng rng(0xACC6);
    const std::string dir = fresh_dir("c6");

    double ola_err = 0.0;
    const StftConfig profiles[] = {{8000, 256, 128}, {16000, 512, 256}};
    for (const StftConfig& sc : profiles) {
        std::vector<Waveform> inputs;
        inputs.push_back(synth_clean(1.0, sc.sample_rate, rng.next_u64()));
        Waveform noise{scaled_normal(rng, sc.sample_rate, 0.25), sc.sample_rate};
        inputs.push_back(std::move(noise));
        for (const Waveform& w : inputs) {
            const Spectrogram spec = stft(w, sc);
            const Waveform back = overlap_add(spec, spec, sc);
            for (std::size_t i = sc.fft_size; i + sc.fft_size < back.samples.size(); ++i)
                ola_err = std::max(ola_err, std::abs(back.samples[i] - w.samples[i]));
        }
    }

    Waveform pcm{Vector(4096), 8000};
    for (double& s : pcm.samples) s = 2.0 * rng.next_unit() - 1.0;
    write_wav(dir + "/roundtrip.wav", pcm);
    const Waveform decoded = read_wav(dir + "/roundtrip.wav");
    double wav_err = 0.0;
    for (std::size_t i = 0; i < pcm.samples.size(); ++i)
        wav_err = std::max(wav_err, std::abs(decoded.samples[i] - pcm.samples[i]));

    std::vector<LpsSequence> seqs;
    for (int k = 0; k < 3; ++k) {
        LpsSequence l;
        l.config = {8000, 256, 128};
        l.frames = 40;
        l.cells = scaled_normal(rng, l.frames * l.config.bins(), 5.0);
        for (double& c : l.cells) c -= 10.0;
        seqs.push_back(std::move(l));
    }
    const NormStats stats = fit_norm(seqs);
    double norm_err = 0.0;
    for (const LpsSequence& l : seqs) {
        const LpsSequence back = invert_norm(apply_norm(l, stats), stats);
        for (std::size_t i = 0; i < l.cells.size(); ++i)
            norm_err = std::max(norm_err, std::abs(back.cells[i] - l.cells[i]));
    }

    const double elapsed = clock.seconds();
    const bool pass =
        ola_err <= 1e-10 && wav_err <= 1.0 / 32768.0 && norm_err <= 1e-12 && elapsed < 30.0;
    return emit(6, pass,
                "overlap-add interior " + num(ola_err) + " (<= 1e-10), wav " + num(wav_err) +
                    " (<= " + num(1.0 / 32768.0) + "), norm round trip " + num(norm_err) +
                    " (<= 1e-12) (" + num(elapsed) + " s, budget 30 s)");
}

// ---- criteria 7 and 8: the training sweep --------------------------------

struct SweepSide {
    double feat_mae = 0.0;
    double feat_mse = 0.0;
    double stoi_mean = 0.0;
};

int criteria7and8() {
    Stopwatch clock;
    const std::string dir = fresh_dir("c78");

    // Corpus exactly as stated: 200/40 utterances, the default three noise
    // kinds, train SNRs {0,5,10,15}, test SNRs {2.5,7.5,12.5,17.5}.
    // Utterances run ~3.5 s so the train shard holds enough frames for the
    // nets to converge, and the optimizer gets a hot recipe (heavy momentum,
    // long patience) because both models must reach their loss floor for the
    // comparison to mean anything. Variance restoration stays off: the two
    // models are compared on raw network output.
    RunConfig cfg = RunConfig::defaults("desk");
    cfg.set("data.duration_s", "3.5");
    cfg.set("train.momentum", "0.9");
    cfg.set("train.max_epochs", "60");
    cfg.set("train.patience", "12");
    cfg.set("train.val_fraction", "0.1");
    cfg.set("enhance.gv", "off");
    cmd_synth(cfg, dir + "/corpus");
    cmd_features(cfg, dir + "/corpus", dir + "/features");

    const FeatureShard test_shard = load_shard(dir + "/features/test.v2vf");
    const NormStats input_stats = load_stats(dir + "/features/input_stats.v2vs");
    const NormStats target_stats = load_stats(dir + "/features/target_stats.v2vs");

    const CorpusManifest test_m = load_manifest(dir + "/corpus/manifest_test.tsv");
    std::vector<UtterancePair> pairs;
    for (const ManifestRow& row : test_m.rows)
        pairs.push_back(realize_utterance(row, cfg.stft().sample_rate, cfg.duration_s(),
                                          dir + "/corpus"));

    double noisy_stoi = 0.0;
    for (const UtterancePair& p : pairs) noisy_stoi += stoi(p.clean, p.noisy);
    noisy_stoi /= static_cast<double>(pairs.size());

    const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
    SweepSide sides[2]; // [0] mae-trained, [1] mse-trained
    const char* losses[] = {"mae", "mse"};

    for (int side = 0; side < 2; ++side) {
        for (std::uint64_t seed : seeds) {
            cfg.set("train.loss", losses[side]);
            cfg.set("train.seed", std::to_string(seed));
            const std::string run =
                dir + "/run_" + losses[side] + "_" + std::to_string(seed);
            cmd_train(cfg, dir + "/features/train.v2vf", run);
            const Mlp net = load_model(run + "/model.v2vm");

            const auto [fm, fs] = eval_features(net, test_shard);
            sides[side].feat_mae += fm;
            sides[side].feat_mse += fs;

            GvStats gv;
            if (cfg.gv()) gv = load_gv_stats(run + "/gv_stats.v2vg");
            double st = 0.0;
            for (const UtterancePair& p : pairs) {
                Waveform enhanced = enhance_waveform(p.noisy, net, input_stats, target_stats,
                                                     cfg.gv() ? &gv : nullptr, cfg);
                for (double& s : enhanced.samples) s = std::clamp(s, -1.0, 1.0);
                st += stoi(p.clean, enhanced);
            }
            sides[side].stoi_mean += st / static_cast<double>(pairs.size());
        }
        const double n = static_cast<double>(std::size(seeds));
        sides[side].feat_mae /= n;
        sides[side].feat_mse /= n;
        sides[side].stoi_mean /= n;
    }

    const double elapsed = clock.seconds();
    const SweepSide& ma = sides[0];
    const SweepSide& ms = sides[1];

    const bool c7 = ma.feat_mae < ms.feat_mae && ma.feat_mae < ma.feat_mse &&
                    ms.feat_mae < ms.feat_mse && elapsed < 1800.0;
    const bool c8 = ma.stoi_mean >= ms.stoi_mean - 0.005 &&
                    ma.stoi_mean >= noisy_stoi + 0.01 && ms.stoi_mean >= noisy_stoi + 0.01;

    int failures = 0;
    if (!emit(7, c7,
              "seed-mean test mae " + num(ma.feat_mae) + " (mae-trained) vs " +
                  num(ms.feat_mae) + " (mse-trained); per-model mae < mse: " +
                  num(ma.feat_mae) + " < " + num(ma.feat_mse) + " and " + num(ms.feat_mae) +
                  " < " + num(ms.feat_mse) + " (" + num(elapsed) + " s, budget 1800 s)"))
        ++failures;
    if (!emit(8, c8,
              "seed-mean stoi " + num(ma.stoi_mean) + " (mae-trained) vs " +
                  num(ms.stoi_mean) + " (mse-trained), noisy baseline " + num(noisy_stoi) +
                  ", gains " + num(ma.stoi_mean - noisy_stoi) + " and " +
                  num(ms.stoi_mean - noisy_stoi) + " (need >= 0.01)"))
        ++failures;
    return failures;
}

// ---- criterion 9: the scaled losses collapse onto mae/mse ----------------

bool same_parameters(const Mlp& a, const Mlp& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const Layer& la = a.layers()[l];
        const Layer& lb = b.layers()[l];
        if (la.weights.size() != lb.weights.size() || la.bias.size() != lb.bias.size())
            return false;
        for (std::size_t i = 0; i < la.weights.size(); ++i)
            if (la.weights.data()[i] != lb.weights.data()[i]) return false;
        for (std::size_t i = 0; i < la.bias.size(); ++i)
            if (la.bias[i] != lb.bias[i]) return false;
    }
    return true;
}

bool criterion9() {
    Stopwatch clock;
    SeededRng rng(0xACC9);

    // unit alpha: identical values, bit for bit
    double worst_ld = 0.0, worst_gd = 0.0, worst_grad = 0.0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + rng.next_below(6);
        const std::size_t q = 1 + rng.next_below(8);
        SampleBatch batch;
        for (std::size_t i = 0; i < n; ++i) {
            batch.predictions.push_back(scaled_normal(rng, q, 2.0));
            batch.targets.push_back(scaled_normal(rng, q, 2.0));
        }
        const AlphaVector ones = AlphaVector::unit(q);
        worst_ld = std::max(worst_ld, std::abs(ld_loss(batch, ones) - mae(batch)));
        worst_gd = std::max(worst_gd, std::abs(gd_loss(batch, ones) - mse(batch)));

        // any constant alpha: gradients must coincide exactly
        const AlphaVector alpha(Vector(q, 1.3));
        const Vector g_ld =
            loss_gradient(LossKind::Ld, batch.predictions[0], batch.targets[0], n, &alpha);
        const Vector g_mae =
            loss_gradient(LossKind::Mae, batch.predictions[0], batch.targets[0], n);
        const Vector g_gd =
            loss_gradient(LossKind::Gd, batch.predictions[0], batch.targets[0], n, &alpha);
        const Vector g_mse =
            loss_gradient(LossKind::Mse, batch.predictions[0], batch.targets[0], n);
        for (std::size_t i = 0; i < q; ++i) {
            worst_grad = std::max(worst_grad, std::abs(g_ld[i] - g_mae[i]));
            worst_grad = std::max(worst_grad, std::abs(g_gd[i] - g_mse[i]));
        }
    }
    const bool values_exact = worst_ld == 0.0 && worst_gd == 0.0 && worst_grad == 0.0;

    // constant alpha: the ld trajectory tracks mae epoch for epoch
    std::vector<Vector> inputs, targets;
    for (int i = 0; i < 64; ++i) {
        inputs.push_back(sample_standard_normal(rng, 6));
        targets.push_back(sample_standard_normal(rng, 4));
    }
    bool trajectories_identical = true;
    for (std::size_t epochs = 1; epochs <= 6; ++epochs) {
        TrainConfig t;
        t.layers = {{6, 8, Activation::ReLU}, {8, 4, Activation::Linear}};
        t.max_epochs = epochs;
        t.patience = epochs;
        t.batch_size = 16;
        t.seed = 77;
        t.loss = LossKind::Mae;
        const TrainResult base = train(inputs, targets, t);
        t.loss = LossKind::Ld;
        t.alpha = AlphaVector(Vector(4, 1.3));
        const TrainResult scaled = train(inputs, targets, t);
        trajectories_identical = trajectories_identical &&
                                 same_parameters(base.net, scaled.net) &&
                                 base.log.best_epoch == scaled.log.best_epoch;
    }

    const double elapsed = clock.seconds();
    const bool pass = values_exact && trajectories_identical && elapsed < 120.0;
    return emit(9, pass,
                "unit-alpha deviations ld " + num(worst_ld) + ", gd " + num(worst_gd) +
                    ", gradients " + num(worst_grad) + "; ld/mae parameters " +
                    (trajectories_identical ? "identical" : "DIVERGED") +
                    " across 6 epoch budgets (" + num(elapsed) + " s, budget 120 s)");
}

// ---- criterion 10: mae fits the median, mse fits the mean ----------------

bool criterion10() {
    Stopwatch clock;

    // constant input, 75% zeros and 25% fours: median 0, mean 1
    std::vector<Vector> inputs(2000, Vector{1.0});
    std::vector<Vector> targets;
    for (int i = 0; i < 2000; ++i) targets.push_back(Vector{i % 4 == 3 ? 4.0 : 0.0});

    std::size_t good = 0;
    double worst_median = 0.0, worst_mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.layers = {{1, 1, Activation::Linear}};
        cfg.learning_rate = 0.05;
        cfg.momentum = 0.0;
        cfg.max_epochs = 60;
        cfg.patience = 60;
        cfg.batch_size = 128;
        cfg.seed = seed;

        cfg.loss = LossKind::Mae;
        const double mae_pred = forward(train(inputs, targets, cfg).net, {1.0})[0];
        cfg.loss = LossKind::Mse;
        const double mse_pred = forward(train(inputs, targets, cfg).net, {1.0})[0];

        const double dev_median = std::abs(mae_pred - 0.0);
        const double dev_mean = std::abs(mse_pred - 1.0);
        worst_median = std::max(worst_median, dev_median);
        worst_mean = std::max(worst_mean, dev_mean);
        if (dev_median < 0.2 && dev_mean < 0.2) ++good;
    }

    const double elapsed = clock.seconds();
    const bool pass = good == 5 && elapsed < 60.0;
    return emit(10, pass,
                std::to_string(good) + "/5 seeds (worst |mae-median| " + num(worst_median) +
                    ", worst |mse-mean| " + num(worst_mean) + ", both < 0.2) (" +
                    num(elapsed) + " s, budget 60 s)");
}

int run(const std::string& which) {
    int failures = 0;
    const auto want = [&](const char* id) { return which == "all" || which == id; };
    try {
        if (want("1") && !criterion1()) ++failures;
        if (want("2") && !criterion2()) ++failures;
        if (want("3") && !criterion3()) ++failures;
        if (want("4") && !criterion4()) ++failures;
        if (want("5") && !criterion5()) ++failures;
        if (want("6") && !criterion6()) ++failures;
        if (want("7_8") || want("7") || want("8")) failures += criteria7and8();
        if (want("9") && !criterion9()) ++failures;
        if (want("10") && !criterion10()) ++failures;
    } catch (const std::exception& e) {
        std::printf("FAIL criterion %s: unhandled exception: %s\n", which.c_str(), e.what());
        return failures + 1;
    }
    return failures;
}

} // namespace

int main(int argc, char** argv) {
    const std::string which = argc > 1 ? argv[1] : "all";
    return run(which);
}
