#include "v2v/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "v2v/io.hpp"

namespace v2v {

namespace {

constexpr int kStoiFs = 10000;
constexpr std::size_t kStoiFrame = 256;
constexpr std::size_t kStoiHop = 128;
constexpr std::size_t kStoiFft = 512;
constexpr std::size_t kStoiBands = 15;
constexpr double kStoiMinCenter = 150.0;
constexpr std::size_t kStoiSegment = 30;   // frames per 384 ms segment
constexpr double kStoiDynRange = 40.0;     // silent-frame threshold, dB
constexpr double kStoiBeta = -15.0;        // lower SDR clip bound, dB

// Rational-rate resampler: upsample by L, windowed-sinc lowpass at the
// tighter of the two Nyquist rates, downsample by M. Direct polyphase
// evaluation; signals here are a few seconds at most.
Vector resample_rational(const Vector& x, std::size_t up, std::size_t down) {
    if (up == down) return x;
    const std::size_t half_crossings = 16;
    const std::size_t dominant = std::max(up, down);
    const std::size_t half = half_crossings * dominant;
    const double cutoff = 0.5 / static_cast<double>(dominant); // fraction of upsampled fs

    Vector h(2 * half + 1);
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double t = static_cast<double>(k) - static_cast<double>(half);
        const double arg = 2.0 * cutoff * t;
        const double sinc = arg == 0.0 ? 1.0
                                       : std::sin(std::numbers::pi * arg) /
                                             (std::numbers::pi * arg);
        const double win = 0.54 + 0.46 * std::cos(std::numbers::pi * t /
                                                  static_cast<double>(half));
        h[k] = 2.0 * cutoff * sinc * win * static_cast<double>(up);
    }

    const std::size_t out_len = (x.size() * up) / down;
    Vector y(out_len, 0.0);
    for (std::size_t j = 0; j < out_len; ++j) {
        const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(j * down);
        // Sum over input samples i with |i*up - center| <= half.
        const std::ptrdiff_t lo =
            (center - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(up) - 1) /
            static_cast<std::ptrdiff_t>(up);
        const std::ptrdiff_t hi = (center + static_cast<std::ptrdiff_t>(half)) /
                                  static_cast<std::ptrdiff_t>(up);
        double acc = 0.0;
        for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
             i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(x.size()) - 1); ++i) {
            const std::ptrdiff_t tap =
                center - i * static_cast<std::ptrdiff_t>(up) + static_cast<std::ptrdiff_t>(half);
            acc += x[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(tap)];
        }
        y[j] = acc;
    }
    return y;
}

Vector to_10k(const Waveform& w) {
    if (w.sample_rate == kStoiFs) return w.samples;
    if (w.sample_rate == 8000) return resample_rational(w.samples, 5, 4);
    if (w.sample_rate == 16000) return resample_rational(w.samples, 5, 8);
    throw ContractError("stoi supports 8 kHz and 16 kHz input only");
}

// Drop frames more than kStoiDynRange below the loudest clean frame, then
// rebuild both signals by overlap-adding the surviving windowed frames.
void remove_silent_frames(Vector& x, Vector& y) {
    const Vector win = hann_window(kStoiFrame);
    if (x.size() < kStoiFrame) throw ContractError("signal too short for stoi");
    const std::size_t frames = (x.size() - kStoiFrame) / kStoiHop + 1;

    Vector level(frames);
    double max_level = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < frames; ++f) {
        double e = 0.0;
        for (std::size_t i = 0; i < kStoiFrame; ++i) {
            const double v = x[f * kStoiHop + i] * win[i];
            e += v * v;
        }
        level[f] = 10.0 * std::log10(std::max(e, 1e-300));
        max_level = std::max(max_level, level[f]);
    }

    Vector xs(x.size(), 0.0), ys(y.size(), 0.0);
    std::size_t kept = 0;
    for (std::size_t f = 0; f < frames; ++f) {
        if (level[f] < max_level - kStoiDynRange) continue;
        const std::size_t src = f * kStoiHop;
        const std::size_t dst = kept * kStoiHop;
        for (std::size_t i = 0; i < kStoiFrame; ++i) {
            xs[dst + i] += x[src + i] * win[i];
            ys[dst + i] += y[src + i] * win[i];
        }
        ++kept;
    }
    if (kept == 0) throw ContractError("no active frames for stoi");
    const std::size_t out_len = (kept - 1) * kStoiHop + kStoiFrame;
    x.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(out_len));
    y.assign(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(out_len));
}

// One-third-octave band energies: band j spans nearest-bin edges around
// center 150 * 2^(j/3). Returns bands x frames magnitudes.
std::vector<Vector> band_decompose(const Vector& sig, std::size_t frames) {
    const Vector win = hann_window(kStoiFrame);
    const std::size_t bins = kStoiFft / 2 + 1;

    std::vector<Vector> power(frames, Vector(bins, 0.0));
    std::vector<std::complex<double>> buf(kStoiFft);
    for (std::size_t f = 0; f < frames; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t i = 0; i < kStoiFrame; ++i)
            buf[i] = {sig[f * kStoiHop + i] * win[i], 0.0};
        fft_radix2(buf, false);
        for (std::size_t k = 0; k < bins; ++k) power[f][k] = std::norm(buf[k]);
    }

    std::vector<Vector> bands(kStoiBands, Vector(frames, 0.0));
    for (std::size_t j = 0; j < kStoiBands; ++j) {
        const double cf = kStoiMinCenter * std::pow(2.0, static_cast<double>(j) / 3.0);
        const double f_lo = cf / std::pow(2.0, 1.0 / 6.0);
        const double f_hi = cf * std::pow(2.0, 1.0 / 6.0);
        const double bin_hz = static_cast<double>(kStoiFs) / static_cast<double>(kStoiFft);
        const std::size_t lo = static_cast<std::size_t>(
            std::clamp(std::llround(f_lo / bin_hz), 0LL, static_cast<long long>(bins - 1)));
        const std::size_t hi = static_cast<std::size_t>(
            std::clamp(std::llround(f_hi / bin_hz), 0LL, static_cast<long long>(bins - 1)));
        for (std::size_t f = 0; f < frames; ++f) {
            double e = 0.0;
            for (std::size_t k = lo; k < hi; ++k) e += power[f][k];
            bands[j][f] = std::sqrt(e);
        }
    }
    return bands;
}

double segment_correlation(const Vector& xb, const Vector& yb, std::size_t begin) {
    Vector x(xb.begin() + static_cast<std::ptrdiff_t>(begin),
             xb.begin() + static_cast<std::ptrdiff_t>(begin + kStoiSegment));
    Vector y(yb.begin() + static_cast<std::ptrdiff_t>(begin),
             yb.begin() + static_cast<std::ptrdiff_t>(begin + kStoiSegment));

    double nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < kStoiSegment; ++i) {
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    const double gain = ny > 0.0 ? std::sqrt(nx / ny) : 0.0;
    const double clip_gain = 1.0 + std::pow(10.0, -kStoiBeta / 20.0);
    for (std::size_t i = 0; i < kStoiSegment; ++i)
        y[i] = std::min(y[i] * gain, x[i] * clip_gain);

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < kStoiSegment; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= kStoiSegment;
    my /= kStoiSegment;

    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < kStoiSegment; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    const double den = std::sqrt(dx * dy);
    return den > 0.0 ? num / den : 0.0;
}

} // namespace

std::string eval_report_header() {
    return "label\tfeature_mae\tfeature_mse\tstoi\tseg_snr_db\tutterances";
}

std::string eval_report_line(const std::string& label, const EvalReport& r) {
    std::string out = label;
    out += '\t';
    out += format_double(r.mae);
    out += '\t';
    out += format_double(r.mse);
    out += '\t';
    out += format_double(r.stoi);
    out += '\t';
    out += format_double(r.seg_snr_db);
    out += '\t';
    out += std::to_string(r.utterance_count);
    return out;
}

std::pair<double, double> eval_features(const Mlp& model, const FeatureShard& shard) {
    shard.validate();
    require(shard.d_in == model.input_dim(), "shard input dim must match the model");
    require(shard.d_out == model.output_dim(), "shard target dim must match the model");

    double sum_abs = 0.0, sum_sq = 0.0;
    Vector x(shard.d_in);
    for (std::size_t rrow = 0; rrow < shard.rows; ++rrow) {
        for (std::size_t c = 0; c < shard.d_in; ++c)
            x[c] = static_cast<double>(shard.inputs[rrow * shard.d_in + c]);
        const Vector pred = forward(model, x);
        double a = 0.0, s = 0.0;
        for (std::size_t c = 0; c < shard.d_out; ++c) {
            const double resid =
                pred[c] - static_cast<double>(shard.targets[rrow * shard.d_out + c]);
            a += std::abs(resid);
            s += resid * resid;
        }
        sum_abs += a;
        sum_sq += s;
    }
    const double n = static_cast<double>(shard.rows);
    return {sum_abs / n, sum_sq / n};
}

double stoi(const Waveform& clean, const Waveform& processed) {
    require(clean.sample_rate == processed.sample_rate, "sample rates must match");
    require(clean.samples.size() == processed.samples.size(), "lengths must match");
    require(clean.sample_rate == 8000 || clean.sample_rate == 16000,
            "stoi supports 8 kHz and 16 kHz input only");

    Vector x = to_10k(clean);
    Vector y = to_10k(processed);
    remove_silent_frames(x, y);

    if (x.size() < kStoiFrame) throw ContractError("signal too short for stoi");
    const std::size_t frames = (x.size() - kStoiFrame) / kStoiHop + 1;
    if (frames < kStoiSegment)
        throw ContractError("too few active frames for stoi (need 30)");

    const std::vector<Vector> xb = band_decompose(x, frames);
    const std::vector<Vector> yb = band_decompose(y, frames);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t seg = 0; seg + kStoiSegment <= frames; ++seg)
        for (std::size_t j = 0; j < kStoiBands; ++j) {
            total += segment_correlation(xb[j], yb[j], seg);
            ++count;
        }
    return std::clamp(total / static_cast<double>(count), 0.0, 1.0);
}

double seg_snr(const Waveform& clean, const Waveform& processed, std::size_t frame) {
    require(clean.samples.size() == processed.samples.size(), "lengths must match");
    require(clean.sample_rate == processed.sample_rate, "sample rates must match");
    require(frame >= 64, "frame must be at least 64 samples");
    require(clean.samples.size() >= frame, "signal shorter than one frame");

    const std::size_t frames = clean.samples.size() / frame;
    Vector energy(frames, 0.0);
    double total_energy = 0.0;
    for (std::size_t f = 0; f < frames; ++f) {
        double e = 0.0;
        for (std::size_t i = f * frame; i < (f + 1) * frame; ++i)
            e += clean.samples[i] * clean.samples[i];
        energy[f] = e;
        total_energy += e;
    }
    const double threshold = std::max(total_energy / static_cast<double>(frames) / 100.0, 1e-12);

    double total = 0.0;
    std::size_t active = 0;
    for (std::size_t f = 0; f < frames; ++f) {
        if (energy[f] <= threshold) continue;
        double err = 0.0;
        for (std::size_t i = f * frame; i < (f + 1) * frame; ++i) {
            const double d = clean.samples[i] - processed.samples[i];
            err += d * d;
        }
        double snr_db;
        if (err == 0.0) {
            snr_db = 35.0;
        } else {
            snr_db = std::clamp(10.0 * std::log10(energy[f] / err), -10.0, 35.0);
        }
        total += snr_db;
        ++active;
    }
    require(active > 0, "clean signal has no active frames");
    return total / static_cast<double>(active);
}

} // namespace v2v
