#include "v2v/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace v2v {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::complex<double> unit_phase(std::complex<double> z) {
    const double m = std::abs(z);
    if (m == 0.0) return {1.0, 0.0};
    return z / m;
}

void check_same_shape(const Spectrogram& a, const Spectrogram& b) {
    require(a.frames == b.frames && a.config.fft_size == b.config.fft_size &&
                a.config.hop == b.config.hop,
            "spectrogram shapes must match");
}

} // namespace

void StftConfig::validate() const {
    require(sample_rate > 0, "sample rate must be positive");
    require(is_pow2(fft_size), "fft size must be a power of two");
    require(fft_size >= 16, "fft size too small");
    require(hop == fft_size / 2, "hop must be half the fft size");
}

void NormStats::validate() const {
    require(!mean.empty() && mean.size() == std.size(), "stats dims must match");
    for (double s : std) require(s > 0.0 && std::isfinite(s), "stats std must be positive");
    for (double m : mean) require(std::isfinite(m), "stats mean must be finite");
}

void GvStats::validate() const {
    require(!reference_std.empty() && reference_std.size() == produced_std.size(),
            "gv stats dims must match");
    for (double s : reference_std) require(s > 0.0, "gv reference std must be positive");
    for (double s : produced_std) require(s > 0.0, "gv produced std must be positive");
}

void fft_radix2(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    require(is_pow2(n), "fft length must be a power of two");
    if (n == 1) return;

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& z : data) z *= inv;
    }
}

Vector hann_window(std::size_t n) {
    require(n >= 2, "window length too small");
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n));
    return w;
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
    cfg.validate();
    require(w.sample_rate == cfg.sample_rate, "waveform/config sample rates must match");
    require(w.samples.size() >= cfg.fft_size, "waveform shorter than one analysis frame");

    const std::size_t n = cfg.fft_size;
    const std::size_t frames = (w.samples.size() - n) / cfg.hop + 1;
    const Vector win = hann_window(n);

    Spectrogram out;
    out.config = cfg;
    out.frames = frames;
    out.cells.resize(frames * cfg.bins());

    std::vector<std::complex<double>> buf(n);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * cfg.hop;
        for (std::size_t i = 0; i < n; ++i)
            buf[i] = {w.samples[start + i] * win[i], 0.0};
        fft_radix2(buf, false);
        for (std::size_t k = 0; k < cfg.bins(); ++k) out.at(t, k) = buf[k];
    }
    return out;
}

Waveform overlap_add(const Spectrogram& spec, const Spectrogram& phase_source,
                     const StftConfig& cfg) {
    cfg.validate();
    check_same_shape(spec, phase_source);
    require(spec.config.fft_size == cfg.fft_size && spec.config.hop == cfg.hop,
            "spectrogram must match the given stft config");
    require(spec.frames >= 1, "cannot resynthesize an empty spectrogram");

    const std::size_t n = cfg.fft_size;
    const std::size_t bins = cfg.bins();
    const Vector win = hann_window(n);
    const std::size_t out_len = (spec.frames - 1) * cfg.hop + n;

    Vector num(out_len, 0.0);
    Vector den(out_len, 0.0);

    std::vector<std::complex<double>> buf(n);
    for (std::size_t t = 0; t < spec.frames; ++t) {
        for (std::size_t k = 0; k < bins; ++k) {
            const double mag = std::abs(spec.at(t, k));
            buf[k] = mag * unit_phase(phase_source.at(t, k));
        }
        // Hermitian extension so the inverse transform is real.
        for (std::size_t k = bins; k < n; ++k) buf[k] = std::conj(buf[n - k]);
        buf[0].imag(0.0);
        buf[n / 2].imag(0.0);
        fft_radix2(buf, true);

        const std::size_t start = t * cfg.hop;
        for (std::size_t i = 0; i < n; ++i) {
            num[start + i] += win[i] * buf[i].real();
            den[start + i] += win[i] * win[i];
        }
    }

    Waveform out;
    out.sample_rate = cfg.sample_rate;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i)
        out.samples[i] = num[i] / std::max(den[i], 1e-12);
    return out;
}

LpsSequence lps(const Spectrogram& spec, double floor) {
    require(floor > 0.0, "lps floor must be positive");
    LpsSequence out;
    out.config = spec.config;
    out.frames = spec.frames;
    out.cells.resize(spec.cells.size());
    for (std::size_t i = 0; i < spec.cells.size(); ++i)
        out.cells[i] = std::log(std::max(std::norm(spec.cells[i]), floor));
    return out;
}

Spectrogram lps_to_spectrogram(const LpsSequence& l, const Spectrogram& phase_source) {
    require(l.frames == phase_source.frames &&
                l.config.fft_size == phase_source.config.fft_size &&
                l.config.hop == phase_source.config.hop,
            "lps/phase shapes must match");
    Spectrogram out;
    out.config = phase_source.config;
    out.frames = phase_source.frames;
    out.cells.resize(phase_source.cells.size());
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        const double mag = std::exp(0.5 * l.cells[i]);
        out.cells[i] = mag * unit_phase(phase_source.cells[i]);
    }
    return out;
}

NormStats fit_norm(const std::vector<LpsSequence>& seqs) {
    require(!seqs.empty(), "cannot fit stats on an empty set");
    const std::size_t bins = seqs.front().config.bins();
    std::size_t count = 0;
    Vector sum(bins, 0.0), sumsq(bins, 0.0);
    for (const auto& l : seqs) {
        require(l.config.bins() == bins, "all sequences must share one bin count");
        require(l.frames >= 1, "cannot fit stats on an empty sequence");
        for (std::size_t t = 0; t < l.frames; ++t)
            for (std::size_t k = 0; k < bins; ++k) {
                const double v = l.at(t, k);
                sum[k] += v;
                sumsq[k] += v * v;
            }
        count += l.frames;
    }

    NormStats stats;
    stats.mean.resize(bins);
    stats.std.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double m = sum[k] / static_cast<double>(count);
        const double var = std::max(sumsq[k] / static_cast<double>(count) - m * m, 0.0);
        stats.mean[k] = m;
        stats.std[k] = std::max(std::sqrt(var), 1e-6);
    }
    stats.validate();
    return stats;
}

LpsSequence apply_norm(const LpsSequence& l, const NormStats& stats) {
    stats.validate();
    require(stats.dim() == l.config.bins(), "stats dim must match bin count");
    LpsSequence out = l;
    for (std::size_t t = 0; t < l.frames; ++t)
        for (std::size_t k = 0; k < stats.dim(); ++k)
            out.at(t, k) = (l.at(t, k) - stats.mean[k]) / stats.std[k];
    return out;
}

LpsSequence invert_norm(const LpsSequence& l, const NormStats& stats) {
    stats.validate();
    require(stats.dim() == l.config.bins(), "stats dim must match bin count");
    LpsSequence out = l;
    for (std::size_t t = 0; t < l.frames; ++t)
        for (std::size_t k = 0; k < stats.dim(); ++k)
            out.at(t, k) = l.at(t, k) * stats.std[k] + stats.mean[k];
    return out;
}

Vector per_bin_std(const LpsSequence& l) {
    require(l.frames >= 1, "empty sequence");
    const std::size_t bins = l.config.bins();
    Vector sum(bins, 0.0), sumsq(bins, 0.0);
    for (std::size_t t = 0; t < l.frames; ++t)
        for (std::size_t k = 0; k < bins; ++k) {
            const double v = l.at(t, k);
            sum[k] += v;
            sumsq[k] += v * v;
        }
    Vector out(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double m = sum[k] / static_cast<double>(l.frames);
        const double var = std::max(sumsq[k] / static_cast<double>(l.frames) - m * m, 0.0);
        out[k] = std::max(std::sqrt(var), 1e-6);
    }
    return out;
}

std::vector<Vector> make_context(const LpsSequence& l, std::size_t width) {
    require(width >= 1 && width % 2 == 1, "context width must be odd");
    require(l.frames >= 1, "empty sequence");
    const std::size_t bins = l.config.bins();
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(l.frames) - 1;

    std::vector<Vector> out(l.frames);
    for (std::size_t t = 0; t < l.frames; ++t) {
        Vector row;
        row.reserve(width * bins);
        for (std::ptrdiff_t d = -half; d <= half; ++d) {
            const std::ptrdiff_t src =
                std::clamp(static_cast<std::ptrdiff_t>(t) + d, std::ptrdiff_t{0}, last);
            for (std::size_t k = 0; k < bins; ++k)
                row.push_back(l.at(static_cast<std::size_t>(src), k));
        }
        out[t] = std::move(row);
    }
    return out;
}

Vector nat_estimate(const LpsSequence& l, std::size_t lead_frames) {
    require(lead_frames >= 1, "need at least one lead frame");
    require(lead_frames <= l.frames, "lead frames exceed sequence length");
    const std::size_t bins = l.config.bins();
    Vector out(bins, 0.0);
    for (std::size_t t = 0; t < lead_frames; ++t)
        for (std::size_t k = 0; k < bins; ++k) out[k] += l.at(t, k);
    for (double& v : out) v /= static_cast<double>(lead_frames);
    return out;
}

LpsSequence gv_equalize(const LpsSequence& l, const GvStats& gv) {
    gv.validate();
    require(gv.reference_std.size() == l.config.bins(), "gv dims must match bin count");
    const std::size_t bins = l.config.bins();

    Vector mean(bins, 0.0);
    for (std::size_t t = 0; t < l.frames; ++t)
        for (std::size_t k = 0; k < bins; ++k) mean[k] += l.at(t, k);
    for (double& m : mean) m /= static_cast<double>(l.frames);

    LpsSequence out = l;
    for (std::size_t t = 0; t < l.frames; ++t)
        for (std::size_t k = 0; k < bins; ++k) {
            const double scale = gv.reference_std[k] / gv.produced_std[k];
            out.at(t, k) = (l.at(t, k) - mean[k]) * scale + mean[k];
        }
    return out;
}

} // namespace v2v
