#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "v2v/error.hpp"
#include "v2v/numerics.hpp"

namespace v2v {

struct Waveform {
    Vector samples;
    int sample_rate = 0;

    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

struct StftConfig {
    int sample_rate = 0;
    std::size_t fft_size = 0;
    std::size_t hop = 0;

    std::size_t bins() const { return fft_size / 2 + 1; }
    void validate() const;
};

/// Complex STFT cells, frame-major: cell (t, k) is frame t, bin k.
struct Spectrogram {
    std::vector<std::complex<double>> cells;
    std::size_t frames = 0;
    StftConfig config;

    std::complex<double>& at(std::size_t t, std::size_t k) {
        return cells[t * config.bins() + k];
    }
    const std::complex<double>& at(std::size_t t, std::size_t k) const {
        return cells[t * config.bins() + k];
    }
};

/// Log power spectrum cells, same frame-major layout as Spectrogram.
struct LpsSequence {
    Vector cells;
    std::size_t frames = 0;
    StftConfig config;

    double& at(std::size_t t, std::size_t k) { return cells[t * config.bins() + k]; }
    double at(std::size_t t, std::size_t k) const { return cells[t * config.bins() + k]; }
};

/// Per-bin normalization statistics. std entries are clamped to >= 1e-6
/// when fitted so apply/invert never divide by (near) zero.
struct NormStats {
    Vector mean;
    Vector std;

    std::size_t dim() const { return mean.size(); }
    void validate() const;
};

/// Global variance equalization statistics: per-bin standard deviations of
/// the reference (clean training) LPS and of the produced (enhanced) LPS.
struct GvStats {
    Vector reference_std;
    Vector produced_std;

    void validate() const;
};

/// In-place radix-2 FFT. Size must be a power of two. Forward transform is
/// unnormalized; inverse divides by N.
void fft_radix2(std::vector<std::complex<double>>& data, bool inverse);

/// Periodic Hann window of length n: 0.5 * (1 - cos(2*pi*i/n)).
Vector hann_window(std::size_t n);

Spectrogram stft(const Waveform& w, const StftConfig& cfg);

/// Weighted overlap-add resynthesis. Magnitudes come from `spec`, phases
/// from `phase_source` (unit phase 1 where a source cell is exactly zero).
/// Output length is (frames - 1) * hop + fft_size.
Waveform overlap_add(const Spectrogram& spec, const Spectrogram& phase_source,
                     const StftConfig& cfg);

/// ln(max(|z|^2, floor)) per cell.
LpsSequence lps(const Spectrogram& spec, double floor = 1e-10);

/// Rebuild complex cells with magnitude exp(l/2) and phase taken from
/// `phase_source`.
Spectrogram lps_to_spectrogram(const LpsSequence& l, const Spectrogram& phase_source);

NormStats fit_norm(const std::vector<LpsSequence>& seqs);
LpsSequence apply_norm(const LpsSequence& l, const NormStats& stats);
LpsSequence invert_norm(const LpsSequence& l, const NormStats& stats);

/// Per-bin population standard deviation over frames, clamped to >= 1e-6.
Vector per_bin_std(const LpsSequence& l);

/// Frame-stacked context windows of odd width centered on each frame, edge
/// frames replicated. Each output vector has width * bins entries ordered
/// oldest frame first.
std::vector<Vector> make_context(const LpsSequence& l, std::size_t width);

/// Noise estimate: per-bin mean over the first lead_frames frames.
Vector nat_estimate(const LpsSequence& l, std::size_t lead_frames);

/// Rescale each bin's deviation around its own mean by
/// reference_std / produced_std.
LpsSequence gv_equalize(const LpsSequence& l, const GvStats& gv);

} // namespace v2v
