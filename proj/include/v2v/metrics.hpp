#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "v2v/corpus.hpp"
#include "v2v/dsp.hpp"
#include "v2v/network.hpp"

namespace v2v {

struct EvalReport {
    double mae = 0.0;        // normalized feature domain
    double mse = 0.0;        // normalized feature domain
    double stoi = 0.0;       // [0, 1]
    double seg_snr_db = 0.0; // clamped segmental SNR average
    std::size_t utterance_count = 0;
};

/// Tab-separated one-line records; header carries the column names.
std::string eval_report_header();
std::string eval_report_line(const std::string& label, const EvalReport& r);

/// MAE and MSE of model predictions against shard targets, accumulated in
/// the same per-sample order the losses module uses.
std::pair<double, double> eval_features(const Mlp& model, const FeatureShard& shard);

/// Short-time objective intelligibility. Signals must share length and
/// rate; rate must be 8 or 16 kHz (resampled internally to 10 kHz). The
/// standard pipeline: silent-frame removal, 15 one-third-octave bands from
/// 150 Hz, 384 ms segments, normalized clipped correlation, clamped [0,1].
double stoi(const Waveform& clean, const Waveform& processed);

/// Mean over active frames of 10*log10(sum c^2 / sum (c-p)^2), each frame
/// clamped to [-10, 35] dB. Frames are non-overlapping `frame` samples.
double seg_snr(const Waveform& clean, const Waveform& processed, std::size_t frame = 256);

} // namespace v2v
