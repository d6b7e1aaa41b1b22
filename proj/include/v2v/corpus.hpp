#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "v2v/dsp.hpp"
#include "v2v/error.hpp"
#include "v2v/numerics.hpp"

namespace v2v {

Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

/// Synthetic voiced utterance: 3..6 harmonics on a random fundamental in
/// [100, 300] Hz, slow amplitude modulation, alternating voice/silence
/// segments, peak normalized to 0.5. Deterministic in the seed.
Waveform synth_clean(double duration_s, int sample_rate, std::uint64_t seed);

enum class NoiseKind { White, Pink, FilteredBabble, File };

NoiseKind noise_kind_from_string(const std::string& s);
std::string to_string(NoiseKind k);

struct MixSpec {
    double snr_db = 0.0;
    NoiseKind noise_kind = NoiseKind::White;
    std::uint64_t seed = 0;
    std::string noise_path; // File kind only
};

struct ManifestRow {
    std::string id;
    MixSpec mix;
};

struct CorpusManifest {
    std::vector<ManifestRow> rows;
    std::string split;   // "train" or "test"
    std::string profile; // stft profile name

    void validate() const; // nonempty, unique ids
};

/// Generate `n` samples of the given noise kind. File noise is read from
/// spec.noise_path and tiled when shorter than n.
Waveform make_noise(const MixSpec& spec, std::size_t n, int sample_rate);

/// Scale noise so the clean/noise power ratio over the clean signal's
/// active region hits snr_db, then add. Noise shorter than clean is tiled.
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

/// Measured SNR in dB of (clean, scaled-noise) over the clean active
/// region; the oracle counterpart of mix_at_snr.
double measure_snr_db(const Waveform& clean, const Waveform& noise_component);

struct UtterancePair {
    Waveform clean;
    Waveform noisy;
};

/// Realize one manifest row: clean from corpus_dir/clean/<id>.wav when
/// present, otherwise synthesized; noise per MixSpec; mixed at the
/// requested SNR; pair rescaled when the mix peaks above 0.999.
UtterancePair realize_utterance(const ManifestRow& row, int sample_rate,
                                double base_duration_s, const std::string& corpus_dir);

/// Tab-separated manifest rows: <id>\t<noise_kind>\t<snr_db>\t<seed>.
/// File-kind noise uses the token file:<path>. '#' lines are comments.
CorpusManifest parse_manifest(const std::string& text);
std::string manifest_text(const CorpusManifest& m);
CorpusManifest load_manifest(const std::string& path);

struct FeatureShard {
    std::size_t rows = 0;
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::vector<float> inputs;  // rows x d_in, row-major
    std::vector<float> targets; // rows x d_out, row-major
    std::array<std::uint8_t, 32> provenance{};

    void validate() const;
};

enum class NormMode { Global, PerUtterance };

struct DatasetOptions {
    StftConfig stft;
    std::size_t context = 3;
    bool nat = false;
    std::size_t nat_lead = 6;
    NormMode norm = NormMode::Global;
    double base_duration_s = 1.0;
    std::string corpus_dir; // empty → fully synthetic

    // When set, normalization reuses these statistics instead of fitting
    // new ones (test shards must reuse the training statistics).
    const NormStats* input_stats = nullptr;
    const NormStats* target_stats = nullptr;
};

struct DatasetBundle {
    FeatureShard shard;
    NormStats input_stats;  // over noisy LPS
    NormStats target_stats; // over clean LPS
    GvStats gv;             // reference from clean LPS
};

DatasetBundle build_dataset(const CorpusManifest& manifest, const DatasetOptions& opts);

/// Binary shard file "V2VF": header, rows/d_in/d_out u32, 32-byte
/// provenance digest, then inputs and targets as little-endian f32.
void save_shard(const std::string& path, const FeatureShard& s);
FeatureShard load_shard(const std::string& path);

/// Binary stats file "V2VS": magic, version u32, dim u32, mean then std as
/// little-endian f64.
void save_stats(const std::string& path, const NormStats& s);
NormStats load_stats(const std::string& path);

/// Binary gv stats file "V2VG": same layout with reference_std then
/// produced_std. Training writes one next to the model so enhancement can
/// equalize against the model's own output statistics.
void save_gv_stats(const std::string& path, const GvStats& g);
GvStats load_gv_stats(const std::string& path);

} // namespace v2v
