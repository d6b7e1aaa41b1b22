#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2v/corpus.hpp"
#include "v2v/dsp.hpp"
#include "v2v/losses.hpp"
#include "v2v/network.hpp"

namespace v2v {

/// Flat key = value run configuration. Two built-in profiles seed the
/// defaults: "desk" (8 kHz, fft 256, net 387-128-128-129) and "paper"
/// (16 kHz, fft 512, net 771-800x5-1600-257). Unknown keys and invalid
/// values are rejected at parse time.
class RunConfig {
public:
    static RunConfig defaults(const std::string& profile);
    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static std::vector<std::string> keys();

    /// Canonical echo: every key, one "key = value" line, sorted.
    /// Reparsing the echo reproduces this config exactly.
    std::string echo() const;

    // typed accessors
    const std::string& profile() const { return profile_; }
    LossKind train_loss() const { return train_loss_; }
    double learning_rate() const { return lr_; }
    double momentum() const { return momentum_; }
    std::size_t max_epochs() const { return max_epochs_; }
    std::size_t batch() const { return batch_; }
    std::uint64_t train_seed() const { return train_seed_; }
    std::size_t patience() const { return patience_; }
    double val_fraction() const { return val_fraction_; }
    double weight_decay() const { return weight_decay_; }
    double lr_decay() const { return lr_decay_; }

    std::uint64_t data_seed() const { return data_seed_; }
    std::size_t n_train() const { return n_train_; }
    std::size_t n_test() const { return n_test_; }
    const std::vector<double>& snr_train() const { return snr_train_; }
    const std::vector<double>& snr_test() const { return snr_test_; }
    double duration_s() const { return duration_s_; }
    const std::vector<NoiseKind>& noise_kinds() const { return noise_kinds_; }

    std::size_t context() const { return context_; }
    bool nat() const { return nat_; }
    std::size_t nat_lead() const { return nat_lead_; }
    NormMode norm_mode() const { return norm_; }
    bool gv() const { return gv_; }
    bool alpha_from_target_std() const { return alpha_target_std_; }

    std::size_t verify_trials() const { return verify_trials_; }
    std::size_t verify_draws() const { return verify_draws_; }
    std::size_t verify_instances() const { return verify_instances_; }
    std::size_t verify_pairs() const { return verify_pairs_; }
    std::size_t verify_train_utts() const { return verify_train_utts_; }
    std::size_t verify_train_epochs() const { return verify_train_epochs_; }

    // derived
    StftConfig stft() const;
    std::size_t bins() const { return stft().bins(); }
    std::size_t input_dim() const { return context_ * bins() + (nat_ ? bins() : 0); }
    std::vector<LayerSpec> net_spec() const;
    TrainConfig train_config() const; // layers and alpha filled by the caller

    /// Override both train.seed and data.seed (the --seed flag).
    void override_seed(std::uint64_t seed);

private:
    RunConfig() = default;
    void apply_profile(const std::string& profile);

    std::string profile_;
    LossKind train_loss_ = LossKind::Mae;
    double lr_ = 0.001;
    double momentum_ = 0.4;
    std::size_t max_epochs_ = 20;
    std::size_t batch_ = 128;
    std::uint64_t train_seed_ = 1;
    std::size_t patience_ = 1;
    double val_fraction_ = 0.1;
    double weight_decay_ = 0.0;
    double lr_decay_ = 1.0;

    std::uint64_t data_seed_ = 1234;
    std::size_t n_train_ = 200;
    std::size_t n_test_ = 40;
    std::vector<double> snr_train_{0.0, 5.0, 10.0, 15.0};
    std::vector<double> snr_test_{2.5, 7.5, 12.5, 17.5};
    double duration_s_ = 1.0;
    std::vector<NoiseKind> noise_kinds_{NoiseKind::White, NoiseKind::Pink,
                                        NoiseKind::FilteredBabble};

    std::size_t context_ = 3;
    bool nat_ = false;
    std::size_t nat_lead_ = 6;
    NormMode norm_ = NormMode::Global;
    bool gv_ = true;
    bool alpha_target_std_ = true;

    std::size_t verify_trials_ = 100000;
    std::size_t verify_draws_ = 100000;
    std::size_t verify_instances_ = 200;
    std::size_t verify_pairs_ = 1000;
    std::size_t verify_train_utts_ = 40;
    std::size_t verify_train_epochs_ = 8;

    int sample_rate_ = 8000;
    std::size_t fft_size_ = 256;
    std::vector<std::size_t> hidden_{128, 128};
};

} // namespace v2v
