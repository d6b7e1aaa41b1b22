#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "v2v/config.hpp"
#include "v2v/corpus.hpp"
#include "v2v/dsp.hpp"
#include "v2v/metrics.hpp"
#include "v2v/network.hpp"
#include "v2v/theory.hpp"

namespace v2v {

struct CommandOutcome {
    int exit_code = 0;
    std::vector<std::string> artifacts;
};

/// Synthesize the configured corpus: clean and noisy WAVs for the train
/// and test splits, plus manifest_train.tsv / manifest_test.tsv.
CommandOutcome cmd_synth(const RunConfig& cfg, const std::string& out_dir);

/// Build train/test feature shards from the manifests in corpus_dir.
/// Writes train.v2vf, test.v2vf, input_stats.v2vs, target_stats.v2vs.
CommandOutcome cmd_features(const RunConfig& cfg, const std::string& corpus_dir,
                            const std::string& out_dir);

/// Train on a shard; writes model.v2vm, trainlog.tsv, and copies the
/// normalization stats (siblings of the shard) next to the model.
CommandOutcome cmd_train(const RunConfig& cfg, const std::string& shard_path,
                         const std::string& out_dir);

/// Enhance one noisy WAV with a trained model (stats read from the model's
/// directory) and write the result.
CommandOutcome cmd_enhance(const RunConfig& cfg, const std::string& model_path,
                           const std::string& noisy_wav, const std::string& out_wav);

/// Evaluate named models against the test split: feature-domain MAE/MSE on
/// the test shard and waveform STOI / segmental SNR against clean
/// references, alongside the unprocessed noisy baseline.
CommandOutcome cmd_eval(const RunConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& models,
                        const std::string& corpus_dir, const std::string& features_dir,
                        const std::string& out_dir);

/// Run one verification claim suite: lemma1, lemma2, theorem1, rademacher,
/// or losses-equivalence. Writes verify_<claim>.tsv; exit 0 iff every
/// report holds. Per-report PASS/FAIL lines are appended to log_lines.
CommandOutcome cmd_verify(const RunConfig& cfg, const std::string& claim,
                          const std::string& out_dir,
                          std::vector<std::string>* log_lines = nullptr);

/// The full enhancement chain on one utterance (shared by cmd_enhance and
/// cmd_eval): stft -> lps -> normalize -> context (+ noise appendix) ->
/// forward -> denormalize -> optional variance equalization -> magnitude
/// reconstruction with noisy phase -> overlap-add. gv may be null only when
/// the config has equalization off; trained model dirs carry gv_stats.v2vg.
Waveform enhance_waveform(const Waveform& noisy, const Mlp& net,
                          const NormStats& input_stats, const NormStats& target_stats,
                          const GvStats* gv, const RunConfig& cfg);

/// Map exceptions to the exit-code contract: v2v errors are validation
/// failures (1), anything else is an internal error (2). On success the
/// callable's outcome is returned unchanged. The error message, when any,
/// is stored into error_out.
CommandOutcome run_guarded(const std::function<CommandOutcome()>& fn, std::string* error_out);

} // namespace v2v
