#pragma once

#include <string>
#include <vector>

#include "v2v/numerics.hpp"

namespace v2v {

enum class LossKind { Mae, Mse, Ld, Gd };

LossKind loss_kind_from_string(const std::string& name);
const char* to_string(LossKind kind);

/// Per-dimension positive scales for the Laplacian/Gaussian loss variants.
class AlphaVector {
public:
    explicit AlphaVector(Vector alpha) : alpha_(std::move(alpha)) {
        require(!alpha_.empty(), "AlphaVector: must not be empty");
        for (double a : alpha_)
            require(a > 0.0, "AlphaVector: every entry must be positive");
    }

    static AlphaVector unit(std::size_t dim) { return AlphaVector(Vector(dim, 1.0)); }

    std::size_t dim() const { return alpha_.size(); }
    const Vector& values() const { return alpha_; }

    /// Sum of ln(alpha_m); the additive term the scaled losses carry.
    double log_sum() const;

private:
    Vector alpha_;
};

/// N predicted vectors paired with N targets, all of one dimension.
struct SampleBatch {
    std::vector<Vector> predictions;
    std::vector<Vector> targets;

    std::size_t size() const { return predictions.size(); }
    std::size_t dim() const { return predictions.empty() ? 0 : predictions.front().size(); }

    void validate() const;
};

/// (1/N) sum of L1 distances between predictions and targets.
double mae(const SampleBatch& batch);

/// (1/N) sum of squared L2 distances between predictions and targets.
double mse(const SampleBatch& batch);

/// Laplacian-model loss: mae(batch) + N * sum_m ln(alpha_m).
double ld_loss(const SampleBatch& batch, const AlphaVector& alpha);

/// Gaussian-model loss: mse(batch) + N * sum_m ln(alpha_m).
double gd_loss(const SampleBatch& batch, const AlphaVector& alpha);

/// Evaluate the batch loss of the given kind. Ld/Gd require alpha.
double batch_loss(LossKind kind, const SampleBatch& batch, const AlphaVector* alpha);

/// Gradient of the batch loss w.r.t. one prediction, where the batch holds
/// n_batch samples. Mae/Ld: sign(pred - tgt)/n_batch with sign(0) := 0.
/// Mse/Gd: 2(pred - tgt)/n_batch. The alpha terms are constant in the
/// predictions and contribute nothing.
Vector loss_gradient(LossKind kind, const Vector& prediction, const Vector& target,
                     std::size_t n_batch, const AlphaVector* alpha = nullptr);

} // namespace v2v
