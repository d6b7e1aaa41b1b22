#include "v2v/losses.hpp"

#include <cmath>

namespace v2v {

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "mae") return LossKind::Mae;
    if (name == "mse") return LossKind::Mse;
    if (name == "ld") return LossKind::Ld;
    if (name == "gd") return LossKind::Gd;
    throw ContractError("unknown loss kind: '" + name + "' (expected mae|mse|ld|gd)");
}

const char* to_string(LossKind kind) {
    switch (kind) {
    case LossKind::Mae: return "mae";
    case LossKind::Mse: return "mse";
    case LossKind::Ld: return "ld";
    case LossKind::Gd: return "gd";
    }
    return "?";
}

double AlphaVector::log_sum() const {
    double s = 0.0;
    for (double a : alpha_) s += std::log(a);
    return s;
}

void SampleBatch::validate() const {
    require(!predictions.empty(), "SampleBatch: must hold at least one sample");
    require(predictions.size() == targets.size(),
            "SampleBatch: predictions and targets must have equal length");
    const std::size_t q = predictions.front().size();
    require(q > 0, "SampleBatch: vectors must be nonempty");
    for (const auto& p : predictions)
        require(p.size() == q, "SampleBatch: all predictions must share one dimension");
    for (const auto& t : targets)
        require(t.size() == q, "SampleBatch: all targets must share the prediction dimension");
}

namespace {

double residual_l1(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s;
}

double residual_l2_sq(const Vector& x, const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

} // namespace

double mae(const SampleBatch& batch) {
    batch.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        s += residual_l1(batch.predictions[i], batch.targets[i]);
    return s / static_cast<double>(batch.size());
}

double mse(const SampleBatch& batch) {
    batch.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        s += residual_l2_sq(batch.predictions[i], batch.targets[i]);
    return s / static_cast<double>(batch.size());
}

double ld_loss(const SampleBatch& batch, const AlphaVector& alpha) {
    batch.validate();
    require(alpha.dim() == batch.dim(), "ld_loss: alpha dimension must match the batch");
    return mae(batch) + static_cast<double>(batch.size()) * alpha.log_sum();
}

double gd_loss(const SampleBatch& batch, const AlphaVector& alpha) {
    batch.validate();
    require(alpha.dim() == batch.dim(), "gd_loss: alpha dimension must match the batch");
    return mse(batch) + static_cast<double>(batch.size()) * alpha.log_sum();
}

double batch_loss(LossKind kind, const SampleBatch& batch, const AlphaVector* alpha) {
    switch (kind) {
    case LossKind::Mae: return mae(batch);
    case LossKind::Mse: return mse(batch);
    case LossKind::Ld:
        require(alpha != nullptr, "batch_loss: ld requires an alpha vector");
        return ld_loss(batch, *alpha);
    case LossKind::Gd:
        require(alpha != nullptr, "batch_loss: gd requires an alpha vector");
        return gd_loss(batch, *alpha);
    }
    throw ContractError("batch_loss: invalid kind");
}

Vector loss_gradient(LossKind kind, const Vector& prediction, const Vector& target,
                     std::size_t n_batch, const AlphaVector* alpha) {
    require(prediction.size() == target.size(), "loss_gradient: dimension mismatch");
    require(!prediction.empty(), "loss_gradient: vectors must be nonempty");
    require(n_batch >= 1, "loss_gradient: n_batch must be >= 1");
    if (kind == LossKind::Ld || kind == LossKind::Gd) {
        require(alpha == nullptr || alpha->dim() == prediction.size(),
                "loss_gradient: alpha dimension mismatch");
    }

    const double inv_n = 1.0 / static_cast<double>(n_batch);
    Vector g(prediction.size());
    if (kind == LossKind::Mae || kind == LossKind::Ld) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double d = prediction[i] - target[i];
            g[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
        }
    } else {
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = 2.0 * (prediction[i] - target[i]) * inv_n;
    }
    return g;
}

} // namespace v2v
