#include "v2v/network.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "v2v/io.hpp"

namespace v2v {

namespace {

constexpr char kModelMagic[4] = {'V', '2', 'V', 'M'};
constexpr std::uint32_t kModelVersion = 1;

double act_prime(Activation a, double pre) {
    if (a == Activation::Linear) return 1.0;
    return pre > 0.0 ? 1.0 : 0.0; // ReLU subgradient, 0 at the kink
}

void apply_activation(Activation a, Vector& v) {
    if (a == Activation::ReLU)
        for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// Per-layer buffers reused across samples of a batch.
struct Trace {
    std::vector<Vector> pre; // pre-activation of each layer
    std::vector<Vector> act; // act[0] is the input, act[l+1] the layer output

    void resize(const Mlp& net) {
        pre.resize(net.layer_count());
        act.resize(net.layer_count() + 1);
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            pre[l].resize(net.layers()[l].out_dim());
            act[l + 1].resize(net.layers()[l].out_dim());
        }
    }
};

void forward_trace(const Mlp& net, const Vector& x, Trace& t) {
    t.act[0] = x;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Layer& layer = net.layers()[l];
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            double acc = layer.bias[r];
            const double* wr = layer.weights.data() + r * layer.in_dim();
            const double* in = t.act[l].data();
            for (std::size_t c = 0; c < layer.in_dim(); ++c) acc += wr[c] * in[c];
            t.pre[l][r] = acc;
        }
        t.act[l + 1] = t.pre[l];
        apply_activation(layer.activation, t.act[l + 1]);
    }
}

// delta holds dLoss/d(pre-activation) of layer l on entry.
void accumulate_layer_grads(const Mlp& net, const Trace& t, std::vector<Vector>& delta,
                            Gradients& g) {
    for (std::size_t li = net.layer_count(); li-- > 0;) {
        const Layer& layer = net.layers()[li];
        const Vector& in = t.act[li];
        Matrix& gw = g.weights[li];
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            const double d = delta[li][r];
            g.biases[li][r] += d;
            if (d == 0.0) continue;
            double* grow = gw.data() + r * layer.in_dim();
            for (std::size_t c = 0; c < layer.in_dim(); ++c) grow[c] += d * in[c];
        }
        if (li == 0) break;
        Vector& prev = delta[li - 1];
        std::fill(prev.begin(), prev.end(), 0.0);
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            const double d = delta[li][r];
            if (d == 0.0) continue;
            const double* wr = layer.weights.data() + r * layer.in_dim();
            for (std::size_t c = 0; c < layer.in_dim(); ++c) prev[c] += wr[c] * d;
        }
        const Layer& below = net.layers()[li - 1];
        for (std::size_t c = 0; c < below.out_dim(); ++c)
            prev[c] *= act_prime(below.activation, t.pre[li - 1][c]);
    }
}

Gradients zero_gradients(const Mlp& net) {
    Gradients g;
    g.weights.reserve(net.layer_count());
    g.biases.reserve(net.layer_count());
    for (const Layer& l : net.layers()) {
        g.weights.emplace_back(l.out_dim(), l.in_dim());
        g.biases.emplace_back(l.out_dim(), 0.0);
    }
    return g;
}

// The training loop is the one hot path in the library, so it gets its own
// engine: whole minibatches over flat row-major buffers, four rows at a
// time, which lets the compiler vectorize the inner loops. Per output
// element the accumulation order is exactly the per-sample order above
// (bias first, then ascending input index; samples in batch order), so a
// model trained through this path matches one trained sample by sample bit
// for bit. The per-sample routines stay as the reference implementation
// and serve the public API.
struct BatchEngine {
    std::size_t cap;                 // largest row count per call
    std::vector<Matrix> wt;          // weights transposed: in_dim x out_dim
    std::vector<Vector> pre;         // per layer, cap x out_dim
    std::vector<Vector> act;         // per layer, cap x out_dim after activation
    std::vector<Vector> delta;       // per layer, cap x out_dim
    std::vector<const double*> rows; // input row pointers for the current batch

    BatchEngine(const Mlp& net, std::size_t max_rows) : cap(max_rows) {
        for (const Layer& l : net.layers()) {
            wt.emplace_back(l.in_dim(), l.out_dim());
            pre.emplace_back(cap * l.out_dim());
            act.emplace_back(cap * l.out_dim());
            delta.emplace_back(cap * l.out_dim());
        }
        rows.resize(cap);
        sync(net);
    }

    // refresh the transposed mirror after a parameter update
    void sync(const Mlp& net) {
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            const Layer& layer = net.layers()[l];
            for (std::size_t r = 0; r < layer.out_dim(); ++r)
                for (std::size_t c = 0; c < layer.in_dim(); ++c)
                    wt[l](c, r) = layer.weights(r, c);
        }
    }

    // forward `n` rows already set in `rows`; fills pre and act per layer
    void forward(const Mlp& net, std::size_t n) {
        const double* const* in = rows.data();
        std::vector<const double*> next(n);
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            const Layer& layer = net.layers()[l];
            const std::size_t din = layer.in_dim();
            const std::size_t dout = layer.out_dim();
            double* p = pre[l].data();
            for (std::size_t b = 0; b < n; ++b)
                std::copy(layer.bias.begin(), layer.bias.end(), p + b * dout);
            const double* t = wt[l].data();
            std::size_t b = 0;
            for (; b + 4 <= n; b += 4) {
                const double* x0 = in[b];
                const double* x1 = in[b + 1];
                const double* x2 = in[b + 2];
                const double* x3 = in[b + 3];
                double* p0 = p + b * dout;
                double* p1 = p0 + dout;
                double* p2 = p1 + dout;
                double* p3 = p2 + dout;
                for (std::size_t c = 0; c < din; ++c) {
                    const double* w = t + c * dout;
                    const double a0 = x0[c], a1 = x1[c], a2 = x2[c], a3 = x3[c];
                    for (std::size_t k = 0; k < dout; ++k) {
                        const double wv = w[k];
                        p0[k] += a0 * wv;
                        p1[k] += a1 * wv;
                        p2[k] += a2 * wv;
                        p3[k] += a3 * wv;
                    }
                }
            }
            for (; b < n; ++b) {
                const double* x = in[b];
                double* pr = p + b * dout;
                for (std::size_t c = 0; c < din; ++c) {
                    const double* w = t + c * dout;
                    const double a = x[c];
                    for (std::size_t k = 0; k < dout; ++k) pr[k] += a * w[k];
                }
            }
            double* a = act[l].data();
            if (layer.activation == Activation::ReLU) {
                for (std::size_t i = 0; i < n * dout; ++i) a[i] = p[i] > 0.0 ? p[i] : 0.0;
            } else {
                std::copy(p, p + n * dout, a);
            }
            for (std::size_t r = 0; r < n; ++r) next[r] = a + r * dout;
            in = next.data();
        }
    }

    // delta.back() holds dLoss/d(pre) of the output layer on entry
    void backward(const Mlp& net, std::size_t n, Gradients& g) {
        for (std::size_t li = net.layer_count(); li-- > 0;) {
            const Layer& layer = net.layers()[li];
            const std::size_t din = layer.in_dim();
            const std::size_t dout = layer.out_dim();
            const double* d = delta[li].data();

            double* gb = g.biases[li].data();
            for (std::size_t b = 0; b < n; ++b) {
                const double* dr = d + b * dout;
                for (std::size_t r = 0; r < dout; ++r) gb[r] += dr[r];
            }

            double* gw = g.weights[li].data();
            const double* below = li > 0 ? act[li - 1].data() : nullptr;
            std::size_t b = 0;
            for (; b + 4 <= n; b += 4) {
                const double* i0 = li > 0 ? below + b * din : rows[b];
                const double* i1 = li > 0 ? i0 + din : rows[b + 1];
                const double* i2 = li > 0 ? i0 + 2 * din : rows[b + 2];
                const double* i3 = li > 0 ? i0 + 3 * din : rows[b + 3];
                for (std::size_t r = 0; r < dout; ++r) {
                    const double d0 = d[b * dout + r];
                    const double d1 = d[(b + 1) * dout + r];
                    const double d2 = d[(b + 2) * dout + r];
                    const double d3 = d[(b + 3) * dout + r];
                    if (d0 == 0.0 && d1 == 0.0 && d2 == 0.0 && d3 == 0.0) continue;
                    double* grow = gw + r * din;
                    // keep the adds sequential in sample order; folding them
                    // into one expression would round differently from the
                    // per-sample path
                    for (std::size_t c = 0; c < din; ++c) {
                        double acc = grow[c];
                        acc += d0 * i0[c];
                        acc += d1 * i1[c];
                        acc += d2 * i2[c];
                        acc += d3 * i3[c];
                        grow[c] = acc;
                    }
                }
            }
            for (; b < n; ++b) {
                const double* in = li > 0 ? below + b * din : rows[b];
                for (std::size_t r = 0; r < dout; ++r) {
                    const double dv = d[b * dout + r];
                    if (dv == 0.0) continue;
                    double* grow = gw + r * din;
                    for (std::size_t c = 0; c < din; ++c) grow[c] += dv * in[c];
                }
            }

            if (li == 0) break;

            double* q = delta[li - 1].data();
            std::fill(q, q + n * din, 0.0);
            const double* w = layer.weights.data();
            b = 0;
            for (; b + 4 <= n; b += 4) {
                double* q0 = q + b * din;
                double* q1 = q0 + din;
                double* q2 = q1 + din;
                double* q3 = q2 + din;
                for (std::size_t r = 0; r < dout; ++r) {
                    const double d0 = d[b * dout + r];
                    const double d1 = d[(b + 1) * dout + r];
                    const double d2 = d[(b + 2) * dout + r];
                    const double d3 = d[(b + 3) * dout + r];
                    if (d0 == 0.0 && d1 == 0.0 && d2 == 0.0 && d3 == 0.0) continue;
                    const double* wr = w + r * din;
                    for (std::size_t c = 0; c < din; ++c) {
                        const double wv = wr[c];
                        q0[c] += d0 * wv;
                        q1[c] += d1 * wv;
                        q2[c] += d2 * wv;
                        q3[c] += d3 * wv;
                    }
                }
            }
            for (; b < n; ++b) {
                double* qr = q + b * din;
                const double* dr = d + b * dout;
                for (std::size_t r = 0; r < dout; ++r) {
                    const double dv = dr[r];
                    if (dv == 0.0) continue;
                    const double* wr = w + r * din;
                    for (std::size_t c = 0; c < din; ++c) qr[c] += dv * wr[c];
                }
            }
            const Layer& lower = net.layers()[li - 1];
            if (lower.activation == Activation::ReLU) {
                const double* pb = pre[li - 1].data();
                for (std::size_t i = 0; i < n * din; ++i)
                    if (pb[i] <= 0.0) q[i] = 0.0;
            }
        }
    }

    // per-sample losses of `n` forwarded rows against target row pointers,
    // written to `out` in row order
    void sample_losses(const Mlp& net, const double* const* tgt, std::size_t n,
                       LossKind kind, double* out) const {
        const std::size_t dout = net.output_dim();
        const double* y = act.back().data();
        for (std::size_t b = 0; b < n; ++b) {
            const double* p = y + b * dout;
            const double* t = tgt[b];
            double s = 0.0;
            if (kind == LossKind::Mae || kind == LossKind::Ld) {
                for (std::size_t k = 0; k < dout; ++k) s += std::abs(p[k] - t[k]);
            } else {
                for (std::size_t k = 0; k < dout; ++k) {
                    const double r = p[k] - t[k];
                    s += r * r;
                }
            }
            out[b] = s;
        }
    }

    // fill the output-layer delta from forwarded rows and target pointers
    void output_delta(const Mlp& net, const double* const* tgt, std::size_t n,
                      LossKind kind, std::size_t n_batch) {
        const std::size_t dout = net.output_dim();
        const double inv_n = 1.0 / static_cast<double>(n_batch);
        const double* y = act.back().data();
        double* d = delta.back().data();
        // the output layer is linear by construction, so no act' factor
        for (std::size_t b = 0; b < n; ++b) {
            const double* p = y + b * dout;
            const double* t = tgt[b];
            double* db = d + b * dout;
            if (kind == LossKind::Mae || kind == LossKind::Ld) {
                for (std::size_t k = 0; k < dout; ++k) {
                    const double r = p[k] - t[k];
                    db[k] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_n;
                }
            } else {
                for (std::size_t k = 0; k < dout; ++k)
                    db[k] = 2.0 * (p[k] - t[k]) * inv_n;
            }
        }
    }
};

// Mean loss over the given index set through the batch engine, summed one
// sample at a time in index order, so the value is independent of the
// chunking.
double engine_split_loss(BatchEngine& eng, const Mlp& net, const std::vector<Vector>& inputs,
                         const std::vector<Vector>& targets,
                         const std::vector<std::size_t>& idx, LossKind kind,
                         const AlphaVector* alpha) {
    std::vector<const double*> tgt(eng.cap);
    std::vector<double> per_sample(eng.cap);
    double total = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += eng.cap) {
        const std::size_t stop = std::min(start + eng.cap, idx.size());
        const std::size_t n = stop - start;
        for (std::size_t i = 0; i < n; ++i) {
            eng.rows[i] = inputs[idx[start + i]].data();
            tgt[i] = targets[idx[start + i]].data();
        }
        eng.forward(net, n);
        eng.sample_losses(net, tgt.data(), n, kind, per_sample.data());
        for (std::size_t i = 0; i < n; ++i) total += per_sample[i];
    }
    double loss = total / static_cast<double>(idx.size());
    if (kind == LossKind::Ld || kind == LossKind::Gd)
        loss += static_cast<double>(idx.size()) * alpha->log_sum();
    return loss;
}

} // namespace

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        require(layer.in_dim() > 0 && layer.out_dim() > 0, "layer dims must be positive");
        require(layer.bias.size() == layer.out_dim(), "bias dim must match layer output dim");
        if (l > 0)
            require(layer.in_dim() == layers_[l - 1].out_dim(), "layer dims must chain");
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            require(std::isfinite(layer.weights.data()[i]), "weights must be finite");
        for (double b : layer.bias) require(std::isfinite(b), "biases must be finite");
    }
}

Mlp init_mlp(const std::vector<LayerSpec>& spec, std::uint64_t seed) {
    require(!spec.empty(), "network spec needs at least one layer");
    for (std::size_t l = 1; l < spec.size(); ++l)
        require(spec[l].in_dim == spec[l - 1].out_dim, "network spec must chain");
    require(spec.back().activation == Activation::Linear,
            "final layer activation must be linear");

    SeededRng rng(seed);
    std::vector<Layer> layers;
    layers.reserve(spec.size());
    for (const LayerSpec& s : spec) {
        require(s.in_dim > 0 && s.out_dim > 0, "layer dims must be positive");
        const double stddev = s.activation == Activation::ReLU
                                  ? std::sqrt(2.0 / static_cast<double>(s.in_dim))
                                  : std::sqrt(2.0 / static_cast<double>(s.in_dim + s.out_dim));
        Layer layer;
        layer.activation = s.activation;
        layer.weights = Matrix(s.out_dim, s.in_dim);
        layer.bias.assign(s.out_dim, 0.0);
        Vector draws = sample_standard_normal(rng, s.out_dim * s.in_dim);
        for (std::size_t i = 0; i < draws.size(); ++i)
            layer.weights.data()[i] = draws[i] * stddev;
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

Vector forward(const Mlp& net, const Vector& x) {
    require(net.layer_count() > 0, "network is empty");
    require(x.size() == net.input_dim(), "input dim mismatch");
    Trace t;
    t.resize(net);
    forward_trace(net, x, t);
    return t.act.back();
}

Gradients backward(const Mlp& net, const std::vector<Vector>& inputs,
                   const std::vector<Vector>& targets, LossKind kind,
                   const AlphaVector* alpha) {
    require(net.layer_count() > 0, "network is empty");
    require(!inputs.empty() && inputs.size() == targets.size(),
            "batch inputs/targets must be nonempty and the same length");
    if (kind == LossKind::Ld || kind == LossKind::Gd) {
        require(alpha != nullptr, "ld/gd losses need an alpha vector");
        require(alpha->dim() == net.output_dim(), "alpha dim must match network output dim");
    } else {
        require(alpha == nullptr, "alpha only applies to the ld/gd losses");
    }

    Gradients g = zero_gradients(net);
    Trace t;
    t.resize(net);
    std::vector<Vector> delta(net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l)
        delta[l].resize(net.layers()[l].out_dim());

    const std::size_t n = inputs.size();
    for (std::size_t i = 0; i < n; ++i) {
        require(inputs[i].size() == net.input_dim(), "input dim mismatch");
        require(targets[i].size() == net.output_dim(), "target dim mismatch");
        forward_trace(net, inputs[i], t);
        Vector grad = loss_gradient(kind, t.act.back(), targets[i], n, alpha);
        const Layer& last = net.layers().back();
        for (std::size_t r = 0; r < last.out_dim(); ++r)
            delta.back()[r] = grad[r] * act_prime(last.activation, t.pre.back()[r]);
        accumulate_layer_grads(net, t, delta, g);
    }
    return g;
}

Matrix input_jacobian(const Mlp& net, const Vector& x) {
    require(x.size() == net.input_dim(), "input dim mismatch");
    Trace t;
    t.resize(net);
    forward_trace(net, x, t);

    const std::size_t q = net.output_dim();
    Matrix jac(q, net.input_dim());
    Vector v, u;
    for (std::size_t i = 0; i < q; ++i) {
        const std::size_t last = net.layer_count() - 1;
        v.assign(q, 0.0);
        v[i] = act_prime(net.layers()[last].activation, t.pre[last][i]);
        for (std::size_t li = net.layer_count(); li-- > 0;) {
            const Layer& layer = net.layers()[li];
            u.assign(layer.in_dim(), 0.0);
            for (std::size_t r = 0; r < layer.out_dim(); ++r) {
                const double d = v[r];
                if (d == 0.0) continue;
                const double* wr = layer.weights.data() + r * layer.in_dim();
                for (std::size_t c = 0; c < layer.in_dim(); ++c) u[c] += wr[c] * d;
            }
            if (li == 0) break;
            v = u;
            for (std::size_t c = 0; c < v.size(); ++c)
                v[c] *= act_prime(net.layers()[li - 1].activation, t.pre[li - 1][c]);
        }
        for (std::size_t c = 0; c < net.input_dim(); ++c) jac(i, c) = u[c];
    }
    return jac;
}

void TrainConfig::validate() const {
    require(!layers.empty(), "training needs a network spec");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(lr_decay > 0.0 && lr_decay <= 1.0, "lr decay must be in (0,1]");
    require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0,1)");
    require(weight_decay >= 0.0, "weight decay cannot be negative");
    require(max_epochs >= 1, "need at least one epoch");
    require(batch_size >= 1, "batch size must be positive");
    require(validation_fraction > 0.0 && validation_fraction < 1.0,
            "validation fraction must be in (0,1)");
    require(patience >= 1, "patience must be at least 1");
}

TrainResult train(const std::vector<Vector>& inputs, const std::vector<Vector>& targets,
                  const TrainConfig& cfg) {
    cfg.validate();
    require(inputs.size() == targets.size(), "inputs/targets must be the same length");
    require(inputs.size() >= 10, "training needs at least 10 samples");

    Mlp net = init_mlp(cfg.layers, cfg.seed);
    const AlphaVector* alpha = nullptr;
    if (cfg.loss == LossKind::Ld || cfg.loss == LossKind::Gd) {
        require(cfg.alpha.has_value(), "ld/gd training needs an alpha vector");
        require(cfg.alpha->dim() == net.output_dim(),
                "alpha dim must match network output dim");
        alpha = &*cfg.alpha;
    }
    for (const Vector& x : inputs) require(x.size() == net.input_dim(), "input dim mismatch");
    for (const Vector& y : targets)
        require(y.size() == net.output_dim(), "target dim mismatch");

    const std::size_t n = inputs.size();
    SeededRng rng(cfg.seed ^ 0x5157ED5EED5EEDULL);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.next_below(i + 1)]);

    std::size_t n_val = static_cast<std::size_t>(
        std::floor(cfg.validation_fraction * static_cast<double>(n) + 0.5));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    std::vector<Matrix> vel_w;
    std::vector<Vector> vel_b;
    for (const Layer& l : net.layers()) {
        vel_w.emplace_back(l.out_dim(), l.in_dim());
        vel_b.emplace_back(l.out_dim(), 0.0);
    }

    TrainLog log;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Layer> best_layers = net.layers();
    std::size_t bad_streak = 0;

    BatchEngine eng(net, cfg.batch_size);
    Gradients g = zero_gradients(net);
    std::vector<const double*> batch_tgt(cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch));

        for (std::size_t i = train_idx.size() - 1; i > 0; --i)
            std::swap(train_idx[i], train_idx[rng.next_below(i + 1)]);

        for (std::size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, train_idx.size());
            const std::size_t nb = stop - start;
            for (std::size_t i = 0; i < nb; ++i) {
                eng.rows[i] = inputs[train_idx[start + i]].data();
                batch_tgt[i] = targets[train_idx[start + i]].data();
            }
            eng.forward(net, nb);
            eng.output_delta(net, batch_tgt.data(), nb, cfg.loss, nb);
            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                std::fill(g.weights[l].data(), g.weights[l].data() + g.weights[l].size(), 0.0);
                std::fill(g.biases[l].begin(), g.biases[l].end(), 0.0);
            }
            eng.backward(net, nb, g);
            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                Layer& layer = net.layers()[l];
                double* w = layer.weights.data();
                double* vw = vel_w[l].data();
                const double* gw = g.weights[l].data();
                for (std::size_t i = 0; i < layer.weights.size(); ++i) {
                    vw[i] = cfg.momentum * vw[i] -
                            lr * (gw[i] + cfg.weight_decay * w[i]);
                    w[i] += vw[i];
                }
                for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                    vel_b[l][i] = cfg.momentum * vel_b[l][i] - lr * g.biases[l][i];
                    layer.bias[i] += vel_b[l][i];
                }
            }
            eng.sync(net);
        }

        const double tr = engine_split_loss(eng, net, inputs, targets, train_idx, cfg.loss, alpha);
        const double va = engine_split_loss(eng, net, inputs, targets, val_idx, cfg.loss, alpha);
        const auto t1 = std::chrono::steady_clock::now();
        log.train_loss.push_back(tr);
        log.val_loss.push_back(va);
        log.wall_time_s.push_back(std::chrono::duration<double>(t1 - t0).count());

        if (!std::isfinite(tr) || !std::isfinite(va))
            throw TrainingDivergedError("non-finite loss during training", epoch);

        if (va < best_val) {
            best_val = va;
            best_layers = net.layers();
            log.best_epoch = epoch;
            bad_streak = 0;
        } else {
            ++bad_streak;
            if (bad_streak >= cfg.patience) {
                log.stop_reason = StopReason::EarlyStop;
                return {Mlp(std::move(best_layers)), std::move(log)};
            }
        }
    }
    log.stop_reason = StopReason::MaxEpochs;
    return {Mlp(std::move(best_layers)), std::move(log)};
}

void save_model(const std::string& path, const Mlp& net) {
    require(net.layer_count() > 0, "cannot save an empty network");
    ByteWriter w;
    w.put_magic(kModelMagic);
    w.put_u32(kModelVersion);
    w.put_u32(static_cast<std::uint32_t>(net.layer_count()));
    for (const Layer& l : net.layers()) {
        w.put_u32(static_cast<std::uint32_t>(l.in_dim()));
        w.put_u32(static_cast<std::uint32_t>(l.out_dim()));
        w.put_u8(static_cast<std::uint8_t>(l.activation));
        for (std::size_t i = 0; i < l.weights.size(); ++i) w.put_f64(l.weights.data()[i]);
        for (double b : l.bias) w.put_f64(b);
    }
    atomic_write_file(path, w.bytes());
}

Mlp load_model(const std::string& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kModelMagic, "model header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kModelVersion)
        throw ParseError("unsupported model version " + std::to_string(version), version_at);
    const std::uint32_t count = r.u32();
    if (count == 0) throw ParseError("model has no layers", r.offset() - 4);

    std::vector<Layer> layers;
    std::size_t prev_out = 0;
    for (std::uint32_t l = 0; l < count; ++l) {
        const std::size_t dims_at = r.offset();
        const std::uint32_t in = r.u32();
        const std::uint32_t out = r.u32();
        if (in == 0 || out == 0) throw ParseError("zero layer dimension", dims_at);
        if (l > 0 && in != prev_out) throw ParseError("layer dims do not chain", dims_at);
        const std::size_t act_at = r.offset();
        const std::uint8_t act = r.u8();
        if (act > 1) throw ParseError("unknown activation code", act_at);

        Layer layer;
        layer.activation = static_cast<Activation>(act);
        layer.weights = Matrix(out, in);
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
            const std::size_t at = r.offset();
            const double v = r.f64();
            if (!std::isfinite(v)) throw ParseError("non-finite weight", at);
            layer.weights.data()[i] = v;
        }
        layer.bias.resize(out);
        for (std::size_t i = 0; i < out; ++i) {
            const std::size_t at = r.offset();
            const double v = r.f64();
            if (!std::isfinite(v)) throw ParseError("non-finite bias", at);
            layer.bias[i] = v;
        }
        prev_out = out;
        layers.push_back(std::move(layer));
    }
    if (r.remaining() != 0)
        throw ParseError("trailing bytes after model payload", r.offset());
    return Mlp(std::move(layers));
}

} // namespace v2v
