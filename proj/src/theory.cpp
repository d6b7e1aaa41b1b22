#include "v2v/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "v2v/io.hpp"

namespace v2v {

namespace {

void put_vector(ByteWriter& w, const Vector& v) {
    w.put_u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) w.put_f64(x);
}

std::string digest_hex(const ByteWriter& w) {
    const auto d = digest256(w.bytes());
    return hex_string(d.data(), d.size());
}

TheoryReport bound_report(std::string claim, std::string digest, double lhs, double rhs) {
    TheoryReport r;
    r.claim = std::move(claim);
    r.inputs_digest = std::move(digest);
    r.lhs = lhs;
    r.rhs = rhs;
    r.holds = lhs <= rhs + kBoundTolerance;
    r.margin = rhs - lhs;
    return r;
}

TheoryReport violation_report(std::string claim, std::string digest, double lhs, double rhs) {
    TheoryReport r;
    r.claim = std::move(claim);
    r.inputs_digest = std::move(digest);
    r.lhs = lhs;
    r.rhs = rhs;
    r.holds = lhs > rhs;
    r.margin = lhs - rhs;
    return r;
}

void put_net(ByteWriter& w, const Mlp& net) {
    w.put_u32(static_cast<std::uint32_t>(net.layer_count()));
    for (const Layer& l : net.layers()) {
        w.put_u32(static_cast<std::uint32_t>(l.in_dim()));
        w.put_u32(static_cast<std::uint32_t>(l.out_dim()));
        w.put_u8(static_cast<std::uint8_t>(l.activation));
        for (std::size_t i = 0; i < l.weights.size(); ++i) w.put_f64(l.weights.data()[i]);
        for (double b : l.bias) w.put_f64(b);
    }
}

double parse_field_double(const std::string& line, std::size_t begin, std::size_t end) {
    double out = 0.0;
    auto res = std::from_chars(line.data() + begin, line.data() + end, out);
    if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw ParseError("malformed numeric field in report line", begin);
    return out;
}

} // namespace

std::string report_line(const TheoryReport& r) {
    std::string out;
    out += r.claim;
    out += '\t';
    out += r.inputs_digest;
    out += '\t';
    out += format_double(r.lhs);
    out += '\t';
    out += format_double(r.rhs);
    out += '\t';
    out += r.holds ? '1' : '0';
    out += '\t';
    out += format_double(r.margin);
    return out;
}

TheoryReport parse_report_line(const std::string& line) {
    std::vector<std::pair<std::size_t, std::size_t>> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
            fields.emplace_back(start, i);
            start = i + 1;
        }
    }
    if (fields.size() != 6)
        throw ParseError("report line must have 6 tab-separated fields", 0);

    TheoryReport r;
    r.claim = line.substr(fields[0].first, fields[0].second - fields[0].first);
    r.inputs_digest = line.substr(fields[1].first, fields[1].second - fields[1].first);
    if (r.claim.empty()) throw ParseError("empty claim id", 0);
    r.lhs = parse_field_double(line, fields[2].first, fields[2].second);
    r.rhs = parse_field_double(line, fields[3].first, fields[3].second);
    const std::string holds = line.substr(fields[4].first, fields[4].second - fields[4].first);
    if (holds != "0" && holds != "1")
        throw ParseError("holds field must be 0 or 1", fields[4].first);
    r.holds = holds == "1";
    r.margin = parse_field_double(line, fields[5].first, fields[5].second);
    return r;
}

std::vector<int> sample_signs(std::size_t n, SeededRng& rng) {
    require(n >= 1, "need at least one sign");
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (rng.next_u64() >> 63) ? 1 : -1;
    return out;
}

TheoryReport check_mae_lipschitz(const Vector& x1, const Vector& x2, const Vector& x) {
    require(x1.size() == x2.size() && x1.size() == x.size(), "dims must match");
    require(!x1.empty(), "vectors must be nonempty");

    double d1 = 0.0, d2 = 0.0, d12 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        d1 += std::abs(x1[i] - x[i]);
        d2 += std::abs(x2[i] - x[i]);
        d12 += std::abs(x1[i] - x2[i]);
    }

    ByteWriter w;
    w.put_magic("mael");
    put_vector(w, x1);
    put_vector(w, x2);
    put_vector(w, x);
    return bound_report("mae-lipschitz", digest_hex(w), std::abs(d1 - d2), d12);
}

TheoryReport construct_mse_violation(const Vector& x1, const Vector& x2) {
    require(x1.size() == x2.size() && !x1.empty(), "dims must match and be nonempty");
    const double n1 = l2_norm_sq(x1);
    const double n2 = l2_norm_sq(x2);
    require(n2 > n1, "construction needs ||x2||^2 > ||x1||^2");

    Vector x(x2.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * x2[i];

    double d1 = 0.0, d2 = 0.0, d12 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x1[i] - x[i];
        const double b = x2[i] - x[i];
        const double c = x1[i] - x2[i];
        d1 += a * a;
        d2 += b * b;
        d12 += c * c;
    }

    ByteWriter w;
    w.put_magic("msev");
    put_vector(w, x1);
    put_vector(w, x2);
    return violation_report("mse-violation", digest_hex(w), std::abs(d1 - d2), d12);
}

LipschitzEstimate lipschitz_upper(const Mlp& net) {
    require(net.layer_count() > 0, "network is empty");
    double hidden_product = 1.0;
    for (std::size_t l = 0; l + 1 < net.layer_count(); ++l)
        hidden_product *= spectral_norm(net.layers()[l].weights);

    const Layer& last = net.layers().back();
    LipschitzEstimate est;
    est.method = LipschitzMethod::SpectralUpper;
    est.probe_count = 0;
    est.per_output.resize(last.out_dim());
    for (std::size_t i = 0; i < last.out_dim(); ++i) {
        est.per_output[i] = last.weights.row_norm(i) * hidden_product;
        est.total += est.per_output[i];
    }
    return est;
}

LipschitzEstimate lipschitz_empirical(const Mlp& net, const std::vector<Vector>& probes) {
    require(net.layer_count() > 0, "network is empty");
    require(!probes.empty(), "need at least one probe input");

    LipschitzEstimate est;
    est.method = LipschitzMethod::EmpiricalSup;
    est.probe_count = probes.size();
    est.per_output.assign(net.output_dim(), 0.0);
    for (const Vector& p : probes) {
        require(p.size() == net.input_dim(), "probe dim mismatch");
        const Matrix jac = input_jacobian(net, p);
        for (std::size_t i = 0; i < net.output_dim(); ++i)
            est.per_output[i] = std::max(est.per_output[i], jac.row_norm(i));
    }
    for (double v : est.per_output) est.total += v;
    return est;
}

TheoryReport check_noise_bound(const Mlp& net, const Vector& x, const Vector& eta,
                               const Vector& target, const LipschitzEstimate& L) {
    require(x.size() == net.input_dim(), "input dim mismatch");
    require(eta.size() == x.size(), "noise dim must match input dim");
    require(target.empty() || target.size() == net.output_dim(),
            "target dim must match output dim");
    require(L.method == LipschitzMethod::SpectralUpper,
            "noise bound check needs the certified spectral upper bound; "
            "an empirical estimate is not sound here");
    require(L.per_output.size() == net.output_dim(), "estimate dim mismatch");

    const Vector ref = target.empty() ? Vector(net.output_dim(), 0.0) : target;
    Vector noisy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) noisy[i] = x[i] + eta[i];

    const Vector y0 = forward(net, x);
    const Vector y1 = forward(net, noisy);
    double h0 = 0.0, h1 = 0.0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        h0 += std::abs(y0[i] - ref[i]);
        h1 += std::abs(y1[i] - ref[i]);
    }

    ByteWriter w;
    w.put_magic("nois");
    put_net(w, net);
    put_vector(w, x);
    put_vector(w, eta);
    put_vector(w, ref);
    return bound_report("noise-bound", digest_hex(w), std::abs(h1 - h0),
                        L.total * l2_norm(eta));
}

FunctionFamily FunctionFamily::linear_ball(double radius, std::size_t in_dim,
                                           std::size_t out_dim) {
    require(radius > 0.0, "ball radius must be positive");
    require(in_dim >= 1 && out_dim >= 1, "dims must be positive");
    FunctionFamily f;
    f.radius_ = radius;
    f.in_dim_ = in_dim;
    f.out_dim_ = out_dim;
    return f;
}

FunctionFamily FunctionFamily::finite_set(std::vector<Mlp> members) {
    require(!members.empty(), "finite family must be nonempty");
    const std::size_t din = members.front().input_dim();
    const std::size_t dout = members.front().output_dim();
    for (const Mlp& m : members)
        require(m.input_dim() == din && m.output_dim() == dout,
                "family members must share dimensions");
    FunctionFamily f;
    f.in_dim_ = din;
    f.out_dim_ = dout;
    f.members_ = std::move(members);
    return f;
}

namespace {

// Per-member column of <1, f(x_i)> values, precomputed once.
std::vector<Vector> member_sums(const FunctionFamily& family,
                                const std::vector<Vector>& samples) {
    std::vector<Vector> sums(family.members().size(), Vector(samples.size(), 0.0));
    for (std::size_t m = 0; m < family.members().size(); ++m)
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Vector y = forward(family.members()[m], samples[i]);
            double s = 0.0;
            for (double v : y) s += v;
            sums[m][i] = s;
        }
    return sums;
}

double inner_sup(const FunctionFamily& family, const std::vector<Vector>& samples,
                 const std::vector<Vector>& sums, const std::vector<int>& signs) {
    const std::size_t n = samples.size();
    if (family.is_linear_ball()) {
        Vector acc(family.in_dim(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < acc.size(); ++k)
                acc[k] += static_cast<double>(signs[i]) * samples[i][k];
        return family.radius() / static_cast<double>(n) * l2_norm(acc);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const Vector& col : sums) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(signs[i]) * col[i];
        best = std::max(best, s / static_cast<double>(n));
    }
    return best;
}

void check_family_samples(const FunctionFamily& family, const std::vector<Vector>& samples) {
    require(!samples.empty(), "need at least one sample");
    for (const Vector& x : samples)
        require(x.size() == family.in_dim(), "sample dim must match family dim");
}

} // namespace

RademacherEstimate rademacher_mc(const std::vector<Vector>& samples,
                                 const FunctionFamily& family, std::size_t draws,
                                 SeededRng& rng) {
    check_family_samples(family, samples);
    require(draws >= 1, "need at least one draw");

    const std::vector<Vector> sums =
        family.is_linear_ball() ? std::vector<Vector>{} : member_sums(family, samples);

    // Welford's running moments. Naive sum/sumsq drifts by ~draws*eps even
    // on a constant stream, which is visible next to a std error of zero.
    double mean = 0.0, m2 = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const std::vector<int> signs = sample_signs(samples.size(), rng);
        const double v = inner_sup(family, samples, sums, signs);
        const double delta = v - mean;
        mean += delta / static_cast<double>(d + 1);
        m2 += delta * (v - mean);
    }

    RademacherEstimate est;
    est.draws = draws;
    est.exact = false;
    est.value = mean;
    if (draws > 1) {
        const double var = std::max(m2, 0.0) / static_cast<double>(draws - 1);
        est.std_error = std::sqrt(var / static_cast<double>(draws));
    }
    return est;
}

RademacherEstimate rademacher_exact(const std::vector<Vector>& samples,
                                    const FunctionFamily& family) {
    check_family_samples(family, samples);
    const std::size_t n = samples.size();
    if (n > 20)
        throw ContractError(
            "exact enumeration is limited to 20 samples; use rademacher_mc instead");

    const std::vector<Vector> sums =
        family.is_linear_ball() ? std::vector<Vector>{} : member_sums(family, samples);

    std::vector<int> signs(n);
    double total = 0.0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t bits = 0; bits < patterns; ++bits) {
        for (std::size_t i = 0; i < n; ++i)
            signs[i] = (bits >> i) & 1 ? 1 : -1;
        total += inner_sup(family, samples, sums, signs);
    }

    RademacherEstimate est;
    est.value = total / static_cast<double>(patterns);
    est.std_error = 0.0;
    est.draws = 0;
    est.exact = true;
    return est;
}

TheoryReport generalization_probe(const Mlp& net, const std::vector<Vector>& train_inputs,
                                  const std::vector<Vector>& train_targets,
                                  const std::vector<Vector>& held_inputs,
                                  const std::vector<Vector>& held_targets, LossKind kind,
                                  const AlphaVector* alpha, std::size_t draws,
                                  std::uint64_t seed) {
    require(!train_inputs.empty() && train_inputs.size() == train_targets.size(),
            "training set must be nonempty and aligned");
    require(!held_inputs.empty() && held_inputs.size() == held_targets.size(),
            "held-out set must be nonempty and aligned");

    auto set_loss = [&](const std::vector<Vector>& xs, const std::vector<Vector>& ys) {
        SampleBatch batch;
        batch.predictions.reserve(xs.size());
        batch.targets = ys;
        for (const Vector& x : xs) batch.predictions.push_back(forward(net, x));
        return batch_loss(kind, batch, alpha);
    };
    const double gap = std::abs(set_loss(held_inputs, held_targets) -
                                set_loss(train_inputs, train_targets));

    SeededRng rng(seed);
    std::vector<Mlp> snapshot{net};
    const RademacherEstimate rad =
        rademacher_mc(train_inputs, FunctionFamily::finite_set(std::move(snapshot)), draws, rng);
    const double rhs = std::max(rad.value, 0.0);

    ByteWriter w;
    w.put_magic("prob");
    put_net(w, net);
    w.put_u32(static_cast<std::uint32_t>(train_inputs.size()));
    w.put_u32(static_cast<std::uint32_t>(held_inputs.size()));
    w.put_u64(seed);

    TheoryReport r = bound_report(rad.value < 0.0 ? "generalization-probe[clamped]"
                                                  : "generalization-probe",
                                  digest_hex(w), gap, rhs);
    return r;
}

} // namespace v2v
