#include "v2v/numerics.hpp"

#include <cmath>

namespace v2v {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t SeededRng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double SeededRng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
    require(bound > 0, "next_below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

SeededRng SeededRng::fork(std::uint64_t stream) const {
    std::uint64_t x = seed_ ^ 0xD1B54A32D192ED03ULL;
    std::uint64_t a = splitmix64(x);
    x ^= stream + 0x2545F4914F6CDD1DULL;
    std::uint64_t b = splitmix64(x);
    return SeededRng(a ^ rotl(b, 23) ^ stream);
}

double Matrix::row_norm(std::size_t r) const {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
        const double x = (*this)(r, c);
        s += x * x;
    }
    return std::sqrt(s);
}

Vector matvec(const Matrix& m, const Vector& v) {
    require(m.cols() == v.size(), "matvec: m.cols must equal v.dim");
    Vector out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        const double* row = m.data() + r * m.cols();
        for (std::size_t c = 0; c < m.cols(); ++c) s += row[c] * v[c];
        out[r] = s;
    }
    return out;
}

double spectral_norm(const Matrix& m, double tol, int max_iter) {
    require(tol > 0.0, "spectral_norm: tol must be positive");
    require(max_iter >= 1, "spectral_norm: max_iter must be >= 1");

    // Fixed-seed start vector keeps results reproducible across runs.
    SeededRng rng(0xA11CE);
    Vector v = sample_standard_normal(rng, m.cols());
    double vn = l2_norm(v);
    for (auto& x : v) x /= vn;

    const Matrix mt = m.transposed();
    double prev = -1.0;
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector mv = matvec(m, v);
        est = l2_norm(mv);
        if (est < 1e-300) return 0.0;
        if (prev >= 0.0 && std::abs(est - prev) <= tol * est) return est;
        prev = est;
        Vector w = matvec(mt, mv);
        const double wn = l2_norm(w);
        if (wn < 1e-300) return est;
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / wn;
    }
    throw ConvergenceError("spectral_norm: power iteration did not converge after " +
                               std::to_string(max_iter) + " iterations",
                           est, v);
}

Vector sample_standard_normal(SeededRng& rng, std::size_t n) {
    require(n >= 1, "sample_standard_normal: n must be >= 1");
    Vector out;
    out.reserve(n + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    while (out.size() < n) {
        const double u1 = 1.0 - rng.next_unit(); // in (0, 1]
        const double u2 = rng.next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out.push_back(r * std::cos(two_pi * u2));
        out.push_back(r * std::sin(two_pi * u2));
    }
    out.resize(n);
    return out;
}

double dot(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l1_norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double l2_norm(const Vector& v) {
    return std::sqrt(l2_norm_sq(v));
}

double l2_norm_sq(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace v2v
