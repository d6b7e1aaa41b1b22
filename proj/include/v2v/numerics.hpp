#pragma once

#include <cstdint>
#include <vector>

#include "v2v/error.hpp"

namespace v2v {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        require(rows > 0 && cols > 0, "Matrix: rows and cols must be positive");
    }

    Matrix(std::size_t rows, std::size_t cols, Vector data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        require(rows > 0 && cols > 0, "Matrix: rows and cols must be positive");
        require(data_.size() == rows * cols, "Matrix: data size != rows*cols");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                t(c, r) = (*this)(r, c);
        return t;
    }

    /// L2 norm of one row.
    double row_norm(std::size_t r) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

/// Deterministic pseudo-random generator. The algorithm is xoshiro256**
/// seeded through splitmix64 and is fixed for the life of the project:
/// the same seed yields the same stream on every platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit();

    /// Uniform integer in [0, bound), bias removed by rejection.
    std::uint64_t next_below(std::uint64_t bound);

    /// Derive an independent child generator; used to give parallel or
    /// per-item work its own reproducible stream.
    SeededRng fork(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
};

/// Matrix-vector product. Requires m.cols == v.size().
Vector matvec(const Matrix& m, const Vector& v);

/// Largest singular value via power iteration on m^T m. The start vector is
/// drawn from SeededRng(0xA11CE) so repeated calls are deterministic.
/// Throws ConvergenceError (carrying the last iterate) after max_iter
/// iterations without the relative change dropping below tol.
double spectral_norm(const Matrix& m, double tol = 1e-12, int max_iter = 10000);

/// n i.i.d. standard normal draws via the Box-Muller transform (pairs are
/// consumed whole; an odd n discards the second half of the last pair).
Vector sample_standard_normal(SeededRng& rng, std::size_t n);

// Small vector helpers shared across modules.
double dot(const Vector& a, const Vector& b);
double l1_norm(const Vector& v);
double l2_norm(const Vector& v);
double l2_norm_sq(const Vector& v);

bool all_finite(const Vector& v);

} // namespace v2v
