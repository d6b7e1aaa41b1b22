#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "v2v/error.hpp"

namespace v2v {

/// Append-only byte buffer with little-endian encoders.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }

    void put_u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }

    void put_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }

    void put_u16(std::uint16_t v) {
        buf_.push_back(static_cast<char>(v & 0xFF));
        buf_.push_back(static_cast<char>((v >> 8) & 0xFF));
    }

    void put_i16(std::int16_t v) { put_u16(static_cast<std::uint16_t>(v)); }

    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

    void put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

    void put_bytes(const void* data, std::size_t n) {
        buf_.append(static_cast<const char*>(data), n);
    }

    void put_magic(const char magic[4]) { buf_.append(magic, 4); }

    const std::string& bytes() const { return buf_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::string buf_;
};

/// Cursor over a byte buffer with little-endian decoders. Every accessor
/// throws ParseError carrying the current offset when data runs out.
class ByteReader {
public:
    explicit ByteReader(const std::string& bytes) : buf_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::uint8_t u8() {
        need(1, "u8");
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }

    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(byte(pos_ + i)) << (8 * i);
        pos_ += 2;
        return v;
    }

    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte(pos_ + i)) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte(pos_ + i)) << (8 * i);
        pos_ += 8;
        return v;
    }

    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    double f64() { return std::bit_cast<double>(u64()); }
    float f32() { return std::bit_cast<float>(u32()); }

    std::string bytes(std::size_t n, const char* what = "bytes") {
        need(n, what);
        std::string out = buf_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    void skip(std::size_t n, const char* what = "bytes") {
        need(n, what);
        pos_ += n;
    }

    void expect_magic(const char magic[4], const char* what) {
        const std::size_t at = pos_;
        if (bytes(4, what) != std::string(magic, 4))
            throw ParseError(std::string("bad magic, expected '") + std::string(magic, 4) +
                                 "' in " + what,
                             at);
    }

private:
    std::uint8_t byte(std::size_t i) const { return static_cast<std::uint8_t>(buf_[i]); }

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > buf_.size())
            throw ParseError(std::string("truncated input while reading ") + what, pos_);
    }

    const std::string& buf_;
    std::size_t pos_ = 0;
};

/// Read a whole file into memory. Throws v2v::Error when unreadable.
std::string read_file(const std::string& path);

/// Write bytes to "<path>.partial" and rename over path on success, so a
/// failed write never leaves a truncated artifact under the final name.
void atomic_write_file(const std::string& path, const std::string& bytes);

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t basis = 0xCBF29CE484222325ULL);

/// 32-byte provenance digest (four FNV-1a streams over the same bytes).
/// Deterministic identity for configs and manifests; not cryptographic.
std::array<std::uint8_t, 32> digest256(const std::string& bytes);

std::string hex_string(const std::uint8_t* data, std::size_t n);

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

} // namespace v2v
