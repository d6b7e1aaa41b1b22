#include "v2v/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

namespace v2v {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for reading: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error("read failure on file: " + path);
    return bytes;
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open file for writing: " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw Error("write failure on file: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot finalize file: " + path);
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::array<std::uint8_t, 32> digest256(const std::string& bytes) {
    static constexpr std::uint64_t kBases[4] = {
        0xCBF29CE484222325ULL,
        0x9E3779B97F4A7C15ULL,
        0xD6E8FEB86659FD93ULL,
        0xA5A3564E1B9F2D07ULL,
    };
    std::array<std::uint8_t, 32> out{};
    for (int lane = 0; lane < 4; ++lane) {
        // Lane index is mixed in first so identical bases on identical bytes
        // cannot collapse the four words into copies of one hash.
        std::uint64_t h = kBases[lane] ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(lane + 1));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        for (int i = 0; i < 8; ++i)
            out[static_cast<std::size_t>(lane * 8 + i)] =
                static_cast<std::uint8_t>((h >> (8 * i)) & 0xFF);
    }
    return out;
}

std::string hex_string(const std::uint8_t* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xF]);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc())
        throw Error("cannot format floating point value");
    return std::string(buf, res.ptr);
}

} // namespace v2v
