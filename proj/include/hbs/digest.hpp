#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hbs {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(const std::uint8_t* data, std::size_t len) {
    Digest out{};
    unsigned int n = 0;
    if (EVP_Digest(data, len, out.data(), &n, EVP_sha256(), nullptr) != 1 || n != out.size())
        throw std::runtime_error("sha256 failed");
    return out;
}

inline Digest sha256(std::string_view s) {
    return sha256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline Digest sha256(const std::vector<std::uint8_t>& bytes) {
    return sha256(bytes.data(), bytes.size());
}

// Hash of the concatenation of several digests, in argument order.
inline Digest sha256_concat(std::initializer_list<const Digest*> parts) {
    std::vector<std::uint8_t> buf;
    buf.reserve(parts.size() * 32);
    for (const Digest* p : parts) buf.insert(buf.end(), p->begin(), p->end());
    return sha256(buf);
}

inline bool digest_bit(const Digest& d, int i) {
    return (d[static_cast<std::size_t>(i / 8)] >> (7 - i % 8)) & 1u;
}

inline std::string to_hex(const Digest& d) {
    static const char* k = "0123456789abcdef";
    std::string s(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
        s[2 * i] = k[d[i] >> 4];
        s[2 * i + 1] = k[d[i] & 15];
    }
    return s;
}

inline Digest from_hex(std::string_view hex) {
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() != 64) throw std::invalid_argument("digest hex must have 64 characters");
    Digest d{};
    for (std::size_t i = 0; i < 32; ++i) {
        int hi = nib(hex[2 * i]), lo = nib(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit in digest");
        d[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return d;
}

// Deterministic opaque identifier built from a counter; used by generators.
inline Digest counter_id(std::uint64_t tag, std::uint64_t n) {
    std::uint8_t buf[16];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<std::uint8_t>(tag >> (56 - 8 * i));
        buf[8 + i] = static_cast<std::uint8_t>(n >> (56 - 8 * i));
    }
    return sha256(buf, sizeof buf);
}

}  // namespace hbs
