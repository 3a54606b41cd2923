#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace dic::detail {

//! Incremental FNV-1a (64-bit).
class Fnv1a {
public:
    void bytes(std::string_view s) {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= 0x100000001b3ULL;
        }
        u64(0xff); // separator so ("ab","c") != ("a","bc")
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xffU;
            h_ *= 0x100000001b3ULL;
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

} // namespace dic::detail
