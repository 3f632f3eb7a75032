#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ballmatch {

// Philox4x32-10 counter-based generator. Stateless: every draw is a pure
// function of (key, counter), which keeps phantom generation reproducible
// across platforms and trivially parallel.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter round10(Counter ctr, Key key) {
        for (int i = 0; i < 10; ++i) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }
};

// Sequential view over a Philox stream. `stream` separates independent
// substreams of the same seed (blob geometry, rotation, noise, ...).
class PhiloxStream {
public:
    explicit PhiloxStream(std::uint64_t seed, std::uint32_t stream = 0)
        : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          m_stream(stream) {}

    std::uint32_t next_u32() {
        if (m_lane == 4) {
            m_block = Philox4x32::round10({m_ctr, 0, m_stream, 0}, m_key);
            ++m_ctr;
            m_lane = 0;
        }
        return m_block[m_lane++];
    }

    // Uniform in (0,1]; never 0, so it is safe under log().
    double next_unit() {
        return (static_cast<double>(next_u32()) + 1.0) * 0x1p-32;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Box-Muller; spelled out so the distribution is pinned, not
    // implementation-defined like std::normal_distribution.
    double next_gaussian() {
        if (m_have_spare) {
            m_have_spare = false;
            return m_spare;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        m_spare = r * std::sin(a);
        m_have_spare = true;
        return r * std::cos(a);
    }

    int next_int(int lo, int hi) {  // inclusive range
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>((static_cast<std::uint64_t>(next_u32()) * span) >> 32);
    }

private:
    Philox4x32::Key m_key;
    std::uint32_t m_stream;
    std::uint32_t m_ctr = 0;
    Philox4x32::Counter m_block{};
    int m_lane = 4;
    double m_spare = 0.0;
    bool m_have_spare = false;
};

inline constexpr const char* kGeneratorName = "philox4x32-10";

}  // namespace ballmatch
