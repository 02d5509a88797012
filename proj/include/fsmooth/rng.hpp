#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fsmooth {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// The output block is a pure function of (key, counter), so any substream can
// be reconstructed without replaying the others.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block counter, Key key) noexcept;
};

// What a stream is used for. Different purposes never share counters.
enum class StreamPurpose : std::uint32_t {
    outer = 1,
    inner = 2,
    probe = 3,
    oracle = 4,
    discretization = 5,
};

// Identity of one substream: (seed, purpose, path, restart, inner path).
// `restart` is limited to 24 bits; it is packed with the purpose tag.
struct StreamId {
    std::uint64_t seed = 0;
    StreamPurpose purpose = StreamPurpose::outer;
    std::uint32_t path = 0;
    std::uint32_t restart = 0;
    std::uint32_t inner = 0;

    [[nodiscard]] StreamId with_path(std::uint32_t p) const noexcept {
        StreamId s = *this;
        s.path = p;
        return s;
    }
    [[nodiscard]] StreamId with_restart(std::uint32_t r) const noexcept {
        StreamId s = *this;
        s.restart = r;
        return s;
    }
    [[nodiscard]] StreamId with_inner(std::uint32_t i) const noexcept {
        StreamId s = *this;
        s.inner = i;
        return s;
    }

    friend bool operator==(const StreamId&, const StreamId&) = default;
};

inline constexpr std::uint32_t kMaxRestart = (1u << 24) - 1;

// Standard normal and uniform variates drawn from one substream.
// Normals come from Box-Muller on two 53-bit uniforms, two per Philox block.
class NormalStream {
public:
    explicit NormalStream(const StreamId& id);

    double normal() noexcept;
    // Uniform on [0, 1).
    double uniform() noexcept;

    // First raw output of the stream; used by stream-collision audits.
    [[nodiscard]] std::uint64_t fingerprint() const noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_{};
    Philox4x32::Block counter_{};
    Philox4x32::Block block_{};
    int unused_words_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// 64-bit FNV-1a; used to name outputs and to key deterministic streams.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace fsmooth
