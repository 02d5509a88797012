#include "fsmooth/rng.hpp"

#include <cmath>
#include <numbers>

namespace fsmooth {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Block Philox4x32::generate(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

NormalStream::NormalStream(const StreamId& id) {
    key_ = {static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)};
    counter_ = {0u, id.inner, id.path,
                (static_cast<std::uint32_t>(id.purpose) << 24) | (id.restart & kMaxRestart)};
}

void NormalStream::refill() noexcept {
    block_ = Philox4x32::generate(counter_, key_);
    ++counter_[0];
    unused_words_ = 4;
}

double NormalStream::uniform() noexcept {
    if (unused_words_ < 2) refill();
    const int at = 4 - unused_words_;
    unused_words_ -= 2;
    return to_unit(block_[at], block_[at + 1]);
}

double NormalStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t NormalStream::fingerprint() const noexcept {
    const auto first = Philox4x32::generate({0u, counter_[1], counter_[2], counter_[3]}, key_);
    return static_cast<std::uint64_t>(first[0]) << 32 | first[1];
}

}  // namespace fsmooth
