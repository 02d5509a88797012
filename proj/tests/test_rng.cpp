#include "doctest.h"

#include "fsmooth/rng.hpp"
#include "fsmooth/stats.hpp"

#include <set>
#include <vector>

using namespace fsmooth;

TEST_CASE("philox known-answer vectors") {
    using B = Philox4x32::Block;
    CHECK(Philox4x32::generate(B{0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("normal stream moments") {
    NormalStream s(StreamId{42, StreamPurpose::outer});
    std::vector<double> x(200000), x2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = s.normal();
        x2[i] = x[i] * x[i];
    }
    const auto m = mean_estimate(x);
    const auto v = mean_estimate(x2);
    CHECK(std::abs(m.mean) < 4.0 * m.std_error);
    CHECK(std::abs(v.mean - 1.0) < 4.0 * v.std_error);
}

TEST_CASE("uniforms lie in [0, 1)") {
    NormalStream s(StreamId{1, StreamPurpose::probe});
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("streams are reproducible and separated") {
    const StreamId a{7, StreamPurpose::inner, 3, 5, 11};
    NormalStream s1(a), s2(a);
    for (int i = 0; i < 10; ++i) CHECK(s1.normal() == s2.normal());
    NormalStream other(a.with_inner(12));
    NormalStream s3(a);
    CHECK(other.normal() != s3.normal());
    NormalStream outer(StreamId{7, StreamPurpose::outer, 3, 5, 11});
    CHECK(outer.fingerprint() != NormalStream(a).fingerprint());
}

TEST_CASE("restart audit: 10^4 restarts over distinct outer paths never collide") {
    std::set<std::uint64_t> seen;
    const StreamId base{2024, StreamPurpose::inner};
    for (std::uint32_t path = 0; path < 100; ++path)
        for (std::uint32_t restart = 0; restart < 100; ++restart)
            seen.insert(NormalStream(base.with_path(path).with_restart(restart)).fingerprint());
    CHECK(seen.size() == 10000);
}
