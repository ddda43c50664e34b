#include <doctest.h>

#include <cmath>

#include "mvpmcmc/error.hpp"
#include "mvpmcmc/rng.hpp"

using namespace mvpmcmc;

TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  const std::uint32_t f = 0xffffffffu;
  CHECK(philox4x32({f, f, f, f}, {f, f}) == std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST_CASE("stream keys record their path and are injective") {
  const StreamKey k(5);
  const auto kk = k.derive("level", 3).derive("chain", 0);
  REQUIRE(kk.path().size() == 2);
  CHECK(kk.path()[0] == StreamKey::Component{"level", 3});
  CHECK(kk.path()[1] == StreamKey::Component{"chain", 0});
  CHECK(k.derive("a", 1) == k.derive("a", 1));
  CHECK_FALSE(k.derive("a", 1) == k.derive("a", 2));
  CHECK_FALSE(k.derive("a", 1).seed() == k.derive("a", 2).seed());
  CHECK_FALSE(k.derive("a", 1).seed() == k.derive("b", 1).seed());
  CHECK_FALSE(StreamKey(5).seed() == StreamKey(6).seed());
  CHECK_THROWS_AS(k.derive("", 0), Error);
  // child() agrees with key derivation.
  RandStream a = RandStream(k).child("x", 4);
  RandStream b{k.derive("x", 4)};
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("gaussian draws: moments and determinism") {
  RandStream s{StreamKey(11).derive("g", 0)};
  const auto v = gaussian_vector(s, 1000000, 1.0);
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  CHECK(std::abs(m) < 0.004);

  RandStream s2{StreamKey(11).derive("g", 1)};
  const auto w = gaussian_vector(s2, 1000000, 0.25);
  double mw = 0.0, q = 0.0;
  for (double x : w) mw += x;
  mw /= static_cast<double>(w.size());
  for (double x : w) q += (x - mw) * (x - mw);
  q /= static_cast<double>(w.size() - 1);
  CHECK(std::abs(q / 0.25 - 1.0) < 0.01);

  RandStream s3{StreamKey(11).derive("g", 0)};
  CHECK(gaussian_vector(s3, 1000000, 1.0) == v);
  RandStream s4{StreamKey(11).derive("g", 0)};
  std::vector<double> z(3);
  CHECK_THROWS_AS(s4.fill_gaussian(z, 0.0), Error);
}

TEST_CASE("uniform draws: range, mean and determinism") {
  RandStream s{StreamKey(3).derive("u", 0)};
  double m = 0.0;
  bool in_range = true;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    in_range = in_range && u >= 0.0 && u < 1.0;
    m += u;
  }
  CHECK(in_range);
  CHECK(std::abs(m / n - 0.5) < 0.001);
  RandStream a{StreamKey(3).derive("u", 0)}, b{StreamKey(3).derive("u", 0)};
  CHECK(a.uniform() == b.uniform());
}

TEST_CASE("sibling streams are uncorrelated") {
  const RandStream root{StreamKey(9)};
  const int n = 200000;
  for (std::uint64_t i = 0; i < 4; ++i) {
    RandStream a = root.child("particle", i), b = root.child("particle", i + 1);
    double c = 0.0;
    for (int k = 0; k < n; ++k) c += a.normal() * b.normal();
    CHECK(std::abs(c / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
}
