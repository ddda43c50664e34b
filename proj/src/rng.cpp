#include "mvpmcmc/rng.hpp"

#include <cmath>
#include <numbers>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

StreamSeed StreamSeed::root(std::uint64_t seed) {
  return {mix64(seed), mix64(seed ^ 0x6A09E667F3BCC909ull)};
}

StreamSeed StreamSeed::derive(std::string_view label, std::uint64_t index) const {
  const std::uint64_t a = mix64(lo ^ fnv1a(label));
  const std::uint64_t b = mix64((hi + index * 0x9E3779B97F4A7C15ull) ^ a);
  return {mix64(a ^ rotl(b, 31)), mix64(b + a * 0xD6E8FEB86659FD93ull)};
}

StreamKey::StreamKey(std::uint64_t root_seed)
    : root_seed_(root_seed), seed_(StreamSeed::root(root_seed)) {}

StreamKey StreamKey::derive(std::string_view label, std::uint64_t index) const {
  if (label.empty()) {
    throw Error(ErrorKind::Domain, "domain", "stream label must be nonempty");
  }
  StreamKey child = *this;
  child.path_.emplace_back(std::string(label), index);
  child.seed_ = seed_.derive(label, index);
  return child;
}

RandStream::RandStream(const StreamSeed& seed)
    : seed_(seed),
      key_{static_cast<std::uint32_t>(seed.lo), static_cast<std::uint32_t>(seed.lo >> 32)} {}

void RandStream::refill() {
  block_ = philox4x32({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                       static_cast<std::uint32_t>(seed_.hi), static_cast<std::uint32_t>(seed_.hi >> 32)},
                      key_);
  ++counter_;
  block_pos_ = 0;
}

std::uint64_t RandStream::next_u64() {
  if (block_pos_ > 2) refill();
  const std::uint64_t v = (static_cast<std::uint64_t>(block_[block_pos_]) << 32) | block_[block_pos_ + 1];
  block_pos_ += 2;
  return v;
}

double RandStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

void RandStream::fill_gaussian(std::span<double> out, double variance) {
  if (!(variance > 0.0)) {
    throw Error(ErrorKind::Domain, "domain", "gaussian variance must be positive");
  }
  const double sd = std::sqrt(variance);
  for (double& v : out) v = sd * normal();
}

std::vector<double> gaussian_vector(RandStream& s, std::size_t dim, double scale) {
  if (dim == 0) throw Error(ErrorKind::Domain, "domain", "gaussian_vector needs dim >= 1");
  std::vector<double> out(dim);
  s.fill_gaussian(out, scale);
  return out;
}

}  // namespace mvpmcmc
