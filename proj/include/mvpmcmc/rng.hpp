#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mvpmcmc {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Maps a 128-bit counter under a 64-bit key to 128 bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// 128-bit digest of a stream path. Child digests are a deterministic
/// function of (parent digest, label, index).
struct StreamSeed {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  static StreamSeed root(std::uint64_t seed);
  StreamSeed derive(std::string_view label, std::uint64_t index) const;

  friend bool operator==(const StreamSeed&, const StreamSeed&) = default;
};

/// Hierarchical stream identifier: root seed plus an ordered path of
/// (label, index) pairs, e.g. [("level",3),("chain",0),("iter",412)].
class StreamKey {
 public:
  using Component = std::pair<std::string, std::uint64_t>;

  explicit StreamKey(std::uint64_t root_seed);

  /// Appends (label, index). Throws a domain error on an empty label.
  StreamKey derive(std::string_view label, std::uint64_t index) const;

  std::uint64_t root_seed() const { return root_seed_; }
  const std::vector<Component>& path() const { return path_; }
  const StreamSeed& seed() const { return seed_; }

  friend bool operator==(const StreamKey& a, const StreamKey& b) {
    return a.root_seed_ == b.root_seed_ && a.path_ == b.path_;
  }

 private:
  std::uint64_t root_seed_;
  std::vector<Component> path_;
  StreamSeed seed_;
};

/// Counter-based generator bound to one stream. Value type; copying a stream
/// copies its position. Draw order within a stream is deterministic and no
/// state is shared between streams.
class RandStream {
 public:
  explicit RandStream(const StreamSeed& seed);
  explicit RandStream(const StreamKey& key) : RandStream(key.seed()) {}

  /// Independent child stream; equals RandStream(key.derive(label, index)).
  RandStream child(std::string_view label, std::uint64_t index) const {
    return RandStream(seed_.derive(label, index));
  }

  const StreamSeed& seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller; the second variate of each pair is cached).
  double normal();
  /// Fills `out` with i.i.d. N(0, variance). Throws a domain error for variance <= 0.
  void fill_gaussian(std::span<double> out, double variance);

 private:
  void refill();

  StreamSeed seed_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// `dim` i.i.d. draws of N(0, scale); `scale` is the variance.
std::vector<double> gaussian_vector(RandStream& s, std::size_t dim, double scale);

}  // namespace mvpmcmc
