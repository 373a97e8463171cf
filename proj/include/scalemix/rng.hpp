#pragma once

#include <array>
#include <cstdint>

namespace scalemix {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// Pure function of (key, counter); no hidden state.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key) noexcept;
};

/// SplitMix64 finalizer, used to derive substream identifiers.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// A reproducible random stream identified by (seed, stream id).
///
/// Block i of the stream is Philox(key = seed, counter = {i_lo, i_hi, id_lo, id_hi}),
/// so every stream is an independent, platform-independent sequence. Child streams
/// are derived by hashing a tag into the id, which gives each (replicate, year,
/// purpose) triple its own stream regardless of evaluation order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
      : seed_(seed), id_(stream_id) {}

  [[nodiscard]] RandomStream child(std::uint64_t tag) const noexcept {
    return RandomStream(seed_, mix64(id_ ^ mix64(tag + 0x632BE59BD9B4E019ULL)));
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t id() const noexcept { return id_; }

  std::uint32_t next_u32() noexcept;
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  /// Gamma(shape, rate) by Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape, double rate);

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Well-known purpose tags for substream derivation.
namespace stream_tag {
inline constexpr std::uint64_t kRField = 0x5246;       // "RF"
inline constexpr std::uint64_t kWField = 0x5746;       // "WF"
inline constexpr std::uint64_t kRMixing = 0x524d;      // "RM"
inline constexpr std::uint64_t kWMixing = 0x574d;      // "WM"
inline constexpr std::uint64_t kParameters = 0x5041;   // "PA"
inline constexpr std::uint64_t kWeights = 0x5745;      // "WE"
inline constexpr std::uint64_t kShuffle = 0x5348;      // "SH"
inline constexpr std::uint64_t kSplit = 0x5350;        // "SP"
inline constexpr std::uint64_t kYear = 0x5952;         // "YR"
inline constexpr std::uint64_t kReplicate = 0x5245;    // "RE"
}  // namespace stream_tag

}  // namespace scalemix
