#pragma once

#include <array>
#include <cstdint>

namespace bspcop {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, stream id); the n-th output block is a pure
/// function of (seed, stream, n), so independent streams need no coordination and
/// any dataset can be regenerated on its own. Satisfies UniformRandomBitGenerator.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;

  /// Uniform double on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;

  /// Raw block function, exposed for tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;  // 32-bit words consumed from buffer_
};

}  // namespace bspcop
