#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rise {

/// Error categories. These map one-to-one onto the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Parse = 3,
  Config = 4,
  Version = 5,
  Shape = 6,
  Numeric = 7,
  Internal = 8,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Seeded random stream. Wraps mt19937_64 with portable draws so that a
/// given seed yields the same values regardless of the standard library's
/// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  /// Draw an index from unnormalized non-negative weights.
  std::size_t categorical(const double* weights, std::size_t n);

  /// Child stream with a seed derived from this stream's root seed and a name.
  Rng split(std::string_view name) const;
  std::uint64_t seed() const noexcept { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Stable 64-bit seed derivation used for named sub-streams.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);

/// Fisher-Yates shuffle driven by Rng.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

/// Run body(i) for i in [0, n) on up to `jobs` threads. Exceptions from
/// workers are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& body);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

constexpr const char* kVersion = "0.1.0";

}  // namespace rise
