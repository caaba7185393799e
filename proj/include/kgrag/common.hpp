#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

using NodeId = std::uint32_t;
using CommunityId = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. line() is 1-based, 0 when not applicable.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure talking to a remote model endpoint. status() is the HTTP status,
// or 0 when the connection itself failed.
class TransportError : public Error {
 public:
  TransportError(std::string endpoint, int status, const std::string& what)
      : Error(endpoint + " (status " + std::to_string(status) + "): " + what),
        endpoint_(std::move(endpoint)),
        status_(status) {}
  const std::string& endpoint() const noexcept { return endpoint_; }
  int status() const noexcept { return status_; }
  // Connection failures, throttling and server errors are worth retrying;
  // other client errors are not.
  bool retriable() const noexcept {
    return status_ == 0 || status_ == 408 || status_ == 429 || status_ >= 500;
  }

 private:
  std::string endpoint_;
  int status_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

// Case-folded, whitespace-collapsed, trimmed form used for all name lookups.
inline std::string collapse_whitespace(std::string_view text);

inline std::string canonicalize(std::string_view text) {
  std::string out = collapse_whitespace(text);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

// Whitespace runs become one space; leading/trailing whitespace is dropped.
inline std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

// SplitMix64 finalizer. Used to derive independent seeds from tuples.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Platform-independent generator: the engine is std::mt19937_64 (its output
// sequence is fixed by the standard) and the distributions are implemented
// here, since the standard library's distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool bit() { return (engine_() >> 63) != 0; }

  // Standard normal draw (Box-Muller, second value cached).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    double radius = std::sqrt(-2.0 * std::log(uniform()));
    double angle = kTwoPi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kgrag
