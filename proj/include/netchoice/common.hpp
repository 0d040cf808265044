#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace netchoice {

// Input or precondition problems. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular systems, divergence, ill-conditioning. CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Timestamp = std::int64_t;  // UTC seconds

inline constexpr Timestamp kSecondsPerDay = 86400;
inline constexpr double kDaysPerMonth = 30.44;

// Dense index for interned identifiers. Authors, sites and updates each get
// their own Dictionary, so the tag keeps them from being mixed up.
template <typename Tag>
struct Id {
  std::uint32_t value = std::numeric_limits<std::uint32_t>::max();

  constexpr bool valid() const { return value != std::numeric_limits<std::uint32_t>::max(); }
  friend constexpr auto operator<=>(Id, Id) = default;
};

struct AuthorTag {};
struct SiteTag {};
struct UpdateTag {};
using AuthorId = Id<AuthorTag>;
using SiteId = Id<SiteTag>;
using UpdateId = Id<UpdateTag>;

// Bidirectional string <-> dense id table.
template <typename IdT>
class Dictionary {
 public:
  IdT intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return IdT{it->second};
    auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return IdT{id};
  }

  std::optional<IdT> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return IdT{it->second};
  }

  const std::string& name(IdT id) const { return names_.at(id.value); }
  std::size_t size() const { return names_.size(); }
  void reserve(std::size_t n) {
    names_.reserve(n);
    index_.reserve(n);
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// splitmix64 finalizer; used to derive independent stream seeds from one seed.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

// Unbiased integer in [0, bound) from a 64-bit engine. Written out rather
// than using std::uniform_int_distribution so draws are identical across
// standard library implementations.
template <typename Engine>
std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

// Uniform double in [0, 1) with 53 random bits.
template <typename Engine>
double uniform_unit(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Shortest round-trip decimal text for a double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

}  // namespace netchoice

template <typename Tag>
struct std::hash<netchoice::Id<Tag>> {
  std::size_t operator()(netchoice::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};

