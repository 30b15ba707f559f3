#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ced {

// 64-bit FNV-1a. Stable across platforms; used for content hashes and
// cache keys, never for security.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer; decorrelates sequential seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex64(std::uint64_t v);

// 128 bits of FNV-1a (two independent seeds) rendered as 32 hex chars.
std::string content_digest(std::string_view data);

}  // namespace ced
