#include "ced/hash.hpp"

#include <array>

namespace ced {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string content_digest(std::string_view data) {
  std::uint64_t a = fnv1a64(data);
  std::uint64_t b = fnv1a64(data, 0x9ae16a3b2f90404fULL);
  return hex64(a) + hex64(splitmix64(b));
}

}  // namespace ced
