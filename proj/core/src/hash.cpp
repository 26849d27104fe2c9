#include "sharp/hash.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <vector>

namespace sharp {

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t basis) noexcept {
  std::uint64_t h = basis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  return fnv1a64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::uint64_t fnv1a64(std::span<const double> values) noexcept {
  return fnv1a64({reinterpret_cast<const unsigned char*>(values.data()), values.size_bytes()});
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace sharp
