#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sharp {

/// 64-bit FNV-1a, used for content fingerprints and stream labels.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;
std::uint64_t fnv1a64(std::span<const double> values) noexcept;

/// Hash of a file's bytes; throws std::runtime_error if unreadable.
std::uint64_t hash_file(const std::string& path);

std::string hex64(std::uint64_t value);

}  // namespace sharp
