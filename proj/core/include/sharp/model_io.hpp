#pragma once

// Model file layout (all integers little-endian):
//
//   "SHRP" | u16 version | section* | "CSUM" u64(8) u64 checksum
//   section = 4-byte tag | u64 payload length | payload
//
// The checksum is FNV-1a over every byte before the CSUM tag. Sections:
// ARCH, SCHM, CONF, PARM, SCAL, LABL, FPRT. Unknown tags are skipped.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sharp/network.hpp"

namespace sharp {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelArtifact {
  static constexpr std::uint16_t kFormatVersion = 1;

  std::uint16_t version = kFormatVersion;
  Model model;         // architecture, scheme and parameters
  TrainConfig config;  // config.scheme mirrors model.scheme()
  std::vector<double> feature_min, feature_max;
  std::vector<std::string> label_names;
  std::uint64_t data_fingerprint = 0;
};

std::vector<unsigned char> encode_model(const ModelArtifact& artifact);
ModelArtifact decode_model(const std::vector<unsigned char>& bytes);

void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace sharp
