#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sharp::app {

using Json = nlohmann::ordered_json;

/// ISO-8601 UTC time; SOURCE_DATE_EPOCH, when set, replaces the clock so
/// manifests are reproducible.
std::string utc_timestamp();

/// Path of the manifest written next to `output`.
std::string manifest_path_for(const std::string& output);

struct FileRecord {
  std::string path;
  std::string fnv1a64;
};
FileRecord record_file(const std::string& path);

struct Manifest {
  std::string tool = "sharp";
  std::string version;
  std::string command;
  std::vector<std::string> args;  // fully resolved command line, replayable
  std::string working_directory;
  Json config;                    // resolved command configuration
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  std::string started, finished;

  Json to_json() const;
  static Manifest from_json(const Json& j);
  void save(const std::string& path) const;
  static Manifest load(const std::string& path);
};

}  // namespace sharp::app
