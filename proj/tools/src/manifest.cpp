#include "sharp_app/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "sharp/hash.hpp"

namespace sharp::app {

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

FileRecord record_file(const std::string& path) { return {path, hex64(hash_file(path))}; }

Json Manifest::to_json() const {
  auto files = [](const std::vector<FileRecord>& list) {
    Json arr = Json::array();
    for (const auto& f : list) arr.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a64}});
    return arr;
  };
  return Json{{"tool", tool},
              {"version", version},
              {"command", command},
              {"args", args},
              {"working_directory", working_directory},
              {"config", config},
              {"inputs", files(inputs)},
              {"outputs", files(outputs)},
              {"started", started},
              {"finished", finished}};
}

Manifest Manifest::from_json(const Json& j) {
  Manifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.args = j.at("args").get<std::vector<std::string>>();
  m.working_directory = j.value("working_directory", std::string());
  m.config = j.value("config", Json::object());
  auto files = [](const Json& arr) {
    std::vector<FileRecord> out;
    for (const auto& f : arr) out.push_back({f.at("path").get<std::string>(), f.at("fnv1a64").get<std::string>()});
    return out;
  };
  m.inputs = files(j.value("inputs", Json::array()));
  m.outputs = files(j.value("outputs", Json::array()));
  m.started = j.value("started", std::string());
  m.finished = j.value("finished", std::string());
  return m;
}

void Manifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << to_json().dump(2) << '\n';
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open manifest '" + path + "'");
  try {
    return from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed manifest '" + path + "': " + e.what());
  }
}

}  // namespace sharp::app
