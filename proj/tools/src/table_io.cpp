#include "sharp_app/table_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace sharp::app {

namespace {

bool header_has(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) return false;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::size_t start = 0;
  for (;;) {
    const auto comma = header.find(',', start);
    std::string cell = header.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto b = cell.find_first_not_of(" \t\"");
    const auto e = cell.find_last_not_of(" \t\"");
    if (b != std::string::npos && cell.substr(b, e - b + 1) == column) return true;
    if (comma == std::string::npos) return false;
    start = comma + 1;
  }
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_projection(const std::string& path, const Tensor& points, const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << (labels.empty() ? "index,x,y\n" : "index,x,y,label\n");
  for (std::size_t i = 0; i < points.rows(); ++i) {
    out << i << ',' << format_number(points.at(i, 0)) << ',' << format_number(points.at(i, 1));
    if (!labels.empty()) out << ',' << labels[i];
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Projection read_projection(const std::string& path) {
  const bool labelled = header_has(path, "label");
  const Dataset d = labelled ? load_csv(path, std::string("label")) : load_csv(path);
  auto column = [&d](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < d.feature_names.size(); ++c) {
      if (d.feature_names[c] == name) return c;
    }
    return std::nullopt;
  };
  const auto cx = column("x"), cy = column("y");
  if (!cx || !cy) throw DataError(path + ": projection file needs x and y columns");
  Projection p;
  p.points = Tensor(Shape{d.rows(), 2});
  for (std::size_t i = 0; i < d.rows(); ++i) {
    p.points.at(i, 0) = d.x.at(i, *cx);
    p.points.at(i, 1) = d.x.at(i, *cy);
  }
  if (labelled) p.labels = label_strings(d);
  return p;
}

void write_metrics(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "metric,value\n";
  out << "trustworthiness," << format_number(r.trustworthiness) << '\n';
  out << "continuity," << format_number(r.continuity) << '\n';
  out << "shepard_correlation," << format_number(r.shepard_correlation) << '\n';
  out << "normalized_stress," << format_number(r.normalized_stress) << '\n';
  if (r.neighborhood_hit) out << "neighborhood_hit," << format_number(*r.neighborhood_hit) << '\n';
  if (r.distance_consistency) out << "distance_consistency," << format_number(*r.distance_consistency) << '\n';
  out << "k," << r.k << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Dataset load_any(const std::string& path, const std::string& label_column, const std::string& label_file) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && magic[0] == 0 && magic[1] == 0 && magic[2] == 8 && magic[3] == 3) {
    return load_idx(path, label_file);
  }
  if (!label_file.empty()) throw DataError("--label-file applies to IDX input only");
  in.close();
  if (!label_column.empty() && header_has(path, label_column)) return load_csv(path, label_column);
  return load_csv(path);
}

std::vector<std::string> label_strings(const Dataset& data) {
  std::vector<std::string> out;
  out.reserve(data.labels.size());
  for (int l : data.labels) out.push_back(data.label_names[static_cast<std::size_t>(l - 1)]);
  return out;
}

}  // namespace sharp::app
