#include "sharp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

#include "sharp/hash.hpp"
#include "sharp/rng.hpp"

namespace sharp {

namespace {

std::string basename_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  for (auto& cell : cells) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc{} || ptr != last) return std::nullopt;
  return v;
}

std::uint32_t big_endian_u32(const std::vector<char>& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

}  // namespace

std::vector<int> factorize(std::span<const std::string> raw, std::vector<std::string>& names) {
  bool numeric = true;
  for (const auto& s : raw) numeric = numeric && parse_number(s).has_value();
  names.assign(raw.begin(), raw.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (numeric) {
    std::stable_sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
    // Distinct spellings of one number ("1" and "1.0") are one class.
    names.erase(std::unique(names.begin(), names.end(),
                            [](const std::string& a, const std::string& b) {
                              return *parse_number(a) == *parse_number(b);
                            }),
                names.end());
  }
  std::vector<int> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    auto it = numeric ? std::find_if(names.begin(), names.end(),
                                     [&](const std::string& n) { return *parse_number(n) == *parse_number(s); })
                      : std::lower_bound(names.begin(), names.end(), s);
    out.push_back(static_cast<int>(it - names.begin()) + 1);
  }
  return out;
}

Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_record(line);

  std::optional<std::size_t> label_at;
  if (label_column) {
    const auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end()) throw DataError(path + ": no label column '" + *label_column + "' in header");
    label_at = static_cast<std::size_t>(it - header.begin());
  }

  Dataset data;
  data.name = basename_of(path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_at) data.feature_names.push_back(header[c]);
  }
  const std::size_t n = data.feature_names.size();
  if (n == 0) throw DataError(path + ": no feature columns");

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::size_t row = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_record(line);
    const std::string where = path + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")";
    if (cells.size() != header.size()) {
      throw DataError(where + " has " + std::to_string(cells.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_at) {
        if (cells[c].empty()) throw DataError(where + ": empty label");
        raw_labels.push_back(cells[c]);
        continue;
      }
      const auto v = parse_number(cells[c]);
      if (!v) throw DataError(where + ", column '" + header[c] + "': non-numeric value '" + cells[c] + "'");
      if (!std::isfinite(*v)) {
        throw DataError(where + ", column '" + header[c] + "': non-finite value '" + cells[c] + "'");
      }
      values.push_back(*v);
    }
    ++row;
  }
  if (row == 0) throw DataError(path + ": no data rows");
  data.x = Tensor(Shape{row, n}, std::move(values));
  if (label_at) data.labels = factorize(raw_labels, data.label_names);
  return data;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_bytes(images_path);
  if (img.size() < 16 || big_endian_u32(img, 0) != 0x00000803u) {
    throw DataError(images_path + ": not an IDX image file (expected magic 0x00000803)");
  }
  const std::size_t count = big_endian_u32(img, 4);
  const std::size_t rows = big_endian_u32(img, 8), cols = big_endian_u32(img, 12);
  const std::size_t n = rows * cols;
  if (img.size() != 16 + count * n) {
    throw DataError(images_path + ": header declares " + std::to_string(count) + " images of " +
                    std::to_string(rows) + "x" + std::to_string(cols) + " but the file holds " +
                    std::to_string(img.size() - 16) + " pixel bytes");
  }
  Dataset data;
  data.name = basename_of(images_path);
  data.x = Tensor(Shape{count, n});
  for (std::size_t i = 0; i < count * n; ++i) {
    data.x[i] = static_cast<double>(static_cast<unsigned char>(img[16 + i])) / 255.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      data.feature_names.push_back("px" + std::to_string(r) + "_" + std::to_string(c));
    }
  }
  if (labels_path.empty()) return data;

  const auto lab = read_bytes(labels_path);
  if (lab.size() < 8 || big_endian_u32(lab, 0) != 0x00000801u) {
    throw DataError(labels_path + ": not an IDX label file (expected magic 0x00000801)");
  }
  const std::size_t label_count = big_endian_u32(lab, 4);
  if (lab.size() != 8 + label_count) {
    throw DataError(labels_path + ": header declares " + std::to_string(label_count) +
                    " labels but the file holds " + std::to_string(lab.size() - 8));
  }
  if (label_count != count) {
    throw DataError(std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  }
  std::vector<std::string> raw;
  raw.reserve(count);
  for (std::size_t i = 0; i < count; ++i) raw.push_back(std::to_string(static_cast<unsigned char>(lab[8 + i])));
  data.labels = factorize(raw, data.label_names);
  return data;
}

Tensor apply_scaling(const Tensor& raw, std::span<const double> lo, std::span<const double> hi) {
  if (raw.rank() != 2 || raw.cols() != lo.size() || lo.size() != hi.size()) {
    throw ShapeError("scaling ranges for " + std::to_string(lo.size()) + " features applied to data of shape " +
                     to_string(raw.shape()));
  }
  Tensor out(raw.shape());
  const std::size_t n = raw.cols();
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double span = hi[j] - lo[j];
      out.at(i, j) = span > 0.0 ? std::clamp((raw.at(i, j) - lo[j]) / span, 0.0, 1.0) : 0.0;
    }
  }
  return out;
}

Dataset scale_minmax(Dataset data) {
  const std::size_t m = data.rows(), n = data.dims();
  std::vector<double> lo(n, 0.0), hi(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    lo[j] = hi[j] = m ? data.x.at(0, j) : 0.0;
    for (std::size_t i = 1; i < m; ++i) {
      lo[j] = std::min(lo[j], data.x.at(i, j));
      hi[j] = std::max(hi[j], data.x.at(i, j));
    }
  }
  data.x = apply_scaling(data.x, lo, hi);
  if (data.scaled()) {
    // Express the new ranges in raw units.
    for (std::size_t j = 0; j < n; ++j) {
      const double raw_lo = data.feature_min[j], raw_span = data.feature_max[j] - data.feature_min[j];
      const double new_lo = raw_lo + lo[j] * raw_span, new_hi = raw_lo + hi[j] * raw_span;
      if (hi[j] > lo[j]) {
        lo[j] = new_lo;
        hi[j] = new_hi;
      } else {
        lo[j] = hi[j] = new_lo;
      }
    }
  }
  data.feature_min = std::move(lo);
  data.feature_max = std::move(hi);
  return data;
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  const std::size_t m = data.rows();
  if (count > m) {
    throw DataError("cannot draw " + std::to_string(count) + " rows from " + std::to_string(m));
  }
  std::vector<std::vector<std::size_t>> groups;
  if (data.has_labels()) {
    groups.resize(data.classes());
    for (std::size_t i = 0; i < m; ++i) groups[static_cast<std::size_t>(data.labels[i] - 1)].push_back(i);
    if (count < groups.size()) {
      throw DataError("a stratified sample of " + std::to_string(count) + " rows cannot cover " +
                      std::to_string(groups.size()) + " classes");
    }
  } else {
    groups.resize(1);
    groups[0].resize(m);
    std::iota(groups[0].begin(), groups[0].end(), 0);
  }

  // Largest-remainder quotas; remainder ties go to the lower class.
  std::vector<std::size_t> quota(groups.size());
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, class)
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const std::size_t num = count * groups[k].size();
    quota[k] = num / m;
    assigned += quota[k];
    remainders.emplace_back(num % m, k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t t = 0; assigned < count; ++t, ++assigned) ++quota[remainders[t].second];

  std::vector<std::size_t> chosen;
  chosen.reserve(count);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto& g = groups[k];
    Rng rng = make_rng(seed, "subsample", k);
    for (std::size_t t = 0; t < quota[k]; ++t) {
      const std::size_t j = t + static_cast<std::size_t>(rng() % (g.size() - t));
      std::swap(g[t], g[j]);
    }
    chosen.insert(chosen.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(quota[k]));
  }
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.name = data.name;
  out.label_names = data.label_names;
  out.feature_names = data.feature_names;
  out.feature_min = data.feature_min;
  out.feature_max = data.feature_max;
  out.x = Tensor(Shape{count, data.dims()});
  for (std::size_t r = 0; r < count; ++r) {
    const auto src = data.x.row(chosen[r]);
    std::copy(src.begin(), src.end(), out.x.row(r).begin());
    if (data.has_labels()) out.labels.push_back(data.labels[chosen[r]]);
  }
  return out;
}

std::uint64_t fingerprint(const Dataset& data) {
  std::ostringstream shape;
  shape << data.rows() << 'x' << data.dims() << ';';
  std::uint64_t h = fnv1a64(shape.str());
  const auto bytes = [](const auto& v) {
    return std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(v.data()),
                                          v.size() * sizeof(v[0]));
  };
  h = fnv1a64(bytes(data.x.storage()), h);
  h = fnv1a64(bytes(data.labels), h);
  return h;
}

}  // namespace sharp
