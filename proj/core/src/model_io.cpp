#include "sharp/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>

#include "sharp/hash.hpp"

namespace sharp {

namespace {

constexpr char kMagic[4] = {'S', 'H', 'R', 'P'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void tag(const char (&t)[5]) { out_.insert(out_.end(), t, t + 4); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void f64s(std::span<const double> v) {
    u64(v.size());
    for (double d : v) f64(d);
  }
  void section(const char (&t)[5], const Writer& body) {
    tag(t);
    u64(body.out_.size());
    out_.insert(out_.end(), body.out_.begin(), body.out_.end());
  }
  std::vector<unsigned char>& bytes() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size, std::string what)
      : p_(data), end_(data + size), what_(std::move(what)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t count(std::size_t element_size) {
    const std::uint64_t n = u64();
    if (n > remaining() / element_size) fail();
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    const std::size_t n = count(1);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  std::vector<double> f64s() {
    std::vector<double> v(count(8));
    for (auto& d : v) d = f64();
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(p_), 4);
    p_ += 4;
    return t;
  }
  Reader sub(std::size_t n, const std::string& what) {
    need(n);
    Reader r(p_, n, what);
    p_ += n;
    return r;
  }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }
  const unsigned char* position() const { return p_; }
  void expect_end() const {
    if (p_ != end_) throw FormatError("model file: " + std::to_string(remaining()) + " unexpected bytes in " + what_);
  }

 private:
  [[noreturn]] void fail() const { throw FormatError("model file truncated in " + what_); }
  void need(std::size_t n) const {
    if (remaining() < n) fail();
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += n;
    return v;
  }

  const unsigned char* p_;
  const unsigned char* end_;
  std::string what_;
};

Writer encode_scheme(const SamplingScheme& scheme) {
  Writer w;
  w.u8(static_cast<std::uint8_t>(scheme.index()));
  if (const auto* g = std::get_if<GenNormalScheme>(&scheme)) w.f64(g->omega);
  if (const auto* p = std::get_if<PolygonScheme>(&scheme)) {
    w.u8(p->translate ? 1 : 0);
    w.u64(p->vertex_count());
    w.f64s(p->vertices.data());
  }
  return w;
}

SamplingScheme decode_scheme(Reader r) {
  SamplingScheme s;
  switch (r.u8()) {
    case 0: s = GaussianScheme{}; break;
    case 1: s = GenNormalScheme{r.f64()}; break;
    case 2: {
      PolygonScheme p;
      p.translate = r.u8() != 0;
      const std::size_t v = static_cast<std::size_t>(r.u64());
      auto data = r.f64s();
      if (data.size() != 2 * v) throw FormatError("model file: polygon vertex table has the wrong size");
      p.vertices = Tensor(Shape{2, v}, std::move(data));
      s = std::move(p);
      break;
    }
    default: throw FormatError("model file: unknown sampling scheme");
  }
  r.expect_end();
  return s;
}

}  // namespace

std::vector<unsigned char> encode_model(const ModelArtifact& a) {
  const Model& model = a.model;
  const Architecture& arch = model.architecture();
  Writer out;
  out.bytes().insert(out.bytes().end(), kMagic, kMagic + 4);
  out.u16(a.version);

  Writer s;
  s.u64(arch.input_dim);
  s.u64(arch.encoder_widths.size());
  for (auto w : arch.encoder_widths) s.u64(w);
  s.u64(arch.classes);
  s.u8(static_cast<std::uint8_t>(arch.classifier));
  out.section("ARCH", s);

  out.section("SCHM", encode_scheme(model.scheme()));

  const TrainConfig& c = a.config;
  Writer conf;
  conf.f64(c.rho);
  conf.f64(c.beta);
  conf.u64(c.batch_size);
  conf.u64(c.epochs);
  conf.u64(c.seed);
  conf.f64(c.l2_bottleneck);
  conf.u8(static_cast<std::uint8_t>(c.l2_mode));
  conf.u8(c.deterministic_bottleneck ? 1 : 0);
  conf.u8(static_cast<std::uint8_t>(c.dirichlet_gradient));
  conf.f64(c.adam.learning_rate);
  conf.f64(c.adam.beta1);
  conf.f64(c.adam.beta2);
  conf.f64(c.adam.epsilon);
  out.section("CONF", conf);

  Writer parm;
  const auto params = model.params().all();
  parm.u64(params.size());
  for (const auto& p : params) {
    parm.str(p.name());
    parm.u64(p.shape().size());
    for (auto d : p.shape()) parm.u64(d);
    parm.f64s(p.value().data());
  }
  out.section("PARM", parm);

  Writer scal;
  scal.f64s(a.feature_min);
  scal.f64s(a.feature_max);
  out.section("SCAL", scal);

  Writer labl;
  labl.u64(a.label_names.size());
  for (const auto& n : a.label_names) labl.str(n);
  out.section("LABL", labl);

  Writer fprt;
  fprt.u64(a.data_fingerprint);
  out.section("FPRT", fprt);

  const std::uint64_t checksum = fnv1a64(out.bytes());
  Writer tail;
  tail.u64(checksum);
  out.section("CSUM", tail);
  return std::move(out.bytes());
}

ModelArtifact decode_model(const std::vector<unsigned char>& bytes) {
  Reader r(bytes.data(), bytes.size(), "header");
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a model file (missing SHRP magic)");
  }
  r.tag();
  const std::uint16_t version = r.u16();
  if (version != ModelArtifact::kFormatVersion) {
    throw FormatError("model file format version " + std::to_string(version) + " is not supported (expected version " +
                      std::to_string(ModelArtifact::kFormatVersion) + ")");
  }

  std::map<std::string, Reader> sections;
  for (;;) {
    const unsigned char* section_start = r.position();
    const std::string tag = r.tag();
    const std::size_t length = r.count(1);
    Reader body = r.sub(length, "section " + tag);
    if (tag == "CSUM") {
      const std::uint64_t stored = body.u64();
      body.expect_end();
      r.expect_end();
      const auto prefix = std::span<const unsigned char>(bytes.data(), static_cast<std::size_t>(section_start - bytes.data()));
      if (fnv1a64(prefix) != stored) throw FormatError("model file checksum mismatch (file corrupted)");
      break;
    }
    sections.emplace(tag, body);
  }
  auto take = [&sections](const char* tag) {
    const auto it = sections.find(tag);
    if (it == sections.end()) throw FormatError(std::string("model file lacks section ") + tag);
    return it->second;
  };

  ModelArtifact a;
  a.version = version;

  Reader s = take("ARCH");
  Architecture arch;
  arch.input_dim = s.u64();
  arch.encoder_widths.resize(s.count(8));
  for (auto& w : arch.encoder_widths) w = s.u64();
  arch.classes = s.u64();
  const auto attach = s.u8();
  if (attach > 1) throw FormatError("model file: unknown classifier attachment");
  arch.classifier = static_cast<ClassifierAttachment>(attach);
  s.expect_end();

  const SamplingScheme scheme = decode_scheme(take("SCHM"));

  Reader conf = take("CONF");
  TrainConfig& c = a.config;
  c.rho = conf.f64();
  c.beta = conf.f64();
  c.batch_size = conf.u64();
  c.epochs = conf.u64();
  c.seed = conf.u64();
  c.l2_bottleneck = conf.f64();
  c.l2_mode = static_cast<L2Mode>(conf.u8());
  c.deterministic_bottleneck = conf.u8() != 0;
  c.dirichlet_gradient = static_cast<DirichletGradient>(conf.u8());
  c.adam.learning_rate = conf.f64();
  c.adam.beta1 = conf.f64();
  c.adam.beta2 = conf.f64();
  c.adam.epsilon = conf.f64();
  c.scheme = scheme;
  conf.expect_end();

  try {
    a.model = Model(arch, scheme, 0);
  } catch (const std::exception& e) {
    throw FormatError(std::string("model file: invalid architecture: ") + e.what());
  }
  Reader parm = take("PARM");
  auto params = a.model.params().all();
  if (parm.u64() != params.size()) throw FormatError("model file: parameter count does not match architecture");
  for (auto& p : params) {
    const std::string name = parm.str();
    Shape shape(parm.count(8));
    for (auto& d : shape) d = parm.u64();
    auto values = parm.f64s();
    if (name != p.name() || shape != p.shape() || values.size() != p.value().size()) {
      throw FormatError("model file: parameter '" + name + "' " + to_string(shape) + " does not match '" + p.name() +
                        "' " + to_string(p.shape()));
    }
    p.value_mut() = Tensor(shape, std::move(values));
  }
  parm.expect_end();

  Reader scal = take("SCAL");
  a.feature_min = scal.f64s();
  a.feature_max = scal.f64s();
  scal.expect_end();

  Reader labl = take("LABL");
  a.label_names.resize(labl.count(8));
  for (auto& n : a.label_names) n = labl.str();
  labl.expect_end();

  Reader fprt = take("FPRT");
  a.data_fingerprint = fprt.u64();
  fprt.expect_end();
  return a;
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  const auto bytes = encode_model(artifact);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file '" + path + "'");
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_model(bytes);
}

}  // namespace sharp
