#include "sharp/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sharp {

PolygonScheme regular_polygon(std::size_t v, bool translate) {
  if (v < 3) throw std::invalid_argument("polygon needs at least 3 vertices, got " + std::to_string(v));
  Tensor vertices(Shape{2, v});
  for (std::size_t i = 0; i < v; ++i) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                                       static_cast<double>(v);
    vertices.at(0, i) = std::cos(angle);
    vertices.at(1, i) = std::sin(angle);
  }
  return PolygonScheme{std::move(vertices), translate};
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

SamplingScheme parse_scheme(std::string_view text) {
  if (text == "gaussian") return GaussianScheme{};
  if (text.starts_with("gennorm:")) {
    GenNormalScheme s{parse_number(text.substr(8), "gennorm omega")};
    validate(s);
    return s;
  }
  if (text.starts_with("polygon:")) {
    auto rest = text.substr(8);
    bool translate = true;
    if (const auto colon = rest.find(':'); colon != std::string_view::npos) {
      if (rest.substr(colon + 1) != "no-translate") {
        throw std::invalid_argument("unknown polygon option '" + std::string(rest.substr(colon + 1)) +
                                    "'");
      }
      translate = false;
      rest = rest.substr(0, colon);
    }
    const double v = parse_number(rest, "polygon vertex count");
    if (v != std::floor(v) || v < 3 || v > 64) {
      throw std::invalid_argument("polygon vertex count must be an integer in [3, 64]");
    }
    return regular_polygon(static_cast<std::size_t>(v), translate);
  }
  throw std::invalid_argument("unknown shape '" + std::string(text) +
                              "' (expected gaussian, gennorm:OMEGA or polygon:V[:no-translate])");
}

std::string describe(const SamplingScheme& scheme) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GaussianScheme>) {
          return "gaussian";
        } else if constexpr (std::is_same_v<S, GenNormalScheme>) {
          std::ostringstream out;
          out.precision(17);
          out << "gennorm:" << s.omega;
          return out.str();
        } else {
          return "polygon:" + std::to_string(s.vertex_count()) + (s.translate ? "" : ":no-translate");
        }
      },
      scheme);
}

void validate(const SamplingScheme& scheme) {
  if (const auto* gn = std::get_if<GenNormalScheme>(&scheme)) {
    if (!(gn->omega > 0.0) || !std::isfinite(gn->omega)) {
      throw std::invalid_argument("gennorm omega must be positive and finite");
    }
  }
  if (const auto* poly = std::get_if<PolygonScheme>(&scheme)) {
    const auto& V = poly->vertices;
    if (V.rank() != 2 || V.rows() != 2 || V.cols() < 3) {
      throw std::invalid_argument("polygon vertices must be a [2, v] matrix with v >= 3");
    }
    const std::size_t v = V.cols();
    for (std::size_t i = 0; i < v; ++i) {
      const std::size_t j = (i + 1) % v, k = (i + 2) % v;
      const double cross = (V.at(0, j) - V.at(0, i)) * (V.at(1, k) - V.at(1, j)) -
                           (V.at(1, j) - V.at(1, i)) * (V.at(0, k) - V.at(0, j));
      if (!(cross > 0.0)) {
        throw std::invalid_argument("polygon vertices must be convex and counterclockwise");
      }
    }
  }
}

namespace dist {

using ad::Var;

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

double log_gamma_p(double a, double x) {
  const double p = boost::math::gamma_p(a, x);
  if (p > 1e-280) return std::log(p);
  // Lower series x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)).
  double term = 1.0, total = 1.0;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    total += term;
    if (term < 1e-17 * total) break;
  }
  return a * std::log(x) - x - std::lgamma(a + 1.0) + std::log(total);
}

double log_gamma_q(double a, double x) {
  const double q = boost::math::gamma_q(a, x);
  if (q > 1e-280) return std::log(q);
  // Asymptotic tail x^(a-1) e^-x / Gamma(a) * sum_k (a-1)...(a-k) / x^k.
  double term = 1.0, total = 1.0;
  for (int k = 1; k < 50; ++k) {
    const double next = term * (a - k) / x;
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    total += term;
  }
  return (a - 1.0) * std::log(x) - x - std::lgamma(a) + std::log(total);
}

}  // namespace

Tensor standard_normal_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor out(Shape{rows, cols});
  for (auto& v : out.data()) v = standard_normal(rng);
  return out;
}

double standard_gennormal(double omega, Rng& rng) {
  const double g = gamma_quantile(1.0 / omega, uniform_open(rng));
  const double sign = uniform_open(rng) < 0.5 ? -1.0 : 1.0;
  return sign * std::pow(g, 1.0 / omega);
}

Tensor standard_gennormal_noise(std::size_t rows, std::size_t cols, double omega, Rng& rng) {
  Tensor out(Shape{rows, cols});
  for (auto& v : out.data()) v = standard_gennormal(omega, rng);
  return out;
}

Tensor uniform_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor out(Shape{rows, cols});
  for (auto& v : out.data()) v = uniform_open(rng);
  return out;
}

double gamma_quantile(double shape, double u) {
  if (!(shape > 0.0)) throw std::invalid_argument("Gamma shape must be positive");
  const double x = boost::math::gamma_p_inv(shape, u);
  return std::max(x, kTiny);
}

double gamma_implicit_gradient(double shape, double x) {
  const double a = shape;
  const double h = std::min(1e-6 * std::max(1.0, a), 0.5 * a);
  const double log_pdf = (a - 1.0) * std::log(x) - x - std::lgamma(a);
  const double log_p = log_gamma_p(a, x);
  if (log_p <= -std::numbers::ln2) {
    const double dlog = (log_gamma_p(a + h, x) - log_gamma_p(a - h, x)) / (2.0 * h);
    return -std::exp(log_p - log_pdf) * dlog;
  }
  const double log_q = log_gamma_q(a, x);
  const double dlog = (log_gamma_q(a + h, x) - log_gamma_q(a - h, x)) / (2.0 * h);
  return std::exp(log_q - log_pdf) * dlog;
}

std::vector<double> sample_dirichlet(std::span<const double> alphas, Rng& rng) {
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("Dirichlet concentrations must be positive");
  }
  std::vector<double> w(alphas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = gamma_quantile(alphas[i], uniform_open(rng));
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return w;
}

double logpdf_gennormal(double x, double mu, double alpha, double omega) {
  return std::log(omega / (2.0 * alpha)) - std::lgamma(1.0 / omega) -
         std::pow(std::abs(x - mu) / alpha, omega);
}

Var sample_gaussian(const DiagGaussianParams& p, const Tensor& noise) {
  return p.mu + ad::exp(p.log_sigma) * Var::constant(noise);
}

Var kl_gaussian_analytic(const DiagGaussianParams& p) {
  // 1/2 sum_d (sigma^2 + mu^2 - 1 - log sigma^2)
  auto per_dim = ad::exp(ad::scale(p.log_sigma, 2.0)) + ad::square(p.mu) -
                 ad::scale(p.log_sigma, 2.0);
  return ad::scale(ad::add_scalar(ad::sum_cols(per_dim), -static_cast<double>(p.mu.shape()[1])), 0.5);
}

Var logpdf_gennormal(const Var& x, const Var& mu, const Var& log_alpha, double omega) {
  const double log_norm = std::log(omega / 2.0) - std::lgamma(1.0 / omega);
  auto standardized = ad::abs((x - mu) / ad::exp(log_alpha));
  return ad::add_scalar(ad::neg(log_alpha) - ad::pow(standardized, omega), log_norm);
}

Var logpdf_standard_gennormal(const Var& x, double omega) {
  const double log_norm = std::log(omega / 2.0) - std::lgamma(1.0 / omega);
  return ad::add_scalar(ad::neg(ad::pow(ad::abs(x), omega)), log_norm);
}

Var sample_gennormal(const GenNormalParams& p, const Tensor& noise) {
  return p.mu + ad::exp(p.log_alpha) * Var::constant(noise);
}

DirichletDraw sample_dirichlet(const Var& alpha, const Tensor& uniforms, DirichletGradient mode) {
  if (alpha.shape() != uniforms.shape() || alpha.shape().size() != 2) {
    throw ShapeError("sample_dirichlet: concentrations " + to_string(alpha.shape()) +
                     " and uniforms " + to_string(uniforms.shape()) + " must be equal [m, v]");
  }
  const auto& a = alpha.value();
  Tensor g(a.shape());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(a[i] > 0.0)) throw std::invalid_argument("Dirichlet concentrations must be positive");
    g[i] = gamma_quantile(a[i], uniforms[i]);
  }

  Var gammas;
  if (mode == DirichletGradient::Implicit) {
    gammas = ad::make_op(std::move(g), {alpha}, [](ad::Node& self) {
      Tensor* ga = self.parent_grad(0);
      if (!ga) return;
      const Tensor& shape = self.parents[0]->value;
      for (std::size_t i = 0; i < self.value.size(); ++i) {
        (*ga)[i] += self.grad[i] * gamma_implicit_gradient(shape[i], self.value[i]);
      }
    });
  } else {
    gammas = Var::constant(std::move(g));
  }
  auto total = ad::sum_cols(gammas);
  return DirichletDraw{gammas / total, ad::log(gammas) - ad::log(total)};
}

Var dirichlet_logpdf(const Var& log_w, const Var& alpha) {
  return ad::lgamma(ad::sum_cols(alpha)) - ad::sum_cols(ad::lgamma(alpha)) +
         ad::sum_cols(ad::add_scalar(alpha, -1.0) * log_w);
}

Var dirichlet_flat_logpdf(std::size_t rows, std::size_t v) {
  return Var::constant(Tensor(Shape{rows, 1}, std::lgamma(static_cast<double>(v))));
}

Var polygon_map(const Var& w, const DirichletPolygonParams& p) {
  const auto& V = p.vertices;
  const std::size_t v = V.cols();
  if (w.shape().size() != 2 || w.shape()[1] != v) {
    throw ShapeError("polygon_map: weights " + to_string(w.shape()) + " vs vertices " +
                     to_string(V.shape()));
  }
  Tensor vt(Shape{v, 2});
  for (std::size_t i = 0; i < v; ++i) {
    vt.at(i, 0) = V.at(0, i);
    vt.at(i, 1) = V.at(1, i);
  }
  auto base = ad::matmul(w, Var::constant(std::move(vt)));
  auto px = ad::slice_cols(base, 0, 1) * ad::exp(p.log_sx);
  auto py = ad::slice_cols(base, 1, 2) * ad::exp(p.log_sy);
  auto c = ad::cos(p.phi);
  auto s = ad::sin(p.phi);
  auto x = c * px - s * py;
  auto y = s * px + c * py;
  if (p.tx.valid()) x = x + p.tx;
  if (p.ty.valid()) y = y + p.ty;
  const Var cols[] = {x, y};
  return ad::concat_cols(cols);
}

Var kl_sampled(const Var& log_q, const Var& log_p) {
  if (log_q.shape() != log_p.shape()) {
    throw ShapeError("kl_sampled: log q batch " + to_string(log_q.shape()) + " vs log p batch " +
                     to_string(log_p.shape()));
  }
  return ad::mean(log_q - log_p);
}

Var score_function_surrogate(const Var& per_point_loss, const Var& log_q) {
  if (per_point_loss.shape() != log_q.shape()) {
    throw ShapeError("score_function_surrogate: loss " + to_string(per_point_loss.shape()) +
                     " vs log q " + to_string(log_q.shape()));
  }
  const Tensor& l = per_point_loss.value();
  // Leave-one-out baseline keeps the estimator unbiased.
  double total = 0.0;
  for (double v : l.data()) total += v;
  const double others = static_cast<double>(l.size()) - 1.0;
  Tensor weight(l.shape());
  for (std::size_t i = 0; i < l.size(); ++i) {
    weight[i] = others > 0.0 ? l[i] - (total - l[i]) / others : l[i];
  }
  return ad::mean(Var::constant(std::move(weight)) * (log_q - ad::detach(log_q)));
}

}  // namespace dist
}  // namespace sharp
