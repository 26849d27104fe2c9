#pragma once

// Latent sampling layers and their priors.
//
//   ellipses    z ~ N(mu, diag(sigma^2))         prior N(0, I)        analytic KL
//   rectangles  z ~ GN(mu, alpha, omega)         prior GN(0, 1, omega) sampled KL
//   polygons    w ~ Dir(alpha_1..alpha_v),       prior Dir(1, ..., 1)  sampled KL on w
//               z = R(phi) S V w + t
//
// Batched graph ops take [m, d] operands, one row per data point, and return
// per-point quantities as [m, 1] columns.

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sharp/autodiff.hpp"
#include "sharp/rng.hpp"

namespace sharp {

struct GaussianScheme {
  friend bool operator==(const GaussianScheme&, const GaussianScheme&) = default;
};

struct GenNormalScheme {
  double omega = 10.0;
  friend bool operator==(const GenNormalScheme&, const GenNormalScheme&) = default;
};

struct PolygonScheme {
  Tensor vertices;  // [2, v], convex, counterclockwise
  bool translate = true;
  std::size_t vertex_count() const { return vertices.cols(); }
  friend bool operator==(const PolygonScheme&, const PolygonScheme&) = default;
};

using SamplingScheme = std::variant<GaussianScheme, GenNormalScheme, PolygonScheme>;

/// Regular v-gon of circumradius 1 centred at the origin, first vertex at
/// (0, 1), counterclockwise.
PolygonScheme regular_polygon(std::size_t v, bool translate = true);

/// Parses "gaussian", "gennorm:OMEGA", "polygon:V" or "polygon:V:no-translate".
SamplingScheme parse_scheme(std::string_view text);
std::string describe(const SamplingScheme& scheme);

/// Checks the invariants of a scheme (omega > 0, v >= 3, convex CCW base).
void validate(const SamplingScheme& scheme);

enum class DirichletGradient {
  Implicit,       // implicit reparameterisation through the Gamma CDF
  ScoreFunction,  // REINFORCE estimator, for cross-checking
};

// ---- parameter blocks (batched, one row per data point) ----

struct DiagGaussianParams {
  ad::Var mu;         // [m, 2]
  ad::Var log_sigma;  // [m, 2]
};

struct GenNormalParams {
  ad::Var mu;         // [m, 2]
  ad::Var log_alpha;  // [m, 2]
  double omega = 10.0;
};

struct DirichletPolygonParams {
  ad::Var log_alpha;  // [m, v]
  ad::Var phi;        // [m, 1]
  ad::Var log_sx;     // [m, 1]
  ad::Var log_sy;     // [m, 1]
  ad::Var tx;         // [m, 1]; invalid when translation is disabled
  ad::Var ty;         // [m, 1]
  Tensor vertices;    // [2, v]
};

using LatentParams = std::variant<DiagGaussianParams, GenNormalParams, DirichletPolygonParams>;

namespace dist {

// ---- noise ----

/// [rows, cols] standard normal draws.
Tensor standard_normal_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// One draw from GN(0, 1, omega): sign * G^(1/omega), G ~ Gamma(1/omega, 1).
double standard_gennormal(double omega, Rng& rng);
Tensor standard_gennormal_noise(std::size_t rows, std::size_t cols, double omega, Rng& rng);

/// [rows, cols] uniforms in (0, 1), the parameter-free noise behind Gamma draws.
Tensor uniform_noise(std::size_t rows, std::size_t cols, Rng& rng);

// ---- Gamma machinery ----

/// Gamma(shape, 1) quantile at level u, floored at the smallest normal double.
double gamma_quantile(double shape, double u);

/// d x / d shape at fixed CDF level F(x; shape), i.e. -dF/dshape / f(x; shape),
/// with dF/dshape taken by central differences.
double gamma_implicit_gradient(double shape, double x);

/// One Dirichlet draw from per-coordinate Gamma variates.
/// Throws std::invalid_argument for a non-positive concentration.
std::vector<double> sample_dirichlet(std::span<const double> alphas, Rng& rng);

// ---- scalar densities ----

double logpdf_gennormal(double x, double mu, double alpha, double omega);

// ---- graph ops ----

/// z = mu + sigma * noise.
ad::Var sample_gaussian(const DiagGaussianParams& p, const Tensor& noise);

/// Closed-form KL(N(mu, sigma^2) || N(0, I)) per point, [m, 1].
ad::Var kl_gaussian_analytic(const DiagGaussianParams& p);

/// Elementwise GN log-density with alpha = exp(log_alpha).
ad::Var logpdf_gennormal(const ad::Var& x, const ad::Var& mu, const ad::Var& log_alpha,
                         double omega);
/// Elementwise GN(0, 1, omega) log-density.
ad::Var logpdf_standard_gennormal(const ad::Var& x, double omega);

/// z = mu + alpha * noise with noise ~ GN(0, 1, omega).
ad::Var sample_gennormal(const GenNormalParams& p, const Tensor& noise);

struct DirichletDraw {
  ad::Var w;      // [m, v] on the simplex
  ad::Var log_w;  // [m, v], computed from the Gamma variates without forming log(w)
};

/// Dirichlet draws with concentrations `alpha` ([m, v], positive) driven by
/// uniforms of the same shape. Implicit mode differentiates the draw with
/// respect to alpha; score-function mode returns a draw with no gradient path.
DirichletDraw sample_dirichlet(const ad::Var& alpha, const Tensor& uniforms, DirichletGradient mode);

/// Dirichlet log-density per row, [m, 1].
ad::Var dirichlet_logpdf(const ad::Var& log_w, const ad::Var& alpha);
/// Log-density of the flat Dir(1, ..., 1) prior: log Gamma(v), [m, 1].
ad::Var dirichlet_flat_logpdf(std::size_t rows, std::size_t v);

/// z = R(phi) diag(s_x, s_y) V w + t, [m, 2].
ad::Var polygon_map(const ad::Var& w, const DirichletPolygonParams& p);

/// Sample-based KL estimate: mean over the batch of log q - log p.
ad::Var kl_sampled(const ad::Var& log_q, const ad::Var& log_p);

/// Zero-valued term whose gradient is the score-function estimate
/// mean_i (L_i - b_i) * d log q_i for per-point losses L_i, with b_i the
/// mean loss of the other points.
ad::Var score_function_surrogate(const ad::Var& per_point_loss, const ad::Var& log_q);

}  // namespace dist
}  // namespace sharp
