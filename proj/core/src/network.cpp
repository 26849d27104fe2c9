#include "sharp/network.hpp"

#include <cmath>
#include <stdexcept>

namespace sharp {

using ad::Var;

std::vector<std::size_t> Architecture::decoder_widths() const {
  return {encoder_widths.rbegin(), encoder_widths.rend()};
}

void Architecture::validate() const {
  if (input_dim == 0) throw std::invalid_argument("architecture: input dimension must be positive");
  if (encoder_widths.empty()) throw std::invalid_argument("architecture: need at least one hidden layer");
  for (auto w : encoder_widths) {
    if (w == 0) throw std::invalid_argument("architecture: hidden widths must be positive");
  }
  if (classes == 0) throw std::invalid_argument("architecture: class count must be positive");
}

Var Dense::apply(const Var& x) const { return ad::matmul(x, weight) + bias; }

std::vector<Var> ModelParams::all() const {
  std::vector<Var> out;
  auto push = [&out](const Dense& d) {
    out.push_back(d.weight);
    out.push_back(d.bias);
  };
  for (const auto& d : encoder) push(d);
  push(bottleneck);
  for (const auto& d : decoder) push(d);
  push(reconstruction);
  push(classifier);
  return out;
}

void TrainConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(l2_bottleneck >= 0.0)) throw std::invalid_argument("l2 coefficient must be >= 0");
  sharp::validate(scheme);
}

std::size_t bottleneck_width(const SamplingScheme& scheme) {
  if (const auto* poly = std::get_if<PolygonScheme>(&scheme)) {
    return poly->vertex_count() + (poly->translate ? 5 : 3);
  }
  return 4;
}

Tensor draw_latent_noise(const SamplingScheme& scheme, std::size_t rows, Rng& rng) {
  if (const auto* gn = std::get_if<GenNormalScheme>(&scheme)) {
    return dist::standard_gennormal_noise(rows, Architecture::kLatentDim, gn->omega, rng);
  }
  if (const auto* poly = std::get_if<PolygonScheme>(&scheme)) {
    return dist::uniform_noise(rows, poly->vertex_count(), rng);
  }
  return dist::standard_normal_noise(rows, Architecture::kLatentDim, rng);
}

namespace {

Dense glorot_dense(std::size_t in, std::size_t out, Rng& rng, const std::string& name) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor w(Shape{in, out});
  for (auto& v : w.data()) v = limit * (2.0 * uniform_open(rng) - 1.0);
  return Dense{Var::parameter(std::move(w), name + ".weight"),
               Var::parameter(Tensor(Shape{out}), name + ".bias")};
}

}  // namespace

Model::Model(Architecture arch, SamplingScheme scheme, std::uint64_t seed)
    : arch_(std::move(arch)), scheme_(std::move(scheme)) {
  arch_.validate();
  validate(scheme_);
  Rng rng = make_rng(seed, "init");
  std::size_t in = arch_.input_dim;
  for (std::size_t i = 0; i < arch_.encoder_widths.size(); ++i) {
    params_.encoder.push_back(
        glorot_dense(in, arch_.encoder_widths[i], rng, "encoder." + std::to_string(i)));
    in = arch_.encoder_widths[i];
  }
  params_.bottleneck = glorot_dense(in, bottleneck_width(scheme_), rng, "bottleneck");
  in = Architecture::kLatentDim;
  const auto widths = arch_.decoder_widths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    params_.decoder.push_back(glorot_dense(in, widths[i], rng, "decoder." + std::to_string(i)));
    in = widths[i];
  }
  params_.reconstruction = glorot_dense(in, arch_.input_dim, rng, "reconstruction");
  const std::size_t class_in = arch_.classifier == ClassifierAttachment::DecoderTrunk
                                   ? widths.back()
                                   : Architecture::kLatentDim;
  params_.classifier = glorot_dense(class_in, arch_.classes, rng, "classifier");
}

Model::Model(Architecture arch, SamplingScheme scheme, ModelParams params)
    : arch_(std::move(arch)), scheme_(std::move(scheme)), params_(std::move(params)) {
  arch_.validate();
  validate(scheme_);
}

void Model::check_input(const Shape& shape) const {
  if (shape.size() != 2 || shape[1] != arch_.input_dim) {
    throw ShapeError("model expects [m, " + std::to_string(arch_.input_dim) + "] input, got " +
                     to_string(shape));
  }
}

LatentParams Model::encode(const Var& x) const {
  check_input(x.shape());
  Var h = x;
  for (const auto& layer : params_.encoder) h = ad::relu(layer.apply(h));
  const Var raw = params_.bottleneck.apply(h);

  if (const auto* gn = std::get_if<GenNormalScheme>(&scheme_)) {
    return GenNormalParams{ad::slice_cols(raw, 0, 2), ad::slice_cols(raw, 2, 4), gn->omega};
  }
  if (const auto* poly = std::get_if<PolygonScheme>(&scheme_)) {
    const std::size_t v = poly->vertex_count();
    DirichletPolygonParams p;
    p.log_alpha = ad::slice_cols(raw, 0, v);
    p.phi = ad::slice_cols(raw, v, v + 1);
    p.log_sx = ad::slice_cols(raw, v + 1, v + 2);
    p.log_sy = ad::slice_cols(raw, v + 2, v + 3);
    if (poly->translate) {
      p.tx = ad::slice_cols(raw, v + 3, v + 4);
      p.ty = ad::slice_cols(raw, v + 4, v + 5);
    }
    p.vertices = poly->vertices;
    return p;
  }
  return DiagGaussianParams{ad::slice_cols(raw, 0, 2), ad::slice_cols(raw, 2, 4)};
}

Var Model::latent_center(const LatentParams& theta) const {
  return std::visit(
      [](const auto& p) -> Var {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DirichletPolygonParams>) {
          auto alpha = ad::exp(p.log_alpha);
          return dist::polygon_map(alpha / ad::sum_cols(alpha), p);
        } else {
          return p.mu;
        }
      },
      theta);
}

Model::Sample Model::sample_latent(const LatentParams& theta, const Tensor& noise,
                                   DirichletGradient mode) const {
  return std::visit(
      [&noise, mode](const auto& p) -> Sample {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DiagGaussianParams>) {
          return Sample{dist::sample_gaussian(p, noise), dist::kl_gaussian_analytic(p), Var{}};
        } else if constexpr (std::is_same_v<P, GenNormalParams>) {
          auto z = dist::sample_gennormal(p, noise);
          auto log_q = ad::sum_cols(dist::logpdf_gennormal(z, p.mu, p.log_alpha, p.omega));
          auto log_p = ad::sum_cols(dist::logpdf_standard_gennormal(z, p.omega));
          return Sample{z, log_q - log_p, log_q};
        } else {
          auto alpha = ad::exp(p.log_alpha);
          auto draw = dist::sample_dirichlet(alpha, noise, mode);
          auto log_q = dist::dirichlet_logpdf(draw.log_w, alpha);
          auto log_p = dist::dirichlet_flat_logpdf(noise.rows(), noise.cols());
          return Sample{dist::polygon_map(draw.w, p), log_q - log_p, log_q};
        }
      },
      theta);
}

Model::Heads Model::decode(const Var& z) const {
  Var h = z;
  for (const auto& layer : params_.decoder) h = ad::relu(layer.apply(h));
  Heads out;
  out.recon_logits = params_.reconstruction.apply(h);
  out.class_logits = params_.classifier.apply(
      arch_.classifier == ClassifierAttachment::DecoderTrunk ? h : z);
  return out;
}

Tensor Model::project(const Tensor& x) const {
  ad::NoGradGuard no_grad;
  return latent_center(encode(x)).value();
}

std::array<double, 2> Model::project_point(std::span<const double> x) const {
  const Tensor r = project(Tensor(Shape{1, x.size()}, std::vector<double>(x.begin(), x.end())));
  return {r[0], r[1]};
}

namespace {

struct Forward {
  LatentParams theta;
  Var z;
  Var reg_pp;  // [m, 1] or invalid
  Var log_q;
  Model::Heads heads;
};

Forward run_forward(const Model& model, const Tensor& x, const TrainConfig& config,
                    const Tensor* noise) {
  Forward f;
  f.theta = model.encode(x);
  if (config.deterministic_bottleneck) {
    f.z = model.latent_center(f.theta);
  } else {
    if (!noise) throw std::invalid_argument("stochastic bottleneck requires latent noise");
    auto s = model.sample_latent(f.theta, *noise, config.dirichlet_gradient);
    f.z = s.z;
    f.reg_pp = s.reg;
    f.log_q = s.log_q;
  }
  f.heads = model.decode(f.z);
  return f;
}

// Mean binary cross-entropy over features per point, from logits.
Var reconstruction_per_point(const Var& logits, const Tensor& x) {
  const double n = static_cast<double>(x.cols());
  return ad::scale(ad::sum_cols(ad::softplus(logits) - Var::constant(x) * logits), 1.0 / n);
}

Var classification_per_point(const Var& logits, std::span<const int> labels) {
  const std::size_t m = logits.shape()[0], k = logits.shape()[1];
  Tensor onehot(Shape{m, k});
  for (std::size_t i = 0; i < m; ++i) onehot.at(i, static_cast<std::size_t>(labels[i] - 1)) = 1.0;
  return ad::neg(ad::sum_cols(Var::constant(std::move(onehot)) * ad::log_softmax(logits)));
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t classes, double rho) {
  if (labels.empty()) {
    if (rho != 0.0) throw std::invalid_argument("labels are required when rho > 0");
    return;
  }
  if (labels.size() != rows) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                " does not match batch size " + std::to_string(rows));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || static_cast<std::size_t>(labels[i]) > classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside 1.." + std::to_string(classes));
    }
  }
}

Var l2_term(const Model& model, const Forward& f, const TrainConfig& config) {
  if (config.l2_mode == L2Mode::Weights) {
    return ad::scale(ad::sum(ad::square(model.params().bottleneck.weight)), config.l2_bottleneck);
  }
  // Activity: penalise the bottleneck outputs, averaged over the batch.
  std::vector<Var> parts = std::visit(
      [](const auto& p) -> std::vector<Var> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, DiagGaussianParams>) {
          return {p.mu, p.log_sigma};
        } else if constexpr (std::is_same_v<P, GenNormalParams>) {
          return {p.mu, p.log_alpha};
        } else {
          std::vector<Var> v{p.log_alpha, p.phi, p.log_sx, p.log_sy};
          if (p.tx.valid()) {
            v.push_back(p.tx);
            v.push_back(p.ty);
          }
          return v;
        }
      },
      f.theta);
  auto raw = ad::concat_cols(parts);
  return ad::scale(ad::mean(ad::sum_cols(ad::square(raw))), config.l2_bottleneck);
}

}  // namespace

LossResult compute_loss(const Model& model, const Tensor& x, std::span<const int> labels,
                        const TrainConfig& config, const Tensor* noise) {
  if (x.rows() == 0) throw std::invalid_argument("empty batch");
  check_labels(labels, x.rows(), model.architecture().classes, config.rho);
  const Forward f = run_forward(model, x, config, noise);

  const Var recon_pp = reconstruction_per_point(f.heads.recon_logits, x);
  const Var recon = ad::mean(recon_pp);
  const Var class_pp = labels.empty() ? Var::constant(Tensor(Shape{x.rows(), 1}))
                                      : classification_per_point(f.heads.class_logits, labels);
  const Var cls = ad::mean(class_pp);
  const Var reg = f.reg_pp.valid() ? ad::mean(f.reg_pp) : Var::constant(Tensor::scalar(0.0));
  const Var l2 = l2_term(model, f, config);

  Var total = recon + ad::scale(cls, config.rho) + ad::scale(reg, config.beta) + l2;
  if (config.dirichlet_gradient == DirichletGradient::ScoreFunction && f.log_q.valid() &&
      std::holds_alternative<PolygonScheme>(model.scheme())) {
    Var per_point = recon_pp + ad::scale(class_pp, config.rho) + ad::scale(f.reg_pp, config.beta);
    total = total + dist::score_function_surrogate(per_point, f.log_q);
  }

  LossResult out;
  out.parts = LossBreakdown{recon.item(), cls.item(), reg.item(), l2.item(), total.item()};
  out.total = std::move(total);
  return out;
}

LossBreakdown classifier_autoencoder_loss(const Model& model, const Tensor& x,
                                          std::span<const int> labels, const TrainConfig& config) {
  ad::NoGradGuard no_grad;
  check_labels(labels, x.rows(), model.architecture().classes, config.rho);
  TrainConfig det = config;
  det.deterministic_bottleneck = true;
  const Forward f = run_forward(model, x, det, nullptr);
  LossBreakdown out;
  out.recon = ad::mean(reconstruction_per_point(f.heads.recon_logits, x)).item();
  out.cls = labels.empty() ? 0.0 : ad::mean(classification_per_point(f.heads.class_logits, labels)).item();
  out.l2 = l2_term(model, f, det).item();
  out.total = out.recon + config.rho * out.cls + out.l2;
  return out;
}

}  // namespace sharp
