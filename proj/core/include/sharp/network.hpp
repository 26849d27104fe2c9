#pragma once

// Shape-regularised projection network.
//
//   x -> encoder (ReLU) -> bottleneck head theta -> latent z (2-D)
//     -> decoder (ReLU) -> logistic reconstruction
//     -> softmax classifier on the last decoder hidden layer (or on z)
//
// Training minimises recon + rho * class + beta * reg + l2, where reg is the
// KL divergence of the sampling distribution against the scheme's prior and
// l2 penalises the bottleneck head.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sharp/adam.hpp"
#include "sharp/autodiff.hpp"
#include "sharp/distributions.hpp"

namespace sharp {

enum class ClassifierAttachment { DecoderTrunk, Bottleneck };
enum class L2Mode { Weights, Activity };

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_widths{512, 128, 32};
  std::size_t classes = 0;
  ClassifierAttachment classifier = ClassifierAttachment::DecoderTrunk;

  static constexpr std::size_t kLatentDim = 2;

  /// Decoder hidden widths; the encoder's, reversed.
  std::vector<std::size_t> decoder_widths() const;
  void validate() const;
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Dense {
  ad::Var weight;  // [in, out]
  ad::Var bias;    // [out]
  ad::Var apply(const ad::Var& x) const;
};

struct ModelParams {
  std::vector<Dense> encoder;
  Dense bottleneck;  // emits the scheme's distribution parameters
  std::vector<Dense> decoder;
  Dense reconstruction;
  Dense classifier;

  /// Every parameter tensor in a fixed order (weight before bias, input to
  /// output).
  std::vector<ad::Var> all() const;
};

struct TrainConfig {
  double rho = 1.0;
  double beta = 0.1;
  std::size_t batch_size = 256;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  double l2_bottleneck = 0.5;
  L2Mode l2_mode = L2Mode::Weights;
  SamplingScheme scheme = GaussianScheme{};
  bool deterministic_bottleneck = false;
  DirichletGradient dirichlet_gradient = DirichletGradient::Implicit;
  AdamOptions adam;

  void validate() const;
};

struct LossBreakdown {
  double recon = 0.0;
  double cls = 0.0;
  double reg = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// Number of bottleneck outputs a scheme needs.
std::size_t bottleneck_width(const SamplingScheme& scheme);

/// Parameter-free noise for one stochastic forward pass over `rows` points:
/// standard normals (Gaussian), standard GN draws (GN) or uniforms behind the
/// Gamma variates (Dirichlet polygon).
Tensor draw_latent_noise(const SamplingScheme& scheme, std::size_t rows, Rng& rng);

class Model {
 public:
  Model() = default;
  /// Glorot-uniform weights and zero biases from `seed`'s init stream.
  Model(Architecture arch, SamplingScheme scheme, std::uint64_t seed);
  Model(Architecture arch, SamplingScheme scheme, ModelParams params);

  const Architecture& architecture() const noexcept { return arch_; }
  const SamplingScheme& scheme() const noexcept { return scheme_; }
  const ModelParams& params() const noexcept { return params_; }
  ModelParams& params() noexcept { return params_; }

  /// Distribution parameters for a [m, n] batch.
  LatentParams encode(const ad::Var& x) const;
  LatentParams encode(const Tensor& x) const { return encode(ad::Var::constant(x)); }

  /// Deterministic latent centre: mu for Gaussian and GN, the affine image of
  /// alpha / sum(alpha) for the polygon scheme.
  ad::Var latent_center(const LatentParams& theta) const;

  /// Stochastic latent sample driven by `noise` (see draw_latent_noise).
  struct Sample {
    ad::Var z;
    ad::Var reg;    // per-point KL estimate, [m, 1]
    ad::Var log_q;  // per-point log q(sample), [m, 1]; invalid for the Gaussian scheme
  };
  Sample sample_latent(const LatentParams& theta, const Tensor& noise, DirichletGradient mode) const;

  struct Heads {
    ad::Var recon_logits;  // [m, n]
    ad::Var class_logits;  // [m, K]
  };
  Heads decode(const ad::Var& z) const;

  /// Projected 2-D coordinates of a [m, n] batch; no sampling noise.
  Tensor project(const Tensor& x) const;
  std::array<double, 2> project_point(std::span<const double> x) const;

 private:
  void check_input(const Shape& shape) const;

  Architecture arch_;
  SamplingScheme scheme_ = GaussianScheme{};
  ModelParams params_;
};

struct LossResult {
  ad::Var total;
  LossBreakdown parts;
};

/// Loss of one mini-batch. `labels` hold classes in {1..K}; they may be empty
/// when rho == 0. `noise` is required unless the bottleneck is deterministic.
LossResult compute_loss(const Model& model, const Tensor& x, std::span<const int> labels,
                        const TrainConfig& config, const Tensor* noise);

/// recon + rho * class + l2 on the deterministic bottleneck: the
/// auto-encoder-with-classifier loss, without any shape regulariser.
LossBreakdown classifier_autoencoder_loss(const Model& model, const Tensor& x,
                                          std::span<const int> labels, const TrainConfig& config);

struct TrainResult {
  Model model;
  std::vector<LossBreakdown> history;  // per-epoch, sample-weighted means
};

/// Mini-batch Adam training. The architecture's input_dim and classes are
/// filled from the data when zero. Throws NumericalError on a non-finite loss
/// naming the epoch and batch.
TrainResult train(const Tensor& x, std::span<const int> labels, Architecture arch,
                  const TrainConfig& config);

/// Stable Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

/// Rows of `x` at `indices`.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

}  // namespace sharp
