#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "sharp/network.hpp"

namespace sharp {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const std::size_t n = x.cols();
  Tensor out(Shape{indices.size(), n});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = x.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

TrainResult train(const Tensor& x, std::span<const int> labels, Architecture arch,
                  const TrainConfig& config) {
  config.validate();
  if (x.rank() != 2 || x.rows() == 0) throw std::invalid_argument("training data must be a nonempty matrix");
  if (!x.all_finite()) throw std::invalid_argument("training data contains non-finite values");
  if (arch.input_dim == 0) arch.input_dim = x.cols();
  if (arch.classes == 0) {
    int k = labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end());
    arch.classes = static_cast<std::size_t>(std::max(k, 1));
  }
  if (arch.input_dim != x.cols()) {
    throw ShapeError("architecture input dimension " + std::to_string(arch.input_dim) +
                     " does not match data with " + std::to_string(x.cols()) + " features");
  }

  TrainResult result{Model(arch, config.scheme, config.seed), {}};
  Model& model = result.model;
  std::vector<ad::Var> params = model.params().all();
  AdamState adam(params, config.adam);
  Rng sampling = make_rng(config.seed, "sampling");

  const std::size_t m = x.rows();
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle = make_rng(config.seed, "shuffle", epoch);
    const auto order = shuffled_indices(m, shuffle);
    LossBreakdown sums;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < m; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(m, start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Tensor xb = gather_rows(x, rows);
      batch_labels.clear();
      if (!labels.empty()) {
        for (auto r : rows) batch_labels.push_back(labels[r]);
      }
      Tensor noise;
      if (!config.deterministic_bottleneck) {
        noise = draw_latent_noise(config.scheme, rows.size(), sampling);
      }
      const LossResult loss = compute_loss(model, xb, batch_labels, config,
                                           config.deterministic_bottleneck ? nullptr : &noise);
      if (!std::isfinite(loss.parts.total)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      const auto grads = ad::gradients(loss.total, params);
      try {
        adam_step(adam, params, grads);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index));
      }
      const double w = static_cast<double>(rows.size());
      sums.recon += w * loss.parts.recon;
      sums.cls += w * loss.parts.cls;
      sums.reg += w * loss.parts.reg;
      sums.l2 += w * loss.parts.l2;
      sums.total += w * loss.parts.total;
    }
    const double inv = 1.0 / static_cast<double>(m);
    result.history.push_back(LossBreakdown{sums.recon * inv, sums.cls * inv, sums.reg * inv,
                                           sums.l2 * inv, sums.total * inv});
  }
  return result;
}

}  // namespace sharp
