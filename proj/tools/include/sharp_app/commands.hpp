#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "sharp/network.hpp"
#include "sharp_app/manifest.hpp"

namespace sharp::app {

struct DataFlags {
  std::string data;
  std::string label_column = "label";
  std::string label_file;
  std::size_t subsample = 0;  // 0 keeps every row
  std::uint64_t subsample_seed = 0;
};

struct TrainFlags {
  DataFlags input;
  std::string labels = "gt";
  std::string shape = "gaussian";
  double beta = 0.1;
  double rho = 1.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  bool deterministic = false;
  double l2 = 0.5;
  std::string l2_mode = "weights";
  std::string classifier = "decoder";
  std::string dirichlet_gradient = "implicit";
  double learning_rate = 1e-3;
  std::string encoder_widths = "512,128,32";
  std::string out;
  std::string history;  // optional per-epoch loss CSV
};

struct ProjectFlags {
  std::string model;
  DataFlags input;
  std::string out;
};

struct EvalFlags {
  std::string projection;
  DataFlags input;
  std::string model;  // optional: reuse its scaling and check the data fingerprint
  std::size_t k = 7;
  std::string out;
};

struct SweepFlags {
  TrainFlags train;
  std::vector<double> betas;  // empty: 0, 0.05, 0.1, 0.25, 0.5, 1.0
  std::size_t k = 7;
  std::string out;
  std::string projections_dir;  // optional per-beta projection CSVs
};

struct PlotFlags {
  std::string projection;
  std::string out;
  bool per_class_hull = false;
};

/// What a command read and wrote, for its manifest.
struct Outcome {
  std::string primary_output;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Json config;
};

const std::vector<double>& default_beta_grid();

/// TrainConfig and Architecture described by the flags.
TrainConfig make_train_config(const TrainFlags& flags);
Architecture make_architecture(const TrainFlags& flags);

/// Worker count for parallel commands: SHARP_THREADS when set, else the
/// hardware concurrency, never below 1.
std::size_t worker_threads();

Outcome cmd_train(const TrainFlags& flags, std::ostream& log);
Outcome cmd_project(const ProjectFlags& flags, std::ostream& log);
Outcome cmd_eval(const EvalFlags& flags, std::ostream& log);
Outcome cmd_sweep(const SweepFlags& flags, std::ostream& log);
Outcome cmd_plot(const PlotFlags& flags, std::ostream& log);

}  // namespace sharp::app
