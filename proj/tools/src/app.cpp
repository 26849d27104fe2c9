#include "sharp_app/app.hpp"

#include <filesystem>
#include <functional>
#include <sstream>

#include <CLI11.hpp>

#include "sharp/tensor.hpp"
#include "sharp_app/commands.hpp"
#include "sharp_app/manifest.hpp"

#ifndef SHARP_VERSION
#define SHARP_VERSION "0.0.0"
#endif

namespace sharp::app {

namespace {

void add_data_flags(CLI::App* cmd, DataFlags& f, bool required = true) {
  auto* data = cmd->add_option("--data", f.data, "Input data: CSV with header, or IDX images");
  if (required) data->required();
  cmd->add_option("--label-column", f.label_column, "CSV column holding class labels");
  cmd->add_option("--label-file", f.label_file, "IDX label file paired with IDX images");
  cmd->add_option("--subsample", f.subsample, "Stratified subsample size (0 keeps all rows)");
  cmd->add_option("--subsample-seed", f.subsample_seed, "Seed of the subsample");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_beta) {
  add_data_flags(cmd, f.input);
  cmd->add_option("--labels", f.labels, "Label source: gt, kmeans[:K] or agglo[:K]");
  cmd->add_option("--shape", f.shape, "Sampling scheme: gaussian, gennorm:OMEGA, polygon:V[:no-translate]");
  if (with_beta) cmd->add_option("--beta", f.beta, "Weight of the shape regulariser");
  cmd->add_option("--rho", f.rho, "Weight of the classification loss");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_flag("--deterministic", f.deterministic, "Use the distribution mean instead of sampling");
  cmd->add_option("--l2", f.l2, "L2 coefficient on the bottleneck layer");
  cmd->add_option("--l2-mode", f.l2_mode, "L2 target: weights or activity");
  cmd->add_option("--classifier", f.classifier, "Classifier attachment: decoder or bottleneck");
  cmd->add_option("--dirichlet-gradient", f.dirichlet_gradient, "Dirichlet gradient estimator: implicit or score");
  cmd->add_option("--learning-rate", f.learning_rate, "Adam learning rate");
  cmd->add_option("--encoder-widths", f.encoder_widths, "Comma-separated encoder hidden widths");
}

// The subcommand's command line with every default written out.
std::vector<std::string> resolved_args(const CLI::App& cmd) {
  std::vector<std::string> out{cmd.get_name()};
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string flag = "--" + opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      if (opt->count() > 0) out.push_back(flag);
      continue;
    }
    if (opt->count() > 0) {
      const auto& results = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < results.size(); ++i) joined += (i ? "," : "") + results[i];
      out.push_back(flag);
      out.push_back(joined);
    } else if (const std::string d = opt->get_default_str(); !d.empty() && d.front() != '[') {
      out.push_back(flag);
      out.push_back(d);
    }
  }
  return out;
}

int replay(const std::string& manifest_path, bool verify, std::ostream& out, std::ostream& err) {
  const Manifest m = Manifest::load(manifest_path);
  if (m.args.empty()) throw std::invalid_argument("manifest '" + manifest_path + "' records no command");
  const auto previous = std::filesystem::current_path();
  if (!m.working_directory.empty()) std::filesystem::current_path(m.working_directory);
  struct Restore {
    std::filesystem::path dir;
    ~Restore() { std::filesystem::current_path(dir); }
  } restore{previous};

  if (verify) {
    for (const auto& in : m.inputs) {
      if (record_file(in.path).fnv1a64 != in.fnv1a64) {
        err << "error: input " << in.path << " changed since the recorded run\n";
        return kExitUsage;
      }
    }
  }
  const int code = run(m.args, out, err);
  if (code != kExitOk || !verify) return code;
  for (const auto& o : m.outputs) {
    if (record_file(o.path).fnv1a64 != o.fnv1a64) {
      err << "error: replayed output " << o.path << " differs from the recorded run\n";
      return kExitUsage;
    }
  }
  out << "replay reproduced " << m.outputs.size() << " output file(s)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-regularised neural projections of labelled high-dimensional data", "sharp"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", SHARP_VERSION);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a projection model");
  add_train_flags(train, train_flags, true);
  train->add_option("--out", train_flags.out, "Model file to write")->required();
  train->add_option("--history", train_flags.history, "Optional per-epoch loss CSV");

  ProjectFlags project_flags;
  auto* project = app.add_subcommand("project", "Project data through a trained model");
  project->add_option("--model", project_flags.model, "Model file")->required();
  add_data_flags(project, project_flags.input);
  project->add_option("--out", project_flags.out, "Projection CSV to write")->required();

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Compute projection quality metrics");
  eval->add_option("--projection", eval_flags.projection, "Projection CSV")->required();
  add_data_flags(eval, eval_flags.input);
  eval->add_option("--model", eval_flags.model, "Model whose scaling and fingerprint to use");
  eval->add_option("--k", eval_flags.k, "Neighbourhood size");
  eval->add_option("--out", eval_flags.out, "Metrics CSV to write")->required();

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate one model per beta value");
  add_train_flags(sweep, sweep_flags.train, false);
  sweep->add_option("--betas", sweep_flags.betas, "Comma-separated beta values (default 0,0.05,0.1,0.25,0.5,1)")
      ->delimiter(',');
  sweep->add_option("--k", sweep_flags.k, "Neighbourhood size");
  sweep->add_option("--out", sweep_flags.out, "Per-beta metrics CSV to write")->required();
  sweep->add_option("--projections-dir", sweep_flags.projections_dir, "Directory for per-beta projection CSVs");

  PlotFlags plot_flags;
  auto* plot = app.add_subcommand("plot", "Render a projection CSV as an SVG scatterplot");
  plot->add_option("--projection", plot_flags.projection, "Projection CSV")->required();
  plot->add_option("--out", plot_flags.out, "SVG file to write")->required();
  plot->add_flag("--per-class-hull", plot_flags.per_class_hull, "Draw each class's convex hull");

  std::string manifest_path;
  bool verify = false;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("--manifest", manifest_path, "Manifest JSON")->required();
  replay_cmd->add_flag("--verify", verify, "Check recorded input and output hashes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every other parse failure is a usage error.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  try {
    if (chosen == replay_cmd) return replay(manifest_path, verify, out, err);

    Manifest manifest;
    manifest.version = SHARP_VERSION;
    manifest.command = chosen->get_name();
    manifest.args = resolved_args(*chosen);
    manifest.working_directory = std::filesystem::current_path().string();
    manifest.started = utc_timestamp();

    Outcome outcome;
    if (chosen == train) outcome = cmd_train(train_flags, err);
    else if (chosen == project) outcome = cmd_project(project_flags, err);
    else if (chosen == eval) outcome = cmd_eval(eval_flags, err);
    else if (chosen == sweep) outcome = cmd_sweep(sweep_flags, err);
    else outcome = cmd_plot(plot_flags, err);

    manifest.finished = utc_timestamp();
    manifest.config = outcome.config;
    for (const auto& p : outcome.inputs) manifest.inputs.push_back(record_file(p));
    for (const auto& p : outcome.outputs) manifest.outputs.push_back(record_file(p));
    manifest.save(manifest_path_for(outcome.primary_output));
    out << "wrote " << outcome.primary_output << '\n';
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace sharp::app
