#include "sharp_app/commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "sharp/dataset.hpp"
#include "sharp/hash.hpp"
#include "sharp/metrics.hpp"
#include "sharp/model_io.hpp"
#include "sharp/pseudolabels.hpp"
#include "sharp_app/svg.hpp"
#include "sharp_app/table_io.hpp"

namespace sharp::app {

namespace {

struct Prepared {
  Dataset data;  // scaled
  std::vector<int> train_labels;
  std::vector<std::string> train_label_names;
  LabelSource source;
};

Dataset load_input(const DataFlags& f) {
  Dataset d = load_any(f.data, f.label_column, f.label_file);
  if (f.subsample != 0) d = subsample(d, f.subsample, f.subsample_seed);
  return d;
}

Prepared prepare(const TrainFlags& f, std::ostream& log) {
  Prepared p;
  p.data = scale_minmax(load_input(f.input));
  p.source = LabelSource::parse(f.labels);
  std::size_t k = p.source.k;
  switch (p.source.kind) {
    case LabelSource::Kind::GroundTruth:
      if (!p.data.has_labels()) {
        throw std::invalid_argument("--labels gt needs ground-truth labels, but " + f.input.data +
                                    (f.input.label_file.empty() ? " has no '" + f.input.label_column + "' column"
                                                                : " has no label file"));
      }
      p.train_labels = p.data.labels;
      p.train_label_names = p.data.label_names;
      return p;
    case LabelSource::Kind::KMeans:
    case LabelSource::Kind::Agglomerative:
      if (k == 0) k = p.data.classes();
      if (k < 2) throw std::invalid_argument("--labels " + f.labels + ": give K explicitly (the data has no classes)");
      p.source.k = k;
      p.train_labels = p.source.kind == LabelSource::Kind::KMeans ? kmeans(p.data.x, k, f.seed).labels
                                                                  : agglomerative(p.data.x, k);
      for (std::size_t c = 1; c <= k; ++c) p.train_label_names.push_back(std::to_string(c));
      log << "pseudolabels: " << p.source.describe() << '\n';
      return p;
  }
  return p;
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string cell = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t w = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), w);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || w == 0) {
      throw std::invalid_argument("--encoder-widths: '" + text + "' is not a comma-separated list of positive integers");
    }
    out.push_back(w);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

Json config_json(const TrainFlags& f, const TrainConfig& c, const Architecture& a, const LabelSource& src) {
  return Json{{"labels", src.describe()},
              {"shape", describe(c.scheme)},
              {"beta", c.beta},
              {"rho", c.rho},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"deterministic", c.deterministic_bottleneck},
              {"l2", c.l2_bottleneck},
              {"l2_mode", f.l2_mode},
              {"classifier", f.classifier},
              {"dirichlet_gradient", f.dirichlet_gradient},
              {"adam",
               {{"learning_rate", c.adam.learning_rate},
                {"beta1", c.adam.beta1},
                {"beta2", c.adam.beta2},
                {"epsilon", c.adam.epsilon}}},
              {"encoder_widths", a.encoder_widths},
              {"input_dim", a.input_dim},
              {"classes", a.classes},
              {"subsample", f.input.subsample},
              {"subsample_seed", f.input.subsample_seed}};
}

void write_history(const std::string& path, const std::vector<LossBreakdown>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "epoch,recon,class,reg,l2,total\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    out << e << ',' << format_number(h.recon) << ',' << format_number(h.cls) << ',' << format_number(h.reg) << ','
        << format_number(h.l2) << ',' << format_number(h.total) << '\n';
  }
}

Tensor checked_projection(const Model& model, const Tensor& x) {
  Tensor p = model.project(x);
  if (!p.all_finite()) throw NumericalError("projection produced non-finite coordinates");
  return p;
}

std::vector<std::string> input_files(const DataFlags& f) {
  std::vector<std::string> out{f.data};
  if (!f.label_file.empty()) out.push_back(f.label_file);
  return out;
}

std::vector<int> factorized(const std::vector<std::string>& names) {
  std::vector<std::string> unused;
  return factorize(names, unused);
}

}  // namespace

const std::vector<double>& default_beta_grid() {
  static const std::vector<double> grid{0.0, 0.05, 0.1, 0.25, 0.5, 1.0};
  return grid;
}

TrainConfig make_train_config(const TrainFlags& f) {
  TrainConfig c;
  c.rho = f.rho;
  c.beta = f.beta;
  c.batch_size = f.batch_size;
  c.epochs = f.epochs;
  c.seed = f.seed;
  c.l2_bottleneck = f.l2;
  if (f.l2_mode == "weights") {
    c.l2_mode = L2Mode::Weights;
  } else if (f.l2_mode == "activity") {
    c.l2_mode = L2Mode::Activity;
  } else {
    throw std::invalid_argument("--l2-mode must be weights or activity, got '" + f.l2_mode + "'");
  }
  c.scheme = parse_scheme(f.shape);
  c.deterministic_bottleneck = f.deterministic;
  if (f.dirichlet_gradient == "implicit") {
    c.dirichlet_gradient = DirichletGradient::Implicit;
  } else if (f.dirichlet_gradient == "score") {
    c.dirichlet_gradient = DirichletGradient::ScoreFunction;
  } else {
    throw std::invalid_argument("--dirichlet-gradient must be implicit or score, got '" + f.dirichlet_gradient + "'");
  }
  c.adam.learning_rate = f.learning_rate;
  c.validate();
  return c;
}

Architecture make_architecture(const TrainFlags& f) {
  Architecture a;
  a.encoder_widths = parse_widths(f.encoder_widths);
  if (f.classifier == "decoder") {
    a.classifier = ClassifierAttachment::DecoderTrunk;
  } else if (f.classifier == "bottleneck") {
    a.classifier = ClassifierAttachment::Bottleneck;
  } else {
    throw std::invalid_argument("--classifier must be decoder or bottleneck, got '" + f.classifier + "'");
  }
  return a;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("SHARP_THREADS"); env && *env) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Outcome cmd_train(const TrainFlags& f, std::ostream& log) {
  if (f.out.empty()) throw std::invalid_argument("train: --out is required");
  const TrainConfig config = make_train_config(f);
  Architecture arch = make_architecture(f);
  const Prepared p = prepare(f, log);

  TrainResult result = train(p.data.x, p.train_labels, arch, config);
  arch = result.model.architecture();
  checked_projection(result.model, p.data.x);

  ModelArtifact artifact;
  artifact.model = result.model;
  artifact.config = config;
  artifact.feature_min = p.data.feature_min;
  artifact.feature_max = p.data.feature_max;
  artifact.label_names = p.train_label_names;
  artifact.data_fingerprint = fingerprint(p.data);
  save_model(artifact, f.out);

  Outcome o;
  o.primary_output = f.out;
  o.inputs = input_files(f.input);
  o.outputs.push_back(f.out);
  if (!f.history.empty()) {
    write_history(f.history, result.history);
    o.outputs.push_back(f.history);
  }
  o.config = config_json(f, config, arch, p.source);
  o.config["data_fingerprint"] = hex64(artifact.data_fingerprint);
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    log << "trained " << config.epochs << " epochs on " << p.data.rows() << " points; final loss "
        << format_number(last.total) << '\n';
  }
  return o;
}

Outcome cmd_project(const ProjectFlags& f, std::ostream& log) {
  if (f.out.empty()) throw std::invalid_argument("project: --out is required");
  const ModelArtifact artifact = load_model(f.model);
  Dataset data = load_input(f.input);
  const std::size_t expected = artifact.model.architecture().input_dim;
  if (data.dims() != expected) {
    throw std::invalid_argument("model " + f.model + " expects " + std::to_string(expected) + " features but " +
                                f.input.data + " has " + std::to_string(data.dims()));
  }
  data.x = apply_scaling(data.x, artifact.feature_min, artifact.feature_max);
  if (fingerprint(data) != artifact.data_fingerprint) {
    log << "note: data differs from the training data (out-of-sample projection)\n";
  }
  const Tensor p = checked_projection(artifact.model, data.x);
  write_projection(f.out, p, label_strings(data));

  Outcome o;
  o.primary_output = f.out;
  o.inputs = input_files(f.input);
  o.inputs.insert(o.inputs.begin(), f.model);
  o.outputs.push_back(f.out);
  o.config = Json{{"model", f.model},
                  {"label_column", f.input.label_column},
                  {"subsample", f.input.subsample},
                  {"subsample_seed", f.input.subsample_seed},
                  {"rows", data.rows()}};
  return o;
}

Outcome cmd_eval(const EvalFlags& f, std::ostream& log) {
  if (f.out.empty()) throw std::invalid_argument("eval: --out is required");
  const Projection proj = read_projection(f.projection);
  Dataset data = load_input(f.input);
  if (data.rows() != proj.points.rows()) {
    throw std::invalid_argument("projection " + f.projection + " has " + std::to_string(proj.points.rows()) +
                                " rows but " + f.input.data + " has " + std::to_string(data.rows()));
  }
  Outcome o;
  o.primary_output = f.out;
  o.inputs = input_files(f.input);
  o.inputs.insert(o.inputs.begin(), f.projection);
  if (!f.model.empty()) {
    const ModelArtifact artifact = load_model(f.model);
    if (data.dims() != artifact.feature_min.size()) {
      throw std::invalid_argument("model " + f.model + " expects " + std::to_string(artifact.feature_min.size()) +
                                  " features but " + f.input.data + " has " + std::to_string(data.dims()));
    }
    data.x = apply_scaling(data.x, artifact.feature_min, artifact.feature_max);
    if (fingerprint(data) != artifact.data_fingerprint) {
      log << "warning: evaluation data differs from the data the model was trained on\n";
    }
    o.inputs.push_back(f.model);
  } else {
    data = scale_minmax(std::move(data));
  }

  std::vector<int> labels;
  if (!proj.labels.empty()) {
    labels = factorized(proj.labels);
  } else if (data.has_labels()) {
    labels = data.labels;
  } else {
    log << "warning: no labels; neighborhood_hit and distance_consistency omitted\n";
  }
  const MetricsReport report = evaluate_all(data.x, proj.points, labels, f.k);
  write_metrics(f.out, report);
  o.outputs.push_back(f.out);
  o.config = Json{{"k", f.k},
                  {"model", f.model},
                  {"label_column", f.input.label_column},
                  {"subsample", f.input.subsample},
                  {"subsample_seed", f.input.subsample_seed},
                  {"labelled", !labels.empty()}};
  return o;
}

Outcome cmd_sweep(const SweepFlags& f, std::ostream& log) {
  if (f.out.empty()) throw std::invalid_argument("sweep: --out is required");
  const std::vector<double>& betas = f.betas.empty() ? default_beta_grid() : f.betas;
  for (double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("sweep: beta values must be finite and >= 0");
  }
  TrainFlags base = f.train;
  const TrainConfig base_config = make_train_config(base);
  Architecture arch = make_architecture(base);
  const Prepared p = prepare(base, log);
  const std::vector<int>& eval_labels = p.data.has_labels() ? p.data.labels : p.train_labels;

  struct Job {
    MetricsReport report;
    Tensor projection;
    std::exception_ptr error;
  };
  std::vector<Job> jobs(betas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < betas.size();) {
      try {
        TrainConfig config = base_config;
        config.beta = betas[i];
        const TrainResult r = train(p.data.x, p.train_labels, arch, config);
        jobs[i].projection = checked_projection(r.model, p.data.x);
        jobs[i].report = evaluate_all(p.data.x, jobs[i].projection, eval_labels, f.k);
      } catch (...) {
        jobs[i].error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(worker_threads(), betas.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& j : jobs) {
    if (j.error) std::rethrow_exception(j.error);
  }

  Outcome o;
  o.primary_output = f.out;
  o.inputs = input_files(base.input);
  {
    std::ofstream out(f.out, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + f.out + "'");
    out << "metric";
    for (double b : betas) out << ',' << format_number(b);
    out << '\n';
    auto row = [&](const char* name, auto get) {
      out << name;
      for (const auto& j : jobs) out << ',' << format_number(get(j.report));
      out << '\n';
    };
    row("trustworthiness", [](const MetricsReport& r) { return r.trustworthiness; });
    row("continuity", [](const MetricsReport& r) { return r.continuity; });
    row("shepard_correlation", [](const MetricsReport& r) { return r.shepard_correlation; });
    row("normalized_stress", [](const MetricsReport& r) { return r.normalized_stress; });
    row("neighborhood_hit", [](const MetricsReport& r) { return *r.neighborhood_hit; });
    row("distance_consistency", [](const MetricsReport& r) { return *r.distance_consistency; });
  }
  o.outputs.push_back(f.out);
  if (!f.projections_dir.empty()) {
    std::filesystem::create_directories(f.projections_dir);
    const auto names = p.data.has_labels() ? label_strings(p.data) : std::vector<std::string>{};
    for (std::size_t i = 0; i < betas.size(); ++i) {
      const std::string path =
          (std::filesystem::path(f.projections_dir) / ("beta_" + format_number(betas[i]) + ".csv")).string();
      write_projection(path, jobs[i].projection, names);
      o.outputs.push_back(path);
    }
  }
  arch.input_dim = p.data.dims();
  o.config = config_json(base, base_config, arch, p.source);
  o.config.erase("beta");
  o.config["betas"] = betas;
  o.config["k"] = f.k;
  o.config["threads"] = threads;
  log << "swept " << betas.size() << " beta values with " << threads << " worker(s)\n";
  return o;
}

Outcome cmd_plot(const PlotFlags& f, std::ostream& log) {
  if (f.out.empty()) throw std::invalid_argument("plot: --out is required");
  const Projection proj = read_projection(f.projection);
  std::ofstream out(f.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + f.out + "'");
  PlotOptions options;
  options.per_class_hull = f.per_class_hull;
  const PlotResult r = write_svg(out, proj.points, proj.labels, options);
  if (r.palette_cycled) {
    log << "warning: " << r.classes << " classes exceed the " << kPalette.size()
        << "-colour palette; colours repeat\n";
  }
  Outcome o;
  o.primary_output = f.out;
  o.inputs.push_back(f.projection);
  o.outputs.push_back(f.out);
  o.config = Json{{"per_class_hull", f.per_class_hull}, {"classes", r.classes}};
  return o;
}

}  // namespace sharp::app
