#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mandiff/config.hpp"
#include "mandiff/datasets.hpp"
#include "mandiff/io.hpp"
#include "mandiff/losses.hpp"
#include "mandiff/manifold.hpp"
#include "mandiff/mesh.hpp"
#include "mandiff/metrics.hpp"
#include "mandiff/samplers.hpp"
#include "mandiff/verification.hpp"

namespace mandiff {

/// Everything a reproducible run needs. The canonical flat form echoes all
/// defaults, so the config hash pins every knob.
struct ExperimentConfig {
  // manifold
  std::string manifold_kind = "hyperplane";  // hyperplane | sphere | so | mesh
  int ambient_dim = 3;
  int so_order = 3;
  std::string mesh_source = "icosahedron";  // built-in name or OBJ path
  std::vector<int> eigen_indices = {0, 5, 9};
  // schedule
  double sigma_min = 0.001;
  double sigma_max = 3.0;
  double horizon = 1.0;
  // method
  MethodParams method;
  // data
  long long dataset_size = 10000;
  double train_fraction = 0.8;
  int so_mode_count = 5;
  double so_scale = 0.3;
  double vmf_kappa = 1.0;
  // network
  int width = 64;
  int depth = 3;
  TimeInput time_input = TimeInput::Time;
  // training
  int epochs = 100;
  int batch = 512;
  OptimizerConfig optimizer;
  // sampler
  SamplerKind sampler = SamplerKind::ReverseSde;
  SampleConfig sample;
  long long sample_count = 2000;
  // metrics
  bool metric_mmd = true;
  double mmd_bandwidth = 0.0;  // 0 = median heuristic, recorded in the report
  bool metric_sliced_w1 = true;
  int sw_projections = 128;
  bool metric_w2 = false;
  long long w2_cap = 1024;
  // run
  std::uint64_t master_seed = 1;
  int num_seeds = 1;
  std::string out_dir = "runs";

  static ExperimentConfig from_flat(const FlatConfig& f) {
    ExperimentConfig c;
    c.manifold_kind = f.get_string("manifold.kind", c.manifold_kind);
    c.ambient_dim = static_cast<int>(f.get_int("manifold.ambient_dim", c.ambient_dim));
    c.so_order = static_cast<int>(f.get_int("manifold.order", c.so_order));
    c.mesh_source = f.get_string("manifold.mesh", c.mesh_source);
    if (f.has("manifold.eigen_indices")) {
      c.eigen_indices.clear();
      std::stringstream ss(f.get_string("manifold.eigen_indices"));
      std::string tok;
      while (std::getline(ss, tok, ','))
        c.eigen_indices.push_back(std::stoi(tok));
    }
    c.sigma_min = f.get_double("schedule.sigma_min", c.sigma_min);
    c.sigma_max = f.get_double("schedule.sigma_max", c.sigma_max);
    c.horizon = f.get_double("schedule.horizon", c.horizon);
    c.method.method = method_from_string(f.get_string("method.name", "iso"));
    c.method.rescale = f.get_bool("method.rescale", false);
    c.method.c_niso = f.get_double("method.c_niso", 0.0);
    c.method.c_tango = f.get_double("method.c_tango", 0.0);
    c.dataset_size = f.get_int("data.size", c.dataset_size);
    c.train_fraction = f.get_double("data.train_fraction", c.train_fraction);
    c.so_mode_count = static_cast<int>(f.get_int("data.mode_count", c.so_mode_count));
    c.so_scale = f.get_double("data.scale", c.so_scale);
    c.vmf_kappa = f.get_double("data.vmf_kappa", c.vmf_kappa);
    c.width = static_cast<int>(f.get_int("net.width", c.width));
    c.depth = static_cast<int>(f.get_int("net.depth", c.depth));
    c.time_input = f.get_string("net.time_input", "t") == "sigma"
                       ? TimeInput::Sigma
                       : TimeInput::Time;
    c.epochs = static_cast<int>(f.get_int("train.epochs", c.epochs));
    c.batch = static_cast<int>(f.get_int("train.batch", c.batch));
    c.optimizer.learning_rate = f.get_double("train.lr", c.optimizer.learning_rate);
    c.optimizer.clip_norm = f.get_double("train.clip", c.optimizer.clip_norm);
    c.optimizer.ema_decay = f.get_double("train.ema_decay", c.optimizer.ema_decay);
    c.sampler = sampler_from_string(f.get_string("sampler.kind", "reverse"));
    c.sample.steps = static_cast<int>(f.get_int("sampler.steps", c.sample.steps));
    c.sample.langevin_steps =
        static_cast<int>(f.get_int("sampler.langevin_steps", c.sample.langevin_steps));
    c.sample.langevin_step_size =
        f.get_double("sampler.langevin_step_size", c.sample.langevin_step_size);
    c.sample.sigma_switch = f.get_double("sampler.sigma_switch", 0.0);
    c.sample_count = f.get_int("sampler.count", c.sample_count);
    c.metric_mmd = f.get_bool("metrics.mmd", c.metric_mmd);
    c.mmd_bandwidth = f.get_double("metrics.mmd_bandwidth", c.mmd_bandwidth);
    c.metric_sliced_w1 = f.get_bool("metrics.sliced_w1", c.metric_sliced_w1);
    c.sw_projections = static_cast<int>(f.get_int("metrics.sw_projections", c.sw_projections));
    c.metric_w2 = f.get_bool("metrics.w2", c.metric_w2);
    c.w2_cap = f.get_int("metrics.w2_cap", c.w2_cap);
    c.master_seed = static_cast<std::uint64_t>(f.get_int("seed", 1));
    c.num_seeds = static_cast<int>(f.get_int("run.num_seeds", c.num_seeds));
    c.out_dir = f.get_string("run.out_dir", c.out_dir);
    return c;
  }

  FlatConfig to_flat() const {
    FlatConfig f;
    f.set("manifold.kind", manifold_kind);
    f.set("manifold.ambient_dim", ambient_dim);
    f.set("manifold.order", so_order);
    f.set("manifold.mesh", mesh_source);
    std::string idx;
    for (std::size_t i = 0; i < eigen_indices.size(); ++i)
      idx += (i ? "," : "") + std::to_string(eigen_indices[i]);
    f.set("manifold.eigen_indices", idx);
    f.set("schedule.sigma_min", sigma_min);
    f.set("schedule.sigma_max", sigma_max);
    f.set("schedule.horizon", horizon);
    f.set("method.name", to_string(method.method));
    f.set("method.rescale", method.rescale);
    f.set("method.c_niso", method.c_niso);
    f.set("method.c_tango", method.c_tango);
    f.set("data.size", dataset_size);
    f.set("data.train_fraction", train_fraction);
    f.set("data.mode_count", so_mode_count);
    f.set("data.scale", so_scale);
    f.set("data.vmf_kappa", vmf_kappa);
    f.set("net.width", width);
    f.set("net.depth", depth);
    f.set("net.time_input", time_input == TimeInput::Sigma ? "sigma" : "t");
    f.set("train.epochs", epochs);
    f.set("train.batch", batch);
    f.set("train.lr", optimizer.learning_rate);
    f.set("train.clip", optimizer.clip_norm);
    f.set("train.ema_decay", optimizer.ema_decay);
    f.set("sampler.kind", to_string(sampler));
    f.set("sampler.steps", sample.steps);
    f.set("sampler.langevin_steps", sample.langevin_steps);
    f.set("sampler.langevin_step_size", sample.langevin_step_size);
    f.set("sampler.sigma_switch", sample.sigma_switch);
    f.set("sampler.count", sample_count);
    f.set("metrics.mmd", metric_mmd);
    f.set("metrics.mmd_bandwidth", mmd_bandwidth);
    f.set("metrics.sliced_w1", metric_sliced_w1);
    f.set("metrics.sw_projections", sw_projections);
    f.set("metrics.w2", metric_w2);
    f.set("metrics.w2_cap", w2_cap);
    f.set("seed", static_cast<long long>(master_seed));
    f.set("run.num_seeds", num_seeds);
    f.set("run.out_dir", out_dir);
    return f;
  }

  std::string config_hash() const { return to_flat().hash_hex(); }

  NoiseSchedule schedule() const {
    return NoiseSchedule(sigma_min, sigma_max, horizon);
  }

  /// Stage-switch threshold for the annealing sampler: explicit value if
  /// set, else the method constant.
  double resolved_sigma_switch() const {
    if (sample.sigma_switch > 0.0) return sample.sigma_switch;
    double s = 0.05;
    if (method.method == Method::Niso) s = method.c_niso;
    if (method.method == Method::Tango) s = method.c_tango;
    return std::min(std::max(s, sigma_min), sigma_max);
  }

  void validate() const {
    method.validate();
    if (sampler == SamplerKind::ReverseSde &&
        (method.method == Method::Tango || method.method == Method::Rssm))
      throw UnsupportedMethodError(
          "the reverse SDE sampler is not applicable to " +
          to_string(method.method) +
          "; use the annealing sampler");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ConfigError("train fraction must lie in (0, 1)");
    if (dataset_size < 10) throw ConfigError("dataset too small");
    if (num_seeds < 1) throw ConfigError("need at least one seed");
  }
};

inline std::unique_ptr<Manifold> make_manifold(const ExperimentConfig& cfg) {
  if (cfg.manifold_kind == "hyperplane")
    return std::make_unique<HyperplaneManifold>(cfg.ambient_dim);
  if (cfg.manifold_kind == "sphere")
    return std::make_unique<SphereManifold>(cfg.ambient_dim);
  if (cfg.manifold_kind == "so")
    return std::make_unique<SpecialOrthogonalManifold>(cfg.so_order);
  if (cfg.manifold_kind == "mesh") {
    TriangleMeshData mesh = cfg.mesh_source == "icosahedron"
                                ? make_icosahedron()
                                : load_obj(cfg.mesh_source);
    return std::make_unique<TriangleMeshManifold>(std::move(mesh));
  }
  throw ConfigError("unknown manifold kind: " + cfg.manifold_kind);
}

// --- Run directory conventions ---------------------------------------------
//
// runs/<config-hash>/config.toml          canonical config echo
// runs/<config-hash>/seed<k>/dataset.csv  + dataset.meta.json
//                            checkpoint.bin
//                            samples.csv  + samples.meta.json
//                            report.json  (one JSON object per line, appended)
// runs/<config-hash>/summary.json         (appended per run_experiment call)
//
// Artifacts are content-addressed by (config hash, seed): reruns reuse
// existing files and only append to the reports.

inline std::string run_directory(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/" + cfg.config_hash();
}

inline std::string seed_directory(const ExperimentConfig& cfg, int seed_index) {
  return run_directory(cfg) + "/seed" + std::to_string(seed_index);
}

namespace detail {

inline void write_config_echo(const ExperimentConfig& cfg) {
  ensure_directory(run_directory(cfg));
  const std::string path = run_directory(cfg) + "/config.toml";
  if (file_exists(path)) return;
  std::ofstream out(path);
  out << cfg.to_flat().serialize();
}

inline Eigen::Index train_rows(const ExperimentConfig& cfg) {
  return static_cast<Eigen::Index>(
      std::floor(cfg.train_fraction * static_cast<double>(cfg.dataset_size)));
}

}  // namespace detail

/// Generate (or reload) the dataset for one seed. Deterministic per
/// (master seed, seed index); SO(k) centers are shared across seeds.
inline Eigen::MatrixXd stage_generate(const ExperimentConfig& cfg,
                                      int seed_index) {
  const std::string dir = seed_directory(cfg, seed_index);
  const std::string path = dir + "/dataset.csv";
  if (file_exists(path)) return read_csv(path);
  detail::write_config_echo(cfg);
  ensure_directory(dir);
  Rng rng = Rng::derive(cfg.master_seed, "data",
                        static_cast<std::uint64_t>(seed_index));
  Eigen::MatrixXd data;
  nlohmann::json meta;
  if (cfg.manifold_kind == "hyperplane") {
    data = sample_gmm_plane(cfg.dataset_size, rng);
    meta["generator"] = "gmm_plane";
    meta["mode_std"] = 0.3;
  } else if (cfg.manifold_kind == "sphere") {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.ambient_dim);
    mu[0] = 1.0;
    data = sample_vmf_sphere(mu, cfg.vmf_kappa, cfg.dataset_size, rng);
    meta["generator"] = "vmf_sphere";
    meta["kappa"] = cfg.vmf_kappa;
  } else if (cfg.manifold_kind == "so") {
    Rng center_rng = Rng::derive(cfg.master_seed, "centers", 0);
    const auto centers =
        random_son_centers(cfg.so_order, cfg.so_mode_count, center_rng);
    data = sample_wrapped_normal_son(cfg.so_order, centers, cfg.so_scale,
                                     cfg.dataset_size, rng);
    meta["generator"] = "wrapped_normal_son";
    meta["order"] = cfg.so_order;
    meta["modes"] = cfg.so_mode_count;
    meta["scale"] = cfg.so_scale;
    meta["center_stream"] = "fnv1a64(master, \"centers\", 0)";
  } else if (cfg.manifold_kind == "mesh") {
    const auto manifold = make_manifold(cfg);
    const auto& mesh =
        static_cast<const TriangleMeshManifold*>(manifold.get())->mesh();
    const MeshDensity density = mesh_eigen_density(mesh, cfg.eigen_indices);
    data = sample_mesh_density(mesh, density, cfg.dataset_size, rng);
    meta["generator"] = "mesh_eigen_density";
    meta["eigen_indices"] = cfg.eigen_indices;
    meta["clamping"] = "max(phi, 0), sign fixed to the heavier positive part";
  } else {
    throw ConfigError("unknown manifold kind: " + cfg.manifold_kind);
  }
  write_csv(path, data);
  meta["seed_index"] = seed_index;
  meta["master_seed"] = cfg.master_seed;
  meta["config_hash"] = cfg.config_hash();
  meta["rows"] = data.rows();
  meta["stream_rule"] = "fnv1a64(master, stage, index)";
  std::ofstream mout(dir + "/dataset.meta.json");
  mout << meta.dump(2) << "\n";
  return data;
}

/// Train (or reload) the score model for one seed.
inline ScoreModel stage_train(const ExperimentConfig& cfg, int seed_index,
                              std::vector<double>* loss_trace = nullptr) {
  const std::string dir = seed_directory(cfg, seed_index);
  const std::string path = dir + "/checkpoint.bin";
  if (file_exists(path) && !loss_trace) return load_checkpoint(path);
  const Eigen::MatrixXd data = stage_generate(cfg, seed_index);
  const Eigen::MatrixXd train =
      data.topRows(detail::train_rows(cfg)).transpose();  // n x rows
  const auto manifold = make_manifold(cfg);
  const NoiseSchedule schedule = cfg.schedule();
  Rng init_rng = Rng::derive(cfg.master_seed, "init",
                             static_cast<std::uint64_t>(seed_index));
  ScoreModel model = make_score_model(
      manifold->ambient_dim(), cfg.width, cfg.depth, cfg.method.rescale_method(),
      cfg.method.rescale_const(), init_rng, cfg.time_input);
  AdamState state = AdamState::init(model);
  Rng train_rng = Rng::derive(cfg.master_seed, "train",
                              static_cast<std::uint64_t>(seed_index));
  const Eigen::Index rows = train.cols();
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch, rows);
  const Eigen::Index batches_per_epoch = std::max<Eigen::Index>(1, rows / batch);
  std::vector<Eigen::Index> order(rows);
  for (Eigen::Index i = 0; i < rows; ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = rows - 1; i > 0; --i)
      std::swap(order[i], order[train_rng.uniform_int(i + 1)]);
    for (Eigen::Index b = 0; b < batches_per_epoch; ++b) {
      Eigen::MatrixXd clean(train.rows(), batch);
      for (Eigen::Index j = 0; j < batch; ++j)
        clean.col(j) = train.col(order[b * batch + j]);
      const LossBatch lb =
          assemble_batch(cfg.method, *manifold, schedule, clean, train_rng);
      const double loss =
          train_step(model, state, lb, *manifold, schedule, cfg.method,
                     cfg.optimizer);
      if (loss_trace) loss_trace->push_back(loss);
    }
  }
  if (!file_exists(path)) save_checkpoint(model, path);
  return model;
}

/// Sample (or reload) generated points for one seed.
inline Eigen::MatrixXd stage_sample(const ExperimentConfig& cfg,
                                    int seed_index) {
  const std::string dir = seed_directory(cfg, seed_index);
  const std::string path = dir + "/samples.csv";
  if (file_exists(path)) return read_csv(path);
  const ScoreModel model = stage_train(cfg, seed_index);
  const auto manifold = make_manifold(cfg);
  const NoiseSchedule schedule = cfg.schedule();
  SampleConfig sc = cfg.sample;
  sc.chains = static_cast<int>(cfg.sample_count);
  sc.seed = fnv1a64("sample", fnv1a64(&cfg.master_seed, 8)) ^
            static_cast<std::uint64_t>(seed_index);
  sc.sigma_switch = cfg.resolved_sigma_switch();
  const BatchedScore score = ema_score_field(model, schedule);
  Eigen::MatrixXd samples;
  if (cfg.sampler == SamplerKind::ReverseSde) {
    samples = reverse_sde_sample(score, cfg.method.method, manifold.get(),
                                 manifold->ambient_dim(), schedule, sc);
  } else {
    samples = annealing_sde_sample(score, *manifold, schedule, sc);
  }
  write_csv(path, samples);
  nlohmann::json meta;
  meta["config_hash"] = cfg.config_hash();
  meta["seed_index"] = seed_index;
  meta["method"] = to_string(cfg.method.method);
  meta["rescale"] = cfg.method.rescale;
  meta["sampler"] = to_string(cfg.sampler);
  meta["sigma_switch"] = sc.sigma_switch;
  meta["chains"] = sc.chains;
  meta["steps"] = sc.steps;
  std::ofstream mout(dir + "/samples.meta.json");
  mout << meta.dump(2) << "\n";
  return samples;
}

struct SeedOutcome {
  int seed_index = 0;
  std::map<std::string, double> metrics;
  nlohmann::json metric_params;
  double wall_seconds = 0.0;
  std::string directory;
};

/// Metrics of generated samples against the held-out split.
inline SeedOutcome stage_evaluate(const ExperimentConfig& cfg, int seed_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd data = stage_generate(cfg, seed_index);
  const Eigen::MatrixXd samples = stage_sample(cfg, seed_index);
  const Eigen::Index split = detail::train_rows(cfg);
  const Eigen::MatrixXd held_out = data.bottomRows(data.rows() - split);
  Rng metric_rng = Rng::derive(cfg.master_seed, "metric",
                               static_cast<std::uint64_t>(seed_index));
  SeedOutcome out;
  out.seed_index = seed_index;
  out.directory = seed_directory(cfg, seed_index);
  if (cfg.metric_mmd) {
    const double bw = cfg.mmd_bandwidth > 0.0
                          ? cfg.mmd_bandwidth
                          : median_heuristic_bandwidth(held_out, samples);
    out.metrics["mmd"] = mmd(held_out, samples, bw);
    out.metric_params["mmd"] = {{"kernel", "gaussian"}, {"bandwidth", bw}};
  }
  if (cfg.metric_sliced_w1) {
    out.metrics["sliced_w1"] =
        sliced_w1(held_out, samples, cfg.sw_projections, metric_rng);
    out.metric_params["sliced_w1"] = {
        {"projections", cfg.sw_projections},
        {"direction_stream", "fnv1a64(master, \"metric\", seed)"}};
  }
  if (cfg.metric_w2) {
    const Eigen::Index k =
        std::min<Eigen::Index>({cfg.w2_cap, held_out.rows(), samples.rows()});
    out.metrics["w2"] = w2(held_out.topRows(k), samples.topRows(k));
    out.metric_params["w2"] = {{"points", k}, {"solver", "exact assignment"}};
  }
  if (cfg.manifold_kind == "mesh") {
    const auto manifold = make_manifold(cfg);
    const auto& mesh =
        static_cast<const TriangleMeshManifold*>(manifold.get())->mesh();
    out.metrics["js_faces"] = js_face_histogram(mesh, held_out, samples);
    out.metric_params["js_faces"] = {{"log", "natural"},
                                     {"max", std::log(2.0)}};
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  nlohmann::json line;
  line["config_hash"] = cfg.config_hash();
  line["seed_index"] = seed_index;
  line["method"] = to_string(cfg.method.method);
  line["rescale"] = cfg.method.rescale;
  line["sampler"] = to_string(cfg.sampler);
  line["metrics"] = out.metrics;
  line["metric_params"] = out.metric_params;
  line["wall_seconds"] = out.wall_seconds;
  append_line(out.directory + "/report.json", line.dump());
  return out;
}

struct RunReport {
  std::string config_hash;
  std::vector<SeedOutcome> seeds;
  std::map<std::string, double> metric_mean;
  std::map<std::string, double> metric_std;
  double wall_seconds = 0.0;
};

/// End-to-end: data -> train -> sample -> metrics for every seed, then
/// mean/std aggregation. Any stage failure is rethrown with its stage tag;
/// artifacts written so far stay on disk.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config_hash = cfg.config_hash();
  auto guarded = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(std::string("stage ") + stage + ": " + e.what());
    }
  };
  for (int seed = 0; seed < cfg.num_seeds; ++seed) {
    guarded("generate-data", [&] { return stage_generate(cfg, seed); });
    guarded("train", [&] { return stage_train(cfg, seed); });
    guarded("sample", [&] { return stage_sample(cfg, seed); });
    report.seeds.push_back(
        guarded("evaluate", [&] { return stage_evaluate(cfg, seed); }));
  }
  for (const auto& [name, value] : report.seeds.front().metrics) {
    double mean = 0.0;
    for (const auto& s : report.seeds) mean += s.metrics.at(name);
    mean /= report.seeds.size();
    double var = 0.0;
    for (const auto& s : report.seeds) {
      const double d = s.metrics.at(name) - mean;
      var += d * d;
    }
    var = report.seeds.size() > 1 ? var / (report.seeds.size() - 1) : 0.0;
    report.metric_mean[name] = mean;
    report.metric_std[name] = std::sqrt(var);
    (void)value;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  nlohmann::json line;
  line["config_hash"] = report.config_hash;
  line["num_seeds"] = cfg.num_seeds;
  line["metric_mean"] = report.metric_mean;
  line["metric_std"] = report.metric_std;
  line["wall_seconds"] = report.wall_seconds;
  append_line(run_directory(cfg) + "/summary.json", line.dump());
  return report;
}

/// Theorem verification driven by config keys (verify.* namespace).
inline TheoremReport verify_theorems(const FlatConfig& f,
                                     const std::string& csv_path = "") {
  VerificationSettings s;
  s.kappa = f.get_double("verify.kappa", s.kappa);
  s.theta0 = f.get_double("verify.theta0", s.theta0);
  s.offset_iso = f.get_double("verify.offset_iso", s.offset_iso);
  s.offset_niso = f.get_double("verify.offset_niso", s.offset_niso);
  s.c_niso = f.get_double("verify.c_niso", s.c_niso);
  s.circle_nodes = static_cast<int>(f.get_int("verify.circle_nodes", s.circle_nodes));
  s.tangential_grid =
      static_cast<int>(f.get_int("verify.tangential_grid", s.tangential_grid));
  const TheoremReport report = run_theorem_verification(s);
  if (!csv_path.empty()) write_verification_csv(report, csv_path);
  return report;
}

/// Built-in presets mirroring the experiment hyperparameter table, plus
/// reduced "desk" variants sized for CI.
inline FlatConfig preset_config(const std::string& name) {
  FlatConfig f;
  auto common = [&](double smin, double cn, double ct, int steps, int n0,
                    double ald, int width, int depth, int epochs, int batch,
                    double lr, double clip, long long dsize) {
    f.set("schedule.sigma_min", smin);
    f.set("schedule.sigma_max", 3.0);
    f.set("schedule.horizon", 1.0);
    f.set("method.c_niso", cn);
    f.set("method.c_tango", ct);
    f.set("sampler.steps", steps);
    f.set("sampler.langevin_steps", n0);
    f.set("sampler.langevin_step_size", ald);
    f.set("net.width", width);
    f.set("net.depth", depth);
    f.set("train.epochs", epochs);
    f.set("train.batch", batch);
    f.set("train.lr", lr);
    f.set("train.clip", clip);
    f.set("data.size", dsize);
  };
  if (name == "hyperplane") {
    f.set("manifold.kind", "hyperplane");
    common(0.001, 0.2, 0.2, 500, 10, 0.01, 64, 3, 200, 512, 0.0005, 10.0,
           50000LL);
  } else if (name == "hyperplane-desk") {
    f.set("manifold.kind", "hyperplane");
    common(0.001, 0.2, 0.2, 500, 10, 0.01, 64, 3, 100, 512, 0.0005, 10.0,
           10000LL);
  } else if (name == "bunny" || name == "spot") {
    f.set("manifold.kind", "mesh");
    f.set("manifold.mesh", name + ".obj");
    f.set("manifold.eigen_indices", "0,500,1000");
    common(0.001, 0.002, 0.002, 200, name == "bunny" ? 20 : 10, 0.05, 256, 3,
           20000, 4096, 0.0005, 10.0, 60000LL);
  } else if (name == "mesh-desk") {
    f.set("manifold.kind", "mesh");
    f.set("manifold.mesh", "icosahedron");
    f.set("manifold.eigen_indices", "0,5,9");
    common(0.001, 0.05, 0.05, 200, 20, 0.01, 128, 3, 400, 512, 0.0005, 10.0,
           20000LL);
  } else if (name == "so10") {
    f.set("manifold.kind", "so");
    f.set("manifold.order", 10);
    f.set("data.mode_count", 5);
    common(0.0005, 0.01, 0.05, 500, 10, 0.05, 512, 3, 5000, 512, 0.001, 1.0,
           50000LL);
  } else if (name == "so3-desk") {
    f.set("manifold.kind", "so");
    f.set("manifold.order", 3);
    f.set("data.mode_count", 3);
    common(0.0005, 0.01, 0.05, 500, 10, 0.05, 128, 3, 200, 512, 0.001, 1.0,
           10000LL);
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return f;
}

}  // namespace mandiff
