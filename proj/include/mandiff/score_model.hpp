#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/noise_schedule.hpp"
#include "mandiff/rng.hpp"

namespace mandiff {

enum class RescaleMethod { None, Iso, Niso, Tango };
enum class TimeInput { Time, Sigma };

/// Scale w_t of the optimal score along the schedule, per training method:
/// Iso sigma_t, Niso sqrt(sigma_t^2 + c^2), Tango max(sigma_t, c).
inline double rescale_factor(RescaleMethod method, double t,
                             const NoiseSchedule& schedule, double c) {
  switch (method) {
    case RescaleMethod::None:
      return 1.0;
    case RescaleMethod::Iso:
      return schedule.sigma(t);
    case RescaleMethod::Niso: {
      const double s = schedule.sigma(t);
      return std::sqrt(s * s + c * c);
    }
    case RescaleMethod::Tango:
      return std::max(schedule.sigma(t), c);
  }
  throw ConfigError("unknown rescale method");
}

/// Flat parameter container for the MLP (and for gradients, Adam moments
/// and EMA shadows, which share its shape).
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is (out x in)
  std::vector<Eigen::VectorXd> biases;

  static MlpParams zeros_like(const MlpParams& other) {
    MlpParams p;
    p.weights.reserve(other.weights.size());
    p.biases.reserve(other.biases.size());
    for (const auto& w : other.weights)
      p.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : other.biases)
      p.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return p;
  }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : biases) s += b.squaredNorm();
    return s;
  }

  void scale(double a) {
    for (auto& w : weights) w *= a;
    for (auto& b : biases) b *= a;
  }

  void axpy(double a, const MlpParams& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      weights[l] += a * other.weights[l];
      biases[l] += a * other.biases[l];
    }
  }
};

/// MLP score network over (x, time feature) with SiLU activations.
/// Output dimension equals the ambient dimension; the published score is
/// the raw network output divided by w_t when rescaling is enabled.
struct ScoreModel {
  int ambient_dim = 0;
  int width = 0;
  int depth = 0;  // number of hidden layers
  TimeInput time_input = TimeInput::Time;
  RescaleMethod rescale = RescaleMethod::None;
  double rescale_const = 0.0;  // c_niso or c_tango when applicable
  MlpParams params;
  MlpParams ema;
};

/// PyTorch-style uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline ScoreModel make_score_model(int ambient_dim, int width, int depth,
                                   RescaleMethod rescale, double rescale_const,
                                   Rng& rng,
                                   TimeInput time_input = TimeInput::Time) {
  if (ambient_dim < 1 || width < 1 || depth < 1)
    throw ConfigError("invalid network shape");
  ScoreModel model;
  model.ambient_dim = ambient_dim;
  model.width = width;
  model.depth = depth;
  model.time_input = time_input;
  model.rescale = rescale;
  model.rescale_const = rescale_const;
  std::vector<int> sizes;
  sizes.push_back(ambient_dim + 1);
  for (int l = 0; l < depth; ++l) sizes.push_back(width);
  sizes.push_back(ambient_dim);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    for (int j = 0; j < in; ++j)
      for (int i = 0; i < out; ++i)
        w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    Eigen::VectorXd b(out);
    for (int i = 0; i < out; ++i) b[i] = bound * (2.0 * rng.uniform() - 1.0);
    model.params.weights.push_back(std::move(w));
    model.params.biases.push_back(std::move(b));
  }
  model.ema = model.params;
  return model;
}

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_grad(double z) {
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

/// Activations saved by the forward pass for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> layer_inputs;  // input to each linear layer
  std::vector<Eigen::MatrixXd> pre_acts;      // pre-activations, hidden only
};

/// Raw network forward pass on a column batch (rows = n+1 features).
inline Eigen::MatrixXd mlp_forward(const MlpParams& params,
                                   const Eigen::MatrixXd& input,
                                   ForwardCache* cache = nullptr) {
  const std::size_t layers = params.weights.size();
  Eigen::MatrixXd a = input;
  if (cache) {
    cache->layer_inputs.clear();
    cache->pre_acts.clear();
  }
  for (std::size_t l = 0; l < layers; ++l) {
    if (cache) cache->layer_inputs.push_back(a);
    Eigen::MatrixXd z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    if (l + 1 < layers) {
      if (cache) cache->pre_acts.push_back(z);
      a = z.unaryExpr([](double v) { return silu(v); });
    } else {
      a = std::move(z);
    }
  }
  return a;
}

/// Reverse-mode pass. Accumulates parameter gradients into `grad` and
/// optionally returns the gradient w.r.t. the input features.
inline void mlp_backward(const MlpParams& params, const ForwardCache& cache,
                         const Eigen::MatrixXd& output_grad, MlpParams& grad,
                         Eigen::MatrixXd* input_grad = nullptr) {
  const std::size_t layers = params.weights.size();
  Eigen::MatrixXd dz = output_grad;
  for (std::size_t li = layers; li-- > 0;) {
    grad.weights[li] += dz * cache.layer_inputs[li].transpose();
    grad.biases[li] += dz.rowwise().sum();
    if (li == 0) {
      if (input_grad) *input_grad = params.weights[0].transpose() * dz;
      break;
    }
    Eigen::MatrixXd da = params.weights[li].transpose() * dz;
    dz = da.cwiseProduct(cache.pre_acts[li - 1].unaryExpr(
        [](double v) { return silu_grad(v); }));
  }
}

/// Stack (x, time feature) into the network input layout.
inline Eigen::MatrixXd model_input(const ScoreModel& model,
                                   const NoiseSchedule& schedule,
                                   const Eigen::MatrixXd& xs,
                                   const Eigen::VectorXd& ts) {
  if (xs.rows() != model.ambient_dim)
    throw DimensionError("model_input: wrong ambient dimension");
  if (ts.size() != xs.cols())
    throw DimensionError("model_input: times/batch mismatch");
  Eigen::MatrixXd input(model.ambient_dim + 1, xs.cols());
  input.topRows(model.ambient_dim) = xs;
  for (Eigen::Index j = 0; j < ts.size(); ++j)
    input(model.ambient_dim, j) = model.time_input == TimeInput::Time
                                      ? ts[j]
                                      : schedule.sigma(ts[j]);
  return input;
}

/// Published (rescaled) score for a column batch at a shared time t.
inline Eigen::MatrixXd score_batch(const ScoreModel& model,
                                   const MlpParams& params,
                                   const NoiseSchedule& schedule,
                                   const Eigen::MatrixXd& xs, double t) {
  const Eigen::VectorXd ts = Eigen::VectorXd::Constant(xs.cols(), t);
  Eigen::MatrixXd out = mlp_forward(params, model_input(model, schedule, xs, ts));
  const double w = rescale_factor(model.rescale, t, schedule,
                                  model.rescale_const);
  if (w != 1.0) out /= w;
  return out;
}

/// Single-point score using the live weights.
inline Eigen::VectorXd score_eval(const ScoreModel& model,
                                  const Eigen::VectorXd& x, double t,
                                  const NoiseSchedule& schedule) {
  check_vector_dim(x, model.ambient_dim, "score_eval");
  const Eigen::VectorXd out =
      score_batch(model, model.params, schedule, x, t).col(0);
  if (!out.allFinite())
    throw NumericError("non-finite score network output");
  return out;
}

using BatchedScore =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd& xs, double t)>;

/// Pointwise score field, e.g. an injected analytic score.
using ScoreField =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

/// Lift a pointwise field to the batched interface.
inline BatchedScore batched(const ScoreField& field) {
  return [field](const Eigen::MatrixXd& xs, double t) {
    Eigen::MatrixXd out(xs.rows(), xs.cols());
    for (Eigen::Index c = 0; c < xs.cols(); ++c)
      out.col(c) = field(xs.col(c), t);
    return out;
  };
}

/// Inference-time score field backed by the EMA weights.
inline BatchedScore ema_score_field(const ScoreModel& model,
                                    const NoiseSchedule& schedule) {
  return [&model, &schedule](const Eigen::MatrixXd& xs, double t) {
    return score_batch(model, model.ema, schedule, xs, t);
  };
}

/// Gradient of (1/B) sum_i lambda_i ||s(x_i, t_i) - target_i||^2 w.r.t. all
/// parameters. Returns the loss value; per-sample times are allowed.
inline double score_grad(const ScoreModel& model, const NoiseSchedule& schedule,
                         const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts,
                         const Eigen::MatrixXd& targets,
                         const Eigen::VectorXd& lambdas, MlpParams* grad) {
  const Eigen::Index batch = xs.cols();
  if (batch == 0) throw DimensionError("score_grad: empty batch");
  if (targets.cols() != batch || lambdas.size() != batch)
    throw DimensionError("score_grad: batch size mismatch");
  ForwardCache cache;
  const Eigen::MatrixXd input = model_input(model, schedule, xs, ts);
  Eigen::MatrixXd raw = mlp_forward(model.params, input, grad ? &cache : nullptr);
  Eigen::VectorXd w(batch);
  for (Eigen::Index j = 0; j < batch; ++j)
    w[j] = rescale_factor(model.rescale, ts[j], schedule, model.rescale_const);
  double loss = 0.0;
  Eigen::MatrixXd seed;
  if (grad) seed.resize(raw.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    const Eigen::VectorXd resid = raw.col(j) / w[j] - targets.col(j);
    loss += lambdas[j] * resid.squaredNorm();
    if (grad) seed.col(j) = (2.0 * lambdas[j] / (batch * w[j])) * resid;
  }
  loss /= static_cast<double>(batch);
  if (grad) mlp_backward(model.params, cache, seed, *grad);
  return loss;
}

// --- Optimizer ------------------------------------------------------------

struct AdamState {
  MlpParams m;
  MlpParams v;
  long step = 0;

  static AdamState init(const ScoreModel& model) {
    AdamState s;
    s.m = MlpParams::zeros_like(model.params);
    s.v = MlpParams::zeros_like(model.params);
    return s;
  }
};

struct OptimizerConfig {
  double learning_rate = 5e-4;
  double clip_norm = 10.0;  // global 2-norm threshold
  double ema_decay = 0.999;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam step with gradient-norm clipping followed by the EMA update.
inline void apply_gradient_update(ScoreModel& model, AdamState& state,
                                  MlpParams& grad, const OptimizerConfig& cfg) {
  const double gnorm = std::sqrt(grad.squared_norm());
  if (cfg.clip_norm > 0.0 && gnorm > cfg.clip_norm)
    grad.scale(cfg.clip_norm / gnorm);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
  const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    auto update = [&](Eigen::MatrixXd& p, Eigen::MatrixXd& m,
                      Eigen::MatrixXd& v, const Eigen::MatrixXd& g) {
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      p -= cfg.learning_rate *
           ((m / bc1).array() / ((v / bc2).array().sqrt() + cfg.epsilon))
               .matrix();
    };
    update(model.params.weights[l], state.m.weights[l], state.v.weights[l],
           grad.weights[l]);
    Eigen::VectorXd& b = model.params.biases[l];
    Eigen::VectorXd& mb = state.m.biases[l];
    Eigen::VectorXd& vb = state.v.biases[l];
    const Eigen::VectorXd& gb = grad.biases[l];
    mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * gb;
    vb = cfg.beta2 * vb + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
    b -= cfg.learning_rate *
         ((mb / bc1).array() / ((vb / bc2).array().sqrt() + cfg.epsilon))
             .matrix();
  }
  for (std::size_t l = 0; l < model.params.weights.size(); ++l) {
    model.ema.weights[l] = cfg.ema_decay * model.ema.weights[l] +
                           (1.0 - cfg.ema_decay) * model.params.weights[l];
    model.ema.biases[l] = cfg.ema_decay * model.ema.biases[l] +
                          (1.0 - cfg.ema_decay) * model.params.biases[l];
  }
}

// --- Checkpoint IO ---------------------------------------------------------
//
// Layout (little-endian, native doubles):
//   magic "MDSC" | u32 version (1) | i32 ambient_dim | i32 width | i32 depth
//   | u8 time_input | u8 rescale | f64 rescale_const
//   | per layer: i32 rows, i32 cols, rows*cols f64 (row-major), cols... bias
//   | the same block again for the EMA shadow.

namespace detail {

inline void write_params(std::ofstream& out, const MlpParams& p) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Eigen::MatrixXd& w = p.weights[l];
    const std::int32_t rows = static_cast<std::int32_t>(w.rows());
    const std::int32_t cols = static_cast<std::int32_t>(w.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const double v = w(i, j);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
      const double v = p.biases[l][i];
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  }
}

inline void read_params(std::ifstream& in, std::size_t layers, MlpParams& p) {
  p.weights.clear();
  p.biases.clear();
  for (std::size_t l = 0; l < layers; ++l) {
    std::int32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || rows <= 0 || cols <= 0)
      throw Error("corrupt checkpoint: bad layer header");
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        w(i, j) = v;
      }
    Eigen::VectorXd b(rows);
    for (int i = 0; i < rows; ++i) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      b[i] = v;
    }
    if (!in) throw Error("corrupt checkpoint: truncated layer data");
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
}

}  // namespace detail

inline void save_checkpoint(const ScoreModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out.write("MDSC", 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::int32_t dims[3] = {model.ambient_dim, model.width, model.depth};
  out.write(reinterpret_cast<const char*>(dims), 12);
  const std::uint8_t ti = static_cast<std::uint8_t>(model.time_input);
  const std::uint8_t rs = static_cast<std::uint8_t>(model.rescale);
  out.write(reinterpret_cast<const char*>(&ti), 1);
  out.write(reinterpret_cast<const char*>(&rs), 1);
  out.write(reinterpret_cast<const char*>(&model.rescale_const), 8);
  detail::write_params(out, model.params);
  detail::write_params(out, model.ema);
}

inline ScoreModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "MDSC")
    throw Error("not a checkpoint file: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  if (version != 1) throw Error("unsupported checkpoint version");
  ScoreModel model;
  std::int32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), 12);
  model.ambient_dim = dims[0];
  model.width = dims[1];
  model.depth = dims[2];
  std::uint8_t ti = 0, rs = 0;
  in.read(reinterpret_cast<char*>(&ti), 1);
  in.read(reinterpret_cast<char*>(&rs), 1);
  model.time_input = static_cast<TimeInput>(ti);
  model.rescale = static_cast<RescaleMethod>(rs);
  in.read(reinterpret_cast<char*>(&model.rescale_const), 8);
  const std::size_t layers = static_cast<std::size_t>(model.depth) + 1;
  detail::read_params(in, layers, model.params);
  detail::read_params(in, layers, model.ema);
  return model;
}

}  // namespace mandiff
