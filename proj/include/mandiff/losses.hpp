#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/manifold.hpp"
#include "mandiff/method.hpp"
#include "mandiff/noise_schedule.hpp"
#include "mandiff/perturbation.hpp"
#include "mandiff/rng.hpp"
#include "mandiff/score_model.hpp"

namespace mandiff {

/// Time reweighting: sigma_t^2 without rescaling, sigma_t * w_t with it.
inline double lambda_weight(Method method, bool rescale, double t,
                            const NoiseSchedule& schedule, double c) {
  const double sigma = schedule.sigma(t);
  if (!rescale) return sigma * sigma;
  MethodParams params;
  params.method = method;
  params.rescale = true;
  if (method == Method::Niso) params.c_niso = c;
  if (method == Method::Tango) params.c_tango = c;
  return sigma *
         rescale_factor(params.rescale_method(), t, schedule, c);
}

/// One training batch: clean points, their perturbed versions, times and
/// per-sample weights. `probes` carries the Hutchinson draws for RSSM.
struct LossBatch {
  Method method = Method::Iso;
  Eigen::MatrixXd clean;    // n x B
  Eigen::MatrixXd noisy;    // n x B
  Eigen::VectorXd times;    // B
  Eigen::VectorXd lambdas;  // B, all > 0
  Eigen::MatrixXd probes;   // n x B for RSSM, otherwise empty

  Eigen::Index size() const { return clean.cols(); }
};

/// Draw times uniformly on (0, T] and perturb `clean` with the kernel
/// matching the method.
inline LossBatch assemble_batch(const MethodParams& mp, const Manifold& m,
                                const NoiseSchedule& schedule,
                                const Eigen::MatrixXd& clean, Rng& rng) {
  mp.validate();
  const Eigen::Index n = clean.rows();
  const Eigen::Index batch = clean.cols();
  if (n != m.ambient_dim())
    throw DimensionError("assemble_batch: ambient dimension mismatch");
  LossBatch out;
  out.method = mp.method;
  out.clean = clean;
  out.times.resize(batch);
  out.lambdas.resize(batch);
  out.noisy.resize(n, batch);
  const double cc =
      mp.method == Method::Niso ? mp.c_niso : mp.c_tango;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const double t = schedule.horizon() * rng.uniform();
    out.times[j] = t;
    out.lambdas[j] =
        lambda_weight(mp.method, mp.rescale, t, schedule, cc);
    const double sigma = schedule.sigma(t);
    switch (mp.method) {
      case Method::Iso:
      case Method::Tango:
        out.noisy.col(j) = clean.col(j) + sigma * rng.normal_vector(n);
        break;
      case Method::Niso: {
        const Eigen::MatrixXd frame = m.normal_frame(clean.col(j));
        out.noisy.col(j) = clean.col(j) + sigma * rng.normal_vector(n) +
                           mp.c_niso * (frame * rng.normal_vector(frame.cols()));
        break;
      }
      case Method::Rssm:
        out.noisy.col(j) = m.project(clean.col(j) + sigma * rng.normal_vector(n));
        break;
    }
  }
  if (mp.method == Method::Rssm) out.probes = rng.normal_matrix(n, batch);
  return out;
}

/// Denoising score matching: mean lambda_t ||s(x~,t) + (x~-x)/sigma^2||^2.
inline double dsm_loss(const ScoreModel& model, const NoiseSchedule& schedule,
                       const LossBatch& batch, MlpParams* grad = nullptr) {
  const Eigen::Index b = batch.size();
  Eigen::MatrixXd targets(batch.clean.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double s2 = std::pow(schedule.sigma(batch.times[j]), 2);
    targets.col(j) = -(batch.noisy.col(j) - batch.clean.col(j)) / s2;
  }
  return score_grad(model, schedule, batch.noisy, batch.times, targets,
                    batch.lambdas, grad);
}

/// Non-isotropic DSM: target -Sigma^{-1}(x~-x) with Sigma at the clean point.
/// Reduces to dsm_loss exactly when c_niso = 0.
inline double niso_loss(const ScoreModel& model, const NoiseSchedule& schedule,
                        const LossBatch& batch, const Manifold& m,
                        double c_niso, MlpParams* grad = nullptr) {
  const Eigen::Index b = batch.size();
  Eigen::MatrixXd targets(batch.clean.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double sigma = schedule.sigma(batch.times[j]);
    targets.col(j) = niso_score_target(m, batch.clean.col(j),
                                       batch.noisy.col(j), sigma, c_niso);
  }
  return score_grad(model, schedule, batch.noisy, batch.times, targets,
                    batch.lambdas, grad);
}

/// Per-sample Tango/DSM switch: DSM term when sigma_t >= c_tango, otherwise
/// the projected loss ||P(x~) s - P(x~) grad log p(x~|x)||^2.
inline double tango_mixed_loss(const ScoreModel& model,
                               const NoiseSchedule& schedule,
                               const LossBatch& batch, const Manifold& m,
                               double c_tango, MlpParams* grad = nullptr) {
  const Eigen::Index b = batch.size();
  if (b == 0) throw DimensionError("tango_mixed_loss: empty batch");
  ForwardCache cache;
  const Eigen::MatrixXd input =
      model_input(model, schedule, batch.noisy, batch.times);
  const Eigen::MatrixXd raw =
      mlp_forward(model.params, input, grad ? &cache : nullptr);
  Eigen::MatrixXd seed;
  if (grad) seed.resize(raw.rows(), b);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double t = batch.times[j];
    const double sigma = schedule.sigma(t);
    const double w =
        rescale_factor(model.rescale, t, schedule, model.rescale_const);
    const Eigen::VectorXd target =
        -(batch.noisy.col(j) - batch.clean.col(j)) / (sigma * sigma);
    Eigen::VectorXd resid = raw.col(j) / w - target;
    if (sigma < c_tango) {
      const Eigen::MatrixXd frame = m.normal_frame(batch.noisy.col(j));
      resid -= frame * (frame.transpose() * resid);
    }
    loss += batch.lambdas[j] * resid.squaredNorm();
    if (grad) seed.col(j) = (2.0 * batch.lambdas[j] / (b * w)) * resid;
  }
  loss /= static_cast<double>(b);
  if (grad) mlp_backward(model.params, cache, seed, *grad);
  return loss;
}

/// Riemannian sliced score matching baseline:
///   mean lambda_t ( ||s||^2 + 2 z^T P^T (grad_x s) P z )
/// with one Hutchinson probe per sample and the Jacobian-vector product by
/// central finite differences, h = 1e-4 (1 + ||x||).
inline double rssm_loss(const ScoreModel& model, const NoiseSchedule& schedule,
                        const LossBatch& batch, const Manifold& m,
                        MlpParams* grad = nullptr) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.clean.rows();
  if (b == 0) throw DimensionError("rssm_loss: empty batch");
  if (batch.probes.cols() != b)
    throw DimensionError("rssm_loss: batch carries no Hutchinson probes");
  Eigen::MatrixXd xs(n, 3 * b);
  Eigen::VectorXd ts(3 * b);
  Eigen::MatrixXd dirs(n, b);
  Eigen::VectorXd hs(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Eigen::VectorXd x = batch.noisy.col(j);
    const Eigen::MatrixXd frame = m.normal_frame(x);
    const Eigen::VectorXd z = batch.probes.col(j);
    const Eigen::VectorXd u = z - frame * (frame.transpose() * z);  // P z
    const double h = 1e-4 * (1.0 + x.norm());
    dirs.col(j) = u;
    hs[j] = h;
    xs.col(j) = x;
    xs.col(b + j) = x + h * u;
    xs.col(2 * b + j) = x - h * u;
    ts[j] = ts[b + j] = ts[2 * b + j] = batch.times[j];
  }
  ForwardCache cache;
  const Eigen::MatrixXd input = model_input(model, schedule, xs, ts);
  const Eigen::MatrixXd raw =
      mlp_forward(model.params, input, grad ? &cache : nullptr);
  Eigen::MatrixXd seed;
  if (grad) {
    seed.resize(raw.rows(), 3 * b);
    seed.setZero();
  }
  double loss = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const double w = rescale_factor(model.rescale, batch.times[j], schedule,
                                    model.rescale_const);
    const double lam = batch.lambdas[j];
    const Eigen::VectorXd s0 = raw.col(j) / w;
    const Eigen::VectorXd jvp =
        (raw.col(b + j) - raw.col(2 * b + j)) / (2.0 * hs[j] * w);
    loss += lam * (s0.squaredNorm() + 2.0 * dirs.col(j).dot(jvp));
    if (grad) {
      seed.col(j) = (2.0 * lam / (b * w)) * s0;
      seed.col(b + j) = (lam / (b * hs[j] * w)) * dirs.col(j);
      seed.col(2 * b + j) = -(lam / (b * hs[j] * w)) * dirs.col(j);
    }
  }
  loss /= static_cast<double>(b);
  if (grad) mlp_backward(model.params, cache, seed, *grad);
  return loss;
}

/// Dispatch on the batch's method tag.
inline double method_loss(const ScoreModel& model, const NoiseSchedule& schedule,
                          const LossBatch& batch, const Manifold& m,
                          const MethodParams& mp, MlpParams* grad = nullptr) {
  switch (batch.method) {
    case Method::Iso:
      return dsm_loss(model, schedule, batch, grad);
    case Method::Niso:
      return niso_loss(model, schedule, batch, m, mp.c_niso, grad);
    case Method::Tango:
      return tango_mixed_loss(model, schedule, batch, m, mp.c_tango, grad);
    case Method::Rssm:
      return rssm_loss(model, schedule, batch, m, grad);
  }
  throw ConfigError("unknown method");
}

/// Tango loss evaluated on an arbitrary field instead of the network.
inline double tango_loss_on_field(const ScoreField& field,
                                  const NoiseSchedule& schedule,
                                  const LossBatch& batch, const Manifold& m,
                                  double c_tango) {
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const double t = batch.times[j];
    const double sigma = schedule.sigma(t);
    const Eigen::VectorXd target =
        -(batch.noisy.col(j) - batch.clean.col(j)) / (sigma * sigma);
    Eigen::VectorXd resid = field(batch.noisy.col(j), t) - target;
    if (sigma < c_tango) {
      const Eigen::MatrixXd frame = m.normal_frame(batch.noisy.col(j));
      resid -= frame * (frame.transpose() * resid);
    }
    loss += batch.lambdas[j] * resid.squaredNorm();
  }
  return loss / static_cast<double>(batch.size());
}

/// One optimization step: loss + gradient, clip, Adam, EMA.
/// Aborts with diagnostics if the loss turns non-finite.
inline double train_step(ScoreModel& model, AdamState& state,
                         const LossBatch& batch, const Manifold& m,
                         const NoiseSchedule& schedule, const MethodParams& mp,
                         const OptimizerConfig& opt) {
  MlpParams grad = MlpParams::zeros_like(model.params);
  const double loss = method_loss(model, schedule, batch, m, mp, &grad);
  if (!std::isfinite(loss))
    throw NumericError("non-finite training loss at step " +
                       std::to_string(state.step + 1) + " (method " +
                       to_string(batch.method) + ")");
  apply_gradient_update(model, state, grad, opt);
  return loss;
}

}  // namespace mandiff
