#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mandiff/errors.hpp"
#include "mandiff/manifold.hpp"
#include "mandiff/method.hpp"
#include "mandiff/noise_schedule.hpp"
#include "mandiff/rng.hpp"
#include "mandiff/score_model.hpp"

namespace mandiff {

enum class SamplerKind { ReverseSde, AnnealingSde };

inline std::string to_string(SamplerKind k) {
  return k == SamplerKind::ReverseSde ? "reverse" : "annealing";
}

inline SamplerKind sampler_from_string(const std::string& s) {
  if (s == "reverse") return SamplerKind::ReverseSde;
  if (s == "annealing") return SamplerKind::AnnealingSde;
  throw ConfigError("unknown sampler: " + s);
}

struct SampleConfig {
  int steps = 500;                  // N reverse-SDE steps
  int langevin_steps = 10;          // n0 inner steps per time tick
  double langevin_step_size = 0.01; // alpha_ld
  double sigma_switch = 0.0;        // stage threshold; 0 = fill from method
  int chains = 1000;
  std::uint64_t seed = 0;

  void validate(const NoiseSchedule& schedule) const {
    if (steps < 1) throw ConfigError("sampler needs steps >= 1");
    if (langevin_steps < 0) throw ConfigError("langevin_steps must be >= 0");
    if (!(langevin_step_size > 0.0))
      throw ConfigError("langevin_step_size must be > 0");
    if (chains < 1) throw ConfigError("need at least one chain");
    if (sigma_switch != 0.0 &&
        (sigma_switch < schedule.sigma_min() ||
         sigma_switch > schedule.sigma_max()))
      throw ConfigError("sigma_switch outside [sigma_min, sigma_max]");
  }
};

namespace detail {

inline void check_reverse_applicable(Method method) {
  if (method == Method::Tango)
    throw UnsupportedMethodError(
        "reverse SDE sampling is not applicable to tango (normal score "
        "component is untrained)");
  if (method == Method::Rssm)
    throw UnsupportedMethodError(
        "reverse SDE sampling is not applicable to the rssm baseline "
        "(tangential-only field)");
}

/// Chains own independent streams derived from (seed, chain index).
inline std::vector<Rng> chain_streams(std::uint64_t seed, int chains) {
  std::vector<Rng> streams;
  streams.reserve(chains);
  for (int i = 0; i < chains; ++i)
    streams.push_back(Rng::derive(seed, "chain", static_cast<std::uint64_t>(i)));
  return streams;
}

inline void reverse_sde_step(Eigen::MatrixXd& state, const BatchedScore& score,
                             const NoiseSchedule& schedule, double t,
                             double dt, std::vector<Rng>& streams) {
  const double g2 = schedule.g_squared(t);
  const double g_sqrt_dt = std::sqrt(g2 * dt);
  state += g2 * dt * score(state, t);
  for (Eigen::Index c = 0; c < state.cols(); ++c)
    state.col(c) += g_sqrt_dt * streams[c].normal_vector(state.rows());
}

}  // namespace detail

/// Single constrained Langevin update from a precomputed score value:
///   x' = x + alpha P(x) s + sqrt(2 alpha) P(x) z,  then pi(x').
inline Eigen::VectorXd projected_langevin_update(const Manifold& m,
                                                 const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& score,
                                                 double alpha, Rng& rng) {
  const Eigen::MatrixXd frame = m.normal_frame(x);
  auto tangential = [&frame](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - frame * (frame.transpose() * v);
  };
  const Eigen::VectorXd z = rng.normal_vector(x.size());
  const Eigen::VectorXd proposal = x + alpha * tangential(score) +
                                   std::sqrt(2.0 * alpha) * tangential(z);
  return m.project(proposal);
}

/// Langevin step evaluating the score field at (x, t).
inline Eigen::VectorXd projected_langevin_step(const ScoreField& score,
                                               const Manifold& m,
                                               const Eigen::VectorXd& x,
                                               double t, double alpha,
                                               Rng& rng) {
  return projected_langevin_update(m, x, score(x, t), alpha, rng);
}

/// Euler-Maruyama simulation of dX = -g^2 s dt + g dW from X_T ~ N(0,
/// sigma_max^2 I) down to t = 0, followed by one projection. `manifold` may
/// be null (projection skipped), e.g. for full-space calibration targets.
/// Rows of the result are samples.
inline Eigen::MatrixXd reverse_sde_sample(const BatchedScore& score,
                                          Method method,
                                          const Manifold* manifold,
                                          int ambient_dim,
                                          const NoiseSchedule& schedule,
                                          const SampleConfig& cfg) {
  detail::check_reverse_applicable(method);
  cfg.validate(schedule);
  if (manifold && manifold->ambient_dim() != ambient_dim)
    throw DimensionError("reverse_sde_sample: ambient dimension mismatch");
  std::vector<Rng> streams = detail::chain_streams(cfg.seed, cfg.chains);
  Eigen::MatrixXd state(ambient_dim, cfg.chains);
  for (int c = 0; c < cfg.chains; ++c)
    state.col(c) = schedule.sigma_max() * streams[c].normal_vector(ambient_dim);
  const double dt = schedule.horizon() / cfg.steps;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = schedule.horizon() - k * dt;
    detail::reverse_sde_step(state, score, schedule, t, dt, streams);
  }
  if (manifold)
    for (int c = 0; c < cfg.chains; ++c)
      state.col(c) = manifold->project(state.col(c));
  return state.transpose();
}

/// Two-stage sampler: reverse SDE while sigma_t >= sigma_switch, projection,
/// then n0 projected Langevin steps per remaining time tick. A transiently
/// failing projection is retried once from the pre-step state; a second
/// failure aborts with the chain index and time.
inline Eigen::MatrixXd annealing_sde_sample(const BatchedScore& score,
                                            const Manifold& manifold,
                                            const NoiseSchedule& schedule,
                                            const SampleConfig& cfg) {
  cfg.validate(schedule);
  if (!(cfg.sigma_switch > 0.0))
    throw ConfigError("annealing sampler needs sigma_switch > 0");
  const int n = manifold.ambient_dim();
  std::vector<Rng> streams = detail::chain_streams(cfg.seed, cfg.chains);
  Eigen::MatrixXd state(n, cfg.chains);
  for (int c = 0; c < cfg.chains; ++c)
    state.col(c) = schedule.sigma_max() * streams[c].normal_vector(n);
  const double dt = schedule.horizon() / cfg.steps;

  int k = 0;
  for (; k < cfg.steps; ++k) {
    const double t = schedule.horizon() - k * dt;
    if (schedule.sigma(t) < cfg.sigma_switch) break;
    detail::reverse_sde_step(state, score, schedule, t, dt, streams);
  }
  for (int c = 0; c < cfg.chains; ++c)
    state.col(c) = manifold.project(state.col(c));

  for (; k < cfg.steps; ++k) {
    const double t = schedule.horizon() - k * dt;
    for (int inner = 0; inner < cfg.langevin_steps; ++inner) {
      const Eigen::MatrixXd scores = score(state, t);
      for (int c = 0; c < cfg.chains; ++c) {
        try {
          state.col(c) = projected_langevin_update(
              manifold, state.col(c), scores.col(c),
              cfg.langevin_step_size, streams[c]);
        } catch (const ProjectionError&) {
          try {
            state.col(c) = projected_langevin_update(
                manifold, state.col(c), scores.col(c),
                cfg.langevin_step_size, streams[c]);
          } catch (const ProjectionError& second) {
            throw ProjectionError("chain " + std::to_string(c) +
                                      " aborted at t = " + std::to_string(t),
                                  second.residual);
          }
        }
      }
    }
  }
  return state.transpose();
}

}  // namespace mandiff
