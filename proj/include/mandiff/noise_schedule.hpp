#pragma once

#include <cmath>
#include <string>

#include "mandiff/errors.hpp"

namespace mandiff {

/// Geometric VESDE schedule: sigma(t) = sigma_min (sigma_max/sigma_min)^(t/T).
class NoiseSchedule {
 public:
  NoiseSchedule(double sigma_min, double sigma_max, double horizon)
      : sigma_min_(sigma_min), sigma_max_(sigma_max), horizon_(horizon) {
    if (!(sigma_min > 0.0))
      throw ConfigError("sigma_min must be positive");
    if (!(sigma_max > sigma_min))
      throw ConfigError("sigma_max must exceed sigma_min");
    if (!(horizon > 0.0)) throw ConfigError("horizon T must be positive");
    log_ratio_ = std::log(sigma_max_ / sigma_min_);
  }

  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }
  double horizon() const { return horizon_; }

  double sigma(double t) const {
    check_time(t);
    return sigma_min_ * std::exp(log_ratio_ * t / horizon_);
  }

  /// g(t)^2 = d(sigma_t^2)/dt = 2 sigma_t^2 log(sigma_max/sigma_min) / T.
  double g_squared(double t) const {
    const double s = sigma(t);
    return 2.0 * s * s * log_ratio_ / horizon_;
  }

  /// Time at which sigma(t) = s (inverse of the schedule).
  double time_of_sigma(double s) const {
    if (!(s >= sigma_min_ && s <= sigma_max_))
      throw ConfigError("sigma " + std::to_string(s) +
                        " outside schedule range");
    return horizon_ * std::log(s / sigma_min_) / log_ratio_;
  }

 private:
  void check_time(double t) const {
    if (!(t >= 0.0 && t <= horizon_))
      throw ConfigError("time " + std::to_string(t) + " outside [0, T]");
  }

  double sigma_min_, sigma_max_, horizon_, log_ratio_;
};

}  // namespace mandiff
