#pragma once

#include <string>

#include "mandiff/errors.hpp"
#include "mandiff/score_model.hpp"

namespace mandiff {

/// Training objective selector.
enum class Method { Iso, Niso, Tango, Rssm };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::Iso: return "iso";
    case Method::Niso: return "niso";
    case Method::Tango: return "tango";
    case Method::Rssm: return "rssm";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "iso") return Method::Iso;
  if (s == "niso") return Method::Niso;
  if (s == "tango") return Method::Tango;
  if (s == "rssm") return Method::Rssm;
  throw ConfigError("unknown method: " + s);
}

/// Method plus the constants the losses and samplers need.
struct MethodParams {
  Method method = Method::Iso;
  bool rescale = false;
  double c_niso = 0.0;
  double c_tango = 0.0;

  void validate() const {
    if (method == Method::Niso && !(c_niso > 0.0 && c_niso < 1.0))
      throw ConfigError("niso requires c_niso in (0, 1)");
    if (method == Method::Tango && !(c_tango > 0.0))
      throw ConfigError("tango requires c_tango > 0");
    if (method == Method::Rssm && rescale)
      throw ConfigError("rescaling is not defined for the rssm baseline");
  }

  RescaleMethod rescale_method() const {
    if (!rescale) return RescaleMethod::None;
    switch (method) {
      case Method::Iso: return RescaleMethod::Iso;
      case Method::Niso: return RescaleMethod::Niso;
      case Method::Tango: return RescaleMethod::Tango;
      case Method::Rssm: return RescaleMethod::None;
    }
    return RescaleMethod::None;
  }

  double rescale_const() const {
    switch (method) {
      case Method::Niso: return c_niso;
      case Method::Tango: return c_tango;
      default: return 0.0;
    }
  }
};

}  // namespace mandiff
