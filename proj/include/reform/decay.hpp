// Copyright 2026 The reform-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <variant>

namespace reform {

struct ConstantDecay {
  friend bool operator==(const ConstantDecay&, const ConstantDecay&) = default;
};

/// beta(t) = exp(-rate * t)
struct ExponentialDecay {
  double rate = 1.0;
  friend bool operator==(const ExponentialDecay&, const ExponentialDecay&) = default;
};

/// beta(t) = 1 - slope * t; needs slope * deadline < 1 to stay positive.
struct LinearDecay {
  double slope = 0.0;
  friend bool operator==(const LinearDecay&, const LinearDecay&) = default;
};

/// Time multiplier applied to every peer factor. Non-increasing in t with
/// values in (0, 1] over (0, deadline].
using DecayFactor = std::variant<ConstantDecay, ExponentialDecay, LinearDecay>;

inline double decay_value(const DecayFactor& decay, double t) {
  struct Visitor {
    double t;
    double operator()(const ConstantDecay&) const { return 1.0; }
    double operator()(const ExponentialDecay& d) const { return std::exp(-d.rate * t); }
    double operator()(const LinearDecay& d) const { return 1.0 - d.slope * t; }
  };
  return std::visit(Visitor{t}, decay);
}

/// Throws unless beta stays in (0, 1] on (0, deadline].
inline void validate_decay(const DecayFactor& decay, double deadline) {
  if (const auto* e = std::get_if<ExponentialDecay>(&decay)) {
    if (!(e->rate > 0.0) || !std::isfinite(e->rate))
      throw std::invalid_argument("decay rate > 0 required");
  } else if (const auto* l = std::get_if<LinearDecay>(&decay)) {
    if (!(l->slope >= 0.0) || !(l->slope * deadline < 1.0))
      throw std::invalid_argument("linear decay needs 0 ≤ slope·deadline < 1");
  }
}

/// Shortest text that parses back to exactly `value`.
inline std::string format_exact(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

/// "constant", "exp:RATE" or "linear:SLOPE".
inline std::string decay_to_string(const DecayFactor& decay) {
  if (const auto* e = std::get_if<ExponentialDecay>(&decay)) return "exp:" + format_exact(e->rate);
  if (const auto* l = std::get_if<LinearDecay>(&decay)) return "linear:" + format_exact(l->slope);
  return "constant";
}

inline DecayFactor parse_decay(const std::string& text) {
  auto number_after = [&](std::size_t prefix) {
    const std::string tail = text.substr(prefix);
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (tail.empty() || *end != '\0') throw std::invalid_argument("bad decay descriptor: " + text);
    return v;
  };
  if (text == "constant") return ConstantDecay{};
  if (text.rfind("exp:", 0) == 0) return ExponentialDecay{number_after(4)};
  if (text.rfind("linear:", 0) == 0) return LinearDecay{number_after(7)};
  throw std::invalid_argument("bad decay descriptor: " + text);
}

}  // namespace reform
