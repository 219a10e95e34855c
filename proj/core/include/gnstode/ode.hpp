#pragma once

#include <cstdint>
#include <functional>

#include "gnstode/autodiff.hpp"

namespace gnstode {

enum class OdeMethod : std::uint32_t { Euler = 0, RK4 = 1 };

struct OdeConfig {
  OdeMethod method = OdeMethod::RK4;
  int steps = 1;
};

using OdeRhs = std::function<Var(Var state, double t)>;

/// Solves y' = f(y, t) from t0 to t1 with `steps` uniform explicit steps.
/// Every stage is recorded on y0's tape, so gradients reach both y0 and any
/// parameters f closes over.
Var integrate(const OdeRhs& f, Var y0, double t0, double t1, const OdeConfig& config);

}  // namespace gnstode
