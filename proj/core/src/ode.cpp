#include "gnstode/ode.hpp"

#include <stdexcept>
#include <string>

namespace gnstode {

namespace {

Var rhs_checked(const OdeRhs& f, Var y, double t, const Tensor& y0_shape) {
  Var dy = f(y, t);
  const Tensor& v = dy.tape->value(dy);
  if (!v.same_shape(y0_shape)) {
    throw std::invalid_argument("integrate: rhs returned " + v.shape_str() +
                                " for state " + y0_shape.shape_str());
  }
  return dy;
}

}  // namespace

Var integrate(const OdeRhs& f, Var y0, double t0, double t1, const OdeConfig& config) {
  if (t1 <= t0) throw std::invalid_argument("integrate: need t1 > t0");
  if (config.steps < 1) throw std::invalid_argument("integrate: need steps >= 1");

  Tape& tape = *y0.tape;
  const Tensor shape = tape.value(y0);
  const double h = (t1 - t0) / config.steps;

  Var y = y0;
  for (int step = 0; step < config.steps; ++step) {
    // pin the final stage time to t1 so rhs never sees t outside [t0, t1]
    const double t = t0 + step * h;
    const double t_next = (step + 1 == config.steps) ? t1 : t0 + (step + 1) * h;
    const double hs = t_next - t;
    if (config.method == OdeMethod::Euler) {
      Var k1 = rhs_checked(f, y, t, shape);
      y = tape.add(y, tape.scalar_mul(k1, hs));
    } else {
      Var k1 = rhs_checked(f, y, t, shape);
      Var k2 = rhs_checked(f, tape.add(y, tape.scalar_mul(k1, 0.5 * hs)), t + 0.5 * hs, shape);
      Var k3 = rhs_checked(f, tape.add(y, tape.scalar_mul(k2, 0.5 * hs)), t + 0.5 * hs, shape);
      Var k4 = rhs_checked(f, tape.add(y, tape.scalar_mul(k3, hs)), t_next, shape);
      Var mid = tape.scalar_mul(tape.add(k2, k3), 2.0);
      Var total = tape.add(tape.add(k1, mid), k4);
      y = tape.add(y, tape.scalar_mul(total, hs / 6.0));
    }
    if (!tape.value(y).all_finite()) {
      throw std::runtime_error("integrate: non-finite state at step " +
                               std::to_string(step + 1) + " of " +
                               std::to_string(config.steps));
    }
  }
  return y;
}

}  // namespace gnstode
