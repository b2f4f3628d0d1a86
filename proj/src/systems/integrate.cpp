#include "sympkan/systems/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sympkan/errors.hpp"

namespace sympkan::systems {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = kB1 - 5179.0 / 57600, kE3 = kB3 - 7571.0 / 16695,
                 kE4 = kB4 - 393.0 / 640, kE5 = kB5 + 92097.0 / 339200,
                 kE6 = kB6 - 187.0 / 2100, kE7 = -1.0 / 40;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;

void check_times(std::span<const double> times) {
  if (times.empty()) throw UsageError("need at least one sample time");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw UsageError("sample times must be strictly increasing");
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

FieldFn field_of(const SystemSpec& spec) {
  return [spec](double, std::span<const double> z, std::span<double> dz) {
    true_vector_field(spec, z, dz);
  };
}

IntegrationResult integrate_rk45_partial(const FieldFn& field,
                                         std::span<const double> z0,
                                         std::span<const double> times,
                                         const Rk45Options& opts) {
  check_times(times);
  const std::size_t n = z0.size();

  IntegrationResult res;
  res.states.emplace_back(z0.begin(), z0.end());
  res.completed = 1;
  res.last_time = times[0];
  if (times.size() == 1) return res;

  std::vector<double> y(z0.begin(), z0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> yt(n), ynew(n), err(n);
  std::size_t evals = 0;

  auto stop = [&](const std::string& why) {
    res.diverged = true;
    res.reason = why;
    return res;
  };
  auto eval = [&](double t, std::span<const double> state,
                  std::span<double> out) {
    ++evals;
    field(t, state, out);
  };

  double t = times[0];
  try {
    eval(t, y, k1);
  } catch (const SingularityError& e) {
    return stop(std::string("singular field at start: ") + e.what());
  }

  // starting step size from the scaled state and field magnitudes
  double h;
  {
    std::vector<double> sc(n);
    for (std::size_t i = 0; i < n; ++i)
      sc[i] = opts.atol + opts.rtol * std::abs(y[i]);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] / sc[i];
    const double d0 = rms(w);
    for (std::size_t i = 0; i < n; ++i) w[i] = k1[i] / sc[i];
    const double d1 = rms(w);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, times.back() - t);
  }

  std::size_t next = 1;
  bool k1_fresh = true;
  while (next < times.size()) {
    if (evals > opts.max_evals)
      return stop("evaluation budget exhausted (" +
                  std::to_string(opts.max_evals) + ")");
    if (!(h > std::abs(t) * 1e-14) || !(t + h > t))
      return stop("step size underflow at t = " + std::to_string(t));

    const bool hits_sample = t + h >= times[next] - 1e-14 * std::max(1.0, std::abs(times[next]));
    if (hits_sample) h = times[next] - t;

    bool ok = true;
    double err_norm = std::numeric_limits<double>::infinity();
    try {
      if (!k1_fresh) eval(t, y, k1);
      k1_fresh = true;
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * kA21 * k1[i];
      eval(t + kC2 * h, yt, k2);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
      eval(t + kC3 * h, yt, k3);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
      eval(t + kC4 * h, yt, k4);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] +
                            kA54 * k4[i]);
      eval(t + kC5 * h, yt, k5);
      for (std::size_t i = 0; i < n; ++i)
        yt[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                            kA64 * k4[i] + kA65 * k5[i]);
      eval(t + h, yt, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] +
                              kB5 * k5[i] + kB6 * k6[i]);
      eval(t + h, ynew, k7);

      if (!all_finite(ynew)) {
        ok = false;
      } else {
        for (std::size_t i = 0; i < n; ++i)
          err[i] = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                        kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]),
                                                             std::abs(ynew[i]));
          const double e = err[i] / sc;
          s += e * e;
        }
        err_norm = std::sqrt(s / static_cast<double>(n));
        if (!std::isfinite(err_norm)) ok = false;
      }
    } catch (const SingularityError&) {
      ok = false;
    }

    if (ok && err_norm <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // first stage of the next step is the last of this one
      if (hits_sample) {
        res.states.emplace_back(y.begin(), y.end());
        res.completed += 1;
        res.last_time = t;
        next += 1;
      } else {
        res.last_time = t;
      }
      if (opts.max_norm > 0.0) {
        for (double v : y)
          if (std::abs(v) > opts.max_norm)
            return stop("state norm exceeded " + std::to_string(opts.max_norm) +
                        " at t = " + std::to_string(t));
      }
      const double factor =
          err_norm == 0.0
              ? 5.0
              : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      h = std::min(h * factor, times.back() - t);
      if (next < times.size()) h = std::max(h, 1e-300);
    } else {
      k1_fresh = true;  // k1 is still the field at (t, y)
      h *= ok ? std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 0.9) : 0.2;
    }
  }
  return res;
}

std::vector<std::vector<double>> integrate_rk45(const FieldFn& field,
                                                std::span<const double> z0,
                                                std::span<const double> times,
                                                const Rk45Options& opts) {
  IntegrationResult res = integrate_rk45_partial(field, z0, times, opts);
  if (res.diverged)
    throw IntegrationError("integration stopped early: " + res.reason,
                           res.last_time);
  return std::move(res.states);
}

std::vector<std::vector<double>> integrate_rk4(const FieldFn& field,
                                               std::span<const double> z0,
                                               std::span<const double> times,
                                               double dt_max) {
  check_times(times);
  if (!(dt_max > 0.0)) throw UsageError("dt_max must be positive");
  const std::size_t n = z0.size();

  std::vector<std::vector<double>> states;
  states.emplace_back(z0.begin(), z0.end());
  std::vector<double> y(z0.begin(), z0.end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), yt(n);

  for (std::size_t s = 1; s < times.size(); ++s) {
    const double span = times[s] - times[s - 1];
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max));
    const double h = span / static_cast<double>(steps);
    double t = times[s - 1];
    for (std::size_t step = 0; step < steps; ++step) {
      field(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * k1[i];
      field(t + 0.5 * h, yt, k2);
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + 0.5 * h * k2[i];
      field(t + 0.5 * h, yt, k3);
      for (std::size_t i = 0; i < n; ++i) yt[i] = y[i] + h * k3[i];
      field(t + h, yt, k4);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
    }
    if (!all_finite(y))
      throw IntegrationError("state became non-finite", times[s - 1]);
    states.emplace_back(y.begin(), y.end());
  }
  return states;
}

std::vector<std::vector<double>> leapfrog(const SystemSpec& spec,
                                          std::span<const double> z0,
                                          std::span<const double> times,
                                          double dt_max) {
  check_times(times);
  if (!(dt_max > 0.0)) throw UsageError("dt_max must be positive");
  if (z0.size() != static_cast<std::size_t>(spec.dim()))
    throw ShapeError("initial state does not match the system dimension");
  const std::size_t d = static_cast<std::size_t>(spec.dof);

  std::vector<std::vector<double>> states;
  states.emplace_back(z0.begin(), z0.end());
  std::vector<double> q(z0.begin(), z0.begin() + static_cast<std::ptrdiff_t>(d));
  std::vector<double> p(z0.begin() + static_cast<std::ptrdiff_t>(d), z0.end());
  std::vector<double> gq(d), gp(d);

  for (std::size_t s = 1; s < times.size(); ++s) {
    const double span = times[s] - times[s - 1];
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max));
    const double h = span / static_cast<double>(steps);
    for (std::size_t step = 0; step < steps; ++step) {
      potential_gradient(spec, q, gq);
      for (std::size_t i = 0; i < d; ++i) p[i] -= 0.5 * h * gq[i];
      kinetic_gradient(spec, p, gp);
      for (std::size_t i = 0; i < d; ++i) q[i] += h * gp[i];
      potential_gradient(spec, q, gq);
      for (std::size_t i = 0; i < d; ++i) p[i] -= 0.5 * h * gq[i];
    }
    std::vector<double> z(2 * d);
    std::copy(q.begin(), q.end(), z.begin());
    std::copy(p.begin(), p.end(), z.begin() + static_cast<std::ptrdiff_t>(d));
    states.push_back(std::move(z));
  }
  return states;
}

}  // namespace sympkan::systems
