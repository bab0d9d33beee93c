#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ftle/core.hpp"
#include "ftle/error.hpp"
#include "ftle/parallel.hpp"

namespace ftle {

/// Time-periodic double gyre on [0,2] x [0,1]. In 3D the flow is extended
/// with w = 0 and no bound on z.
struct DoubleGyre {
  double A = 0.1;
  double eps = 0.25;
  double omega = 2.0 * std::numbers::pi / 10.0;
};

/// Arnold-Beltrami-Childress flow (3D only).
struct AbcFlow {
  double A = std::numbers::sqrt3;
  double B = std::numbers::sqrt2;
  double C = 1.0;
};

struct IdentityFlow {};

struct ConstantDrift {
  int dim = 2;
  std::array<double, 3> velocity{};
};

using FlowSpec = std::variant<DoubleGyre, AbcFlow, IdentityFlow, ConstantDrift>;

/// Positions within this distance of the double-gyre box count as inside it.
inline constexpr double kDomainTolerance = 1e-9;

inline std::string flow_name(const FlowSpec& spec) {
  struct {
    std::string operator()(const DoubleGyre&) const { return "double-gyre"; }
    std::string operator()(const AbcFlow&) const { return "abc"; }
    std::string operator()(const IdentityFlow&) const { return "identity"; }
    std::string operator()(const ConstantDrift&) const { return "drift"; }
  } visitor;
  return std::visit(visitor, spec);
}

inline void validate_flow(const FlowSpec& spec, int dim) {
  detail::check_dim(dim);
  auto finite = [](std::initializer_list<double> xs) {
    for (double x : xs)
      if (!std::isfinite(x)) return false;
    return true;
  };
  if (const auto* g = std::get_if<DoubleGyre>(&spec)) {
    if (!finite({g->A, g->eps, g->omega})) throw Error(Errc::invalid_argument, "double-gyre parameters must be finite");
  } else if (const auto* abc = std::get_if<AbcFlow>(&spec)) {
    if (dim != 3) throw Error(Errc::invalid_argument, "the ABC flow is three-dimensional");
    if (!finite({abc->A, abc->B, abc->C})) throw Error(Errc::invalid_argument, "ABC coefficients must be finite");
  } else if (const auto* c = std::get_if<ConstantDrift>(&spec)) {
    if (c->dim != dim) throw Error(Errc::invalid_argument, "drift velocity has the wrong dimension");
    if (!finite({c->velocity[0], c->velocity[1], c->velocity[2]}))
      throw Error(Errc::invalid_argument, "drift velocity must be finite");
  }
}

/// Default seeding domain per flow: lower/upper bound per axis.
inline std::array<std::array<double, 2>, 3> default_domain(const FlowSpec& spec) {
  if (std::holds_alternative<DoubleGyre>(spec)) return {{{0.0, 2.0}, {0.0, 1.0}, {0.0, 1.0}}};
  if (std::holds_alternative<AbcFlow>(spec)) {
    constexpr double tau = 2.0 * std::numbers::pi;
    return {{{0.0, tau}, {0.0, tau}, {0.0, tau}}};
  }
  return {{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};
}

namespace detail {

template <int D>
using Vec = std::array<double, D>;

inline bool in_double_gyre_domain(double x, double y) {
  return x >= -kDomainTolerance && x <= 2.0 + kDomainTolerance && y >= -kDomainTolerance &&
         y <= 1.0 + kDomainTolerance;
}

// Returns false when x is outside the flow's domain.
template <int D>
inline bool velocity_at(const FlowSpec& spec, const Vec<D>& x, double t, Vec<D>& v) {
  constexpr double pi = std::numbers::pi;
  if (const auto* g = std::get_if<DoubleGyre>(&spec)) {
    if (!in_double_gyre_domain(x[0], x[1])) return false;
    const double s = g->eps * std::sin(g->omega * t);
    const double a = s;
    const double b = 1.0 - 2.0 * s;
    const double f = a * x[0] * x[0] + b * x[0];
    const double dfdx = 2.0 * a * x[0] + b;
    v[0] = -pi * g->A * std::sin(pi * f) * std::cos(pi * x[1]);
    v[1] = pi * g->A * std::cos(pi * f) * std::sin(pi * x[1]) * dfdx;
    if constexpr (D == 3) v[2] = 0.0;
  } else if (const auto* abc = std::get_if<AbcFlow>(&spec)) {
    if constexpr (D == 3) {
      v[0] = abc->A * std::sin(x[2]) + abc->C * std::cos(x[1]);
      v[1] = abc->B * std::sin(x[0]) + abc->A * std::cos(x[2]);
      v[2] = abc->C * std::sin(x[1]) + abc->B * std::cos(x[0]);
    }
  } else if (const auto* c = std::get_if<ConstantDrift>(&spec)) {
    for (int i = 0; i < D; ++i) v[i] = c->velocity[i];
  } else {
    v.fill(0.0);
  }
  return true;
}

// Classical RK4. Returns -1 on success, otherwise the index of the step in
// which the trajectory left the domain.
template <int D>
inline long rk4(const FlowSpec& spec, Vec<D>& x, double t0, double T, double dt) {
  const double steps_real = std::abs(T / dt);
  long nsteps = static_cast<long>(std::ceil(steps_real - 1e-9 * std::max(1.0, steps_real)));
  if (nsteps < 1) nsteps = 1;
  const double t_end = t0 + T;

  Vec<D> k1{}, k2{}, k3{}, k4{}, tmp{};
  for (long s = 0; s < nsteps; ++s) {
    const double t = t0 + static_cast<double>(s) * dt;
    // last step lands exactly on t0 + T
    const double h = s + 1 == nsteps ? t_end - t : dt;
    if (!velocity_at<D>(spec, x, t, k1)) return s;
    for (int i = 0; i < D; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    if (!velocity_at<D>(spec, tmp, t + 0.5 * h, k2)) return s;
    for (int i = 0; i < D; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    if (!velocity_at<D>(spec, tmp, t + 0.5 * h, k3)) return s;
    for (int i = 0; i < D; ++i) tmp[i] = x[i] + h * k3[i];
    if (!velocity_at<D>(spec, tmp, t + h, k4)) return s;
    for (int i = 0; i < D; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  if (std::holds_alternative<DoubleGyre>(spec) && !in_double_gyre_domain(x[0], x[1])) return nsteps;
  return -1;
}

inline void check_step(double T, double dt) {
  if (!std::isfinite(T) || !std::isfinite(dt)) throw Error(Errc::invalid_argument, "T and dt must be finite");
  if (T == 0.0) throw Error(Errc::zero_horizon, "advection horizon must be non-zero");
  if (dt == 0.0) throw Error(Errc::invalid_argument, "dt must be non-zero");
  if ((T > 0) != (dt > 0)) throw Error(Errc::invalid_argument, "dt must have the sign of T");
}

inline std::string format_position(std::span<const double> x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + std::to_string(x[i]);
  return s + ")";
}

}  // namespace detail

inline std::vector<double> velocity(const FlowSpec& spec, std::span<const double> x, double t) {
  const int dim = static_cast<int>(x.size());
  validate_flow(spec, dim);
  std::vector<double> out(x.size());
  bool inside = true;
  if (dim == 2) {
    detail::Vec<2> p{x[0], x[1]}, v{};
    inside = detail::velocity_at<2>(spec, p, t, v);
    std::copy(v.begin(), v.end(), out.begin());
  } else {
    detail::Vec<3> p{x[0], x[1], x[2]}, v{};
    inside = detail::velocity_at<3>(spec, p, t, v);
    std::copy(v.begin(), v.end(), out.begin());
  }
  if (!inside) throw Error(Errc::domain_exit, "position " + detail::format_position(x) + " is outside the domain");
  return out;
}

/// Final position after integrating from t0 to t0 + T with step dt.
inline std::vector<double> advect_rk4(const FlowSpec& spec, std::span<const double> x0, double t0, double T,
                                      double dt) {
  const int dim = static_cast<int>(x0.size());
  validate_flow(spec, dim);
  detail::check_step(T, dt);
  std::vector<double> out(x0.begin(), x0.end());
  long failed = -1;
  if (dim == 2) {
    detail::Vec<2> p{x0[0], x0[1]};
    failed = detail::rk4<2>(spec, p, t0, T, dt);
    std::copy(p.begin(), p.end(), out.begin());
  } else {
    detail::Vec<3> p{x0[0], x0[1], x0[2]};
    failed = detail::rk4<3>(spec, p, t0, T, dt);
    std::copy(p.begin(), p.end(), out.begin());
  }
  if (failed >= 0) {
    throw Error(Errc::domain_exit, "trajectory from " + detail::format_position(x0) + " left the domain at step " +
                                       std::to_string(failed));
  }
  return out;
}

/// Advects every mesh point. Points are independent; `workers` only affects
/// speed, never the result.
inline FlowmapField generate_flowmap(const MeshTopology& mesh, const FlowSpec& spec, double t0, double T, double dt,
                                     std::size_t workers = default_worker_count()) {
  const int dim = mesh.dim();
  validate_flow(spec, dim);
  detail::check_step(T, dt);
  if (!std::isfinite(t0)) throw Error(Errc::invalid_argument, "t0 must be finite");

  FlowmapField field;
  field.dim = dim;
  field.npoints = mesh.npoints();
  field.t0 = t0;
  field.T = T;
  field.values.resize(mesh.npoints() * dim);

  std::atomic<std::size_t> first_bad{SIZE_MAX};
  const double* coords = mesh.coords().data();
  double* dst = field.values.data();

  auto run = [&]<int D>() {
    parallel_chunks(mesh.npoints(), workers, 1024, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        detail::Vec<D> x;
        for (int i = 0; i < D; ++i) x[i] = coords[p * D + i];
        if (detail::rk4<D>(spec, x, t0, T, dt) >= 0) {
          std::size_t cur = first_bad.load(std::memory_order_relaxed);
          while (p < cur && !first_bad.compare_exchange_weak(cur, p, std::memory_order_relaxed)) {
          }
        }
        for (int i = 0; i < D; ++i) dst[p * D + i] = x[i];
      }
    });
  };
  if (dim == 2) run.template operator()<2>();
  else run.template operator()<3>();

  if (const std::size_t bad = first_bad.load(); bad != SIZE_MAX) {
    try {
      advect_rk4(spec, mesh.coords().subspan(bad * dim, dim), t0, T, dt);
    } catch (const Error& e) {
      throw Error(Errc::domain_exit, "point " + std::to_string(bad) + ": " + e.what());
    }
  }
  return field;
}

}  // namespace ftle
