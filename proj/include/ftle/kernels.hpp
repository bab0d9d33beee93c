#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>

#include "ftle/core.hpp"
#include "ftle/error.hpp"
#include "ftle/parallel.hpp"

namespace ftle {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Flowmap gradient d(phi_i)/d(x_j). Entries outside dim x dim are zero.
struct Jacobian {
  int dim = 0;
  Matrix3 entries{};

  double operator()(int i, int j) const { return entries[i][j]; }
};

/// Symmetric dim x dim matrix stored in full.
class SymmetricTensor {
 public:
  /// Rejects matrices that are not exactly symmetric or not finite.
  SymmetricTensor(int dim, const Matrix3& m) : dim_(dim), m_{} {
    detail::check_dim(dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        if (!std::isfinite(m[i][j])) throw Error(Errc::invalid_argument, "tensor entries must be finite");
        if (m[i][j] != m[j][i]) throw Error(Errc::invalid_argument, "tensor is not symmetric");
        m_[i][j] = m[i][j];
      }
    }
  }

  /// Mirrors the upper triangle of m.
  static SymmetricTensor from_upper(int dim, const Matrix3& m) {
    Matrix3 s{};
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) s[i][j] = s[j][i] = m[i][j];
    }
    return SymmetricTensor(dim, s);
  }

  int dim() const noexcept { return dim_; }
  double operator()(int i, int j) const { return m_[i][j]; }
  const Matrix3& entries() const noexcept { return m_; }

 private:
  int dim_;
  Matrix3 m_;
};

/// Data-parallel execution: the index space is cut into contiguous chunks of
/// `chunk` points, distributed over `workers` concurrent workers.
struct DataParallel {
  std::size_t workers = 1;
  std::size_t chunk = 4096;
  friend bool operator==(const DataParallel&, const DataParallel&) = default;
};

/// One sequential loop over all points.
struct SinglePass {
  friend bool operator==(const SinglePass&, const SinglePass&) = default;
};

using ExecutionStrategy = std::variant<DataParallel, SinglePass>;

inline void validate_strategy(const ExecutionStrategy& s) {
  if (const auto* dp = std::get_if<DataParallel>(&s)) {
    if (dp->workers < 1) throw Error(Errc::invalid_argument, "data-parallel workers must be >= 1");
    if (dp->chunk < 1) throw Error(Errc::invalid_argument, "data-parallel chunk must be >= 1");
  }
}

inline std::string strategy_name(const ExecutionStrategy& s) {
  return std::holds_alternative<SinglePass>(s) ? "single-pass" : "data-parallel";
}

inline std::string strategy_label(const ExecutionStrategy& s) {
  if (const auto* dp = std::get_if<DataParallel>(&s)) {
    return "data-parallel/w" + std::to_string(dp->workers) + "/c" + std::to_string(dp->chunk);
  }
  return "single-pass";
}

inline constexpr double kDegeneracyFloor = 1e-30;

namespace detail {

template <int D>
using Mat = std::array<std::array<double, D>, D>;

template <int D>
struct StencilView {
  const double* coords;
  const std::int64_t* neighbors;
  const double* phi;
};

// Fills J for point p. Returns -1 on success, otherwise the first axis that
// has neither a forward nor a backward neighbor.
template <int D>
inline int gradient_at(const StencilView<D>& v, std::size_t p, Mat<D>& J) {
  const std::int64_t self = static_cast<std::int64_t>(p);
  for (int j = 0; j < D; ++j) {
    const std::int64_t f = v.neighbors[(p * D + j) * 2];
    const std::int64_t b = v.neighbors[(p * D + j) * 2 + 1];
    std::int64_t hi = f;
    std::int64_t lo = b;
    if (f == kNoNeighbor && b == kNoNeighbor) return j;
    if (f == kNoNeighbor) hi = self;
    if (b == kNoNeighbor) lo = self;
    const double dx = v.coords[hi * D + j] - v.coords[lo * D + j];
    for (int i = 0; i < D; ++i) {
      J[i][j] = (v.phi[hi * D + i] - v.phi[lo * D + i]) / dx;
    }
  }
  return -1;
}

// J^T J: upper triangle computed, lower mirrored.
template <int D>
inline Mat<D> cauchy_green(const Mat<D>& J) {
  Mat<D> C{};
  for (int i = 0; i < D; ++i) {
    for (int j = i; j < D; ++j) {
      double s = 0.0;
      for (int k = 0; k < D; ++k) s += J[k][i] * J[k][j];
      C[i][j] = s;
      C[j][i] = s;
    }
  }
  return C;
}

inline double max_eig2(double a, double b, double c) {
  const double half_diff = 0.5 * (a - c);
  return 0.5 * (a + c) + std::sqrt(half_diff * half_diff + b * b);
}

// Trigonometric solution of the characteristic cubic of the deviatoric part.
inline double max_eig3(const Mat<3>& S) {
  const double p1 = S[0][1] * S[0][1] + S[0][2] * S[0][2] + S[1][2] * S[1][2];
  if (p1 == 0.0) return std::max({S[0][0], S[1][1], S[2][2]});

  const double q = (S[0][0] + S[1][1] + S[2][2]) / 3.0;
  const double d0 = S[0][0] - q;
  const double d1 = S[1][1] - q;
  const double d2 = S[2][2] - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  if (p <= 1e-15 * std::abs(q)) return q;  // nearly scalar

  const double inv = 1.0 / p;
  const double b00 = d0 * inv, b11 = d1 * inv, b22 = d2 * inv;
  const double b01 = S[0][1] * inv, b02 = S[0][2] * inv, b12 = S[1][2] * inv;
  const double det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
  const double r = std::clamp(0.5 * det, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi);
}

template <int D>
inline double max_eig(const Mat<D>& S) {
  if constexpr (D == 2) {
    return max_eig2(S[0][0], S[0][1], S[1][1]);
  } else {
    return max_eig3(S);
  }
}

inline double ftle_value(double lambda_max, double abs_two_T) {
  if (!(lambda_max >= kDegeneracyFloor)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(lambda_max) / abs_two_T;
}

template <int D>
inline Mat<D> to_mat(const Matrix3& m) {
  Mat<D> r{};
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r[i][j] = m[i][j];
  return r;
}

// Per-point pipeline over [begin, end). A point with a degenerate stencil
// gets NaN and lowers `first_bad` to its index.
template <int D>
inline void evaluate_range(const StencilView<D>& v, double abs_two_T, std::size_t begin, std::size_t end,
                           double* out, std::atomic<std::size_t>& first_bad) {
  Mat<D> J;
  for (std::size_t p = begin; p < end; ++p) {
    if (gradient_at<D>(v, p, J) >= 0) {
      out[p] = std::numeric_limits<double>::quiet_NaN();
      std::size_t cur = first_bad.load(std::memory_order_relaxed);
      while (p < cur && !first_bad.compare_exchange_weak(cur, p, std::memory_order_relaxed)) {
      }
      continue;
    }
    out[p] = ftle_value(max_eig<D>(cauchy_green<D>(J)), abs_two_T);
  }
}

}  // namespace detail

inline Jacobian flowmap_gradient(const FlowmapField& field, const MeshTopology& mesh, std::size_t point) {
  if (point >= mesh.npoints()) {
    throw Error(Errc::invalid_argument, "point " + std::to_string(point) + " out of range");
  }
  if (field.dim != mesh.dim() || field.npoints != mesh.npoints() ||
      field.values.size() != field.npoints * static_cast<std::size_t>(field.dim)) {
    throw Error(Errc::dim_mismatch, "flowmap does not match mesh");
  }
  Jacobian jac;
  jac.dim = mesh.dim();
  auto run = [&]<int D>() {
    detail::StencilView<D> v{mesh.coords().data(), mesh.neighbor_table().data(), field.values.data()};
    detail::Mat<D> J{};
    const int bad_axis = detail::gradient_at<D>(v, point, J);
    if (bad_axis >= 0) {
      throw Error(Errc::degenerate_stencil, "point " + std::to_string(point) + " has no neighbor along axis " +
                                                std::to_string(bad_axis));
    }
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) jac.entries[i][j] = J[i][j];
  };
  if (jac.dim == 2) run.template operator()<2>();
  else run.template operator()<3>();
  return jac;
}

inline SymmetricTensor cauchy_green(const Jacobian& J) {
  detail::check_dim(J.dim);
  for (int i = 0; i < J.dim; ++i)
    for (int j = 0; j < J.dim; ++j)
      if (!std::isfinite(J.entries[i][j])) throw Error(Errc::invalid_argument, "Jacobian entries must be finite");
  Matrix3 out{};
  if (J.dim == 2) {
    const auto C = detail::cauchy_green<2>(detail::to_mat<2>(J.entries));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out[i][j] = C[i][j];
  } else {
    const auto C = detail::cauchy_green<3>(detail::to_mat<3>(J.entries));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[i][j] = C[i][j];
  }
  return SymmetricTensor(J.dim, out);
}

inline double max_eigenvalue_sym2(const SymmetricTensor& S) {
  if (S.dim() != 2) throw Error(Errc::dim_mismatch, "max_eigenvalue_sym2 needs a 2x2 tensor");
  return detail::max_eig2(S(0, 0), S(0, 1), S(1, 1));
}

inline double max_eigenvalue_sym3(const SymmetricTensor& S) {
  if (S.dim() != 3) throw Error(Errc::dim_mismatch, "max_eigenvalue_sym3 needs a 3x3 tensor");
  return detail::max_eig3(detail::to_mat<3>(S.entries()));
}

inline double max_eigenvalue(const SymmetricTensor& S) {
  return S.dim() == 2 ? max_eigenvalue_sym2(S) : max_eigenvalue_sym3(S);
}

/// ln(lambda_max) / (2|T|), or NaN below the degeneracy floor.
inline double ftle_point(double lambda_max, double T) {
  if (T == 0.0) throw Error(Errc::zero_horizon, "T must be non-zero");
  return detail::ftle_value(lambda_max, 2.0 * std::abs(T));
}

inline bool is_degenerate(double ftle_value) { return std::isnan(ftle_value); }

/// Gradient, Cauchy-Green tensor, largest eigenvalue and exponent for every
/// point. Every point is evaluated by the same code in the same expression
/// order, so the result does not depend on the strategy or worker count.
inline FtleField compute_ftle_field(const FlowmapField& field, const MeshTopology& mesh,
                                    const ExecutionStrategy& strategy) {
  validate_strategy(strategy);
  if (field.dim != mesh.dim() || field.npoints != mesh.npoints() ||
      field.values.size() != field.npoints * static_cast<std::size_t>(field.dim)) {
    throw Error(Errc::dim_mismatch, "flowmap does not match mesh");
  }
  if (field.T == 0.0) throw Error(Errc::zero_horizon, "flowmap has T = 0");

  FtleField out;
  out.dim = field.dim;
  out.npoints = field.npoints;
  out.values.resize(field.npoints);

  const std::size_t n = field.npoints;
  const double abs_two_T = 2.0 * std::abs(field.T);
  std::atomic<std::size_t> first_bad{SIZE_MAX};
  double* dst = out.values.data();

  auto run = [&]<int D>() {
    const detail::StencilView<D> v{mesh.coords().data(), mesh.neighbor_table().data(), field.values.data()};
    if (const auto* dp = std::get_if<DataParallel>(&strategy)) {
      parallel_chunks(n, dp->workers, dp->chunk, [&](std::size_t begin, std::size_t end) {
        detail::evaluate_range<D>(v, abs_two_T, begin, end, dst, first_bad);
      });
    } else {
      detail::evaluate_range<D>(v, abs_two_T, 0, n, dst, first_bad);
    }
  };
  if (field.dim == 2) run.template operator()<2>();
  else run.template operator()<3>();

  if (const std::size_t bad = first_bad.load(); bad != SIZE_MAX) {
    flowmap_gradient(field, mesh, bad);  // throws the descriptive degenerate-stencil error
  }
  out.degenerate_count = static_cast<std::size_t>(
      std::count_if(out.values.begin(), out.values.end(), [](double x) { return std::isnan(x); }));
  return out;
}

}  // namespace ftle
