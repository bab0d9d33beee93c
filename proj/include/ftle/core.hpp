#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ftle/error.hpp"

namespace ftle {

inline constexpr std::int64_t kNoNeighbor = -1;

enum class Direction : int { forward = 0, backward = 1 };

/// Axis-aligned regular grid description. Only the first `dim` entries of
/// each array are meaningful.
struct StructuredGrid {
  std::array<std::size_t, 3> dims{};
  std::array<double, 3> spacing{};
  std::array<double, 3> origin{};

  friend bool operator==(const StructuredGrid&, const StructuredGrid&) = default;
};

/// Point coordinates plus, for every point and axis, a forward and a backward
/// neighbor index (kNoNeighbor at boundaries). Immutable once built; use
/// make_structured_grid or make_unstructured_topology.
///
/// Storage layout:
///   coords[p * dim + a]
///   neighbors[(p * dim + a) * 2 + direction]
class MeshTopology {
 public:
  int dim() const noexcept { return dim_; }
  std::size_t npoints() const noexcept { return npoints_; }

  bool is_structured() const noexcept { return grid_.has_value(); }
  const std::optional<StructuredGrid>& grid() const noexcept { return grid_; }

  std::span<const double> coords() const noexcept { return coords_; }
  std::span<const std::int64_t> neighbor_table() const noexcept { return neighbors_; }

  double coord(std::size_t p, int axis) const { return coords_[p * dim_ + axis]; }

  std::int64_t neighbor(std::size_t p, int axis, Direction d) const {
    return neighbors_[(p * dim_ + axis) * 2 + static_cast<int>(d)];
  }
  std::int64_t forward(std::size_t p, int axis) const { return neighbor(p, axis, Direction::forward); }
  std::int64_t backward(std::size_t p, int axis) const { return neighbor(p, axis, Direction::backward); }

  /// Structured grids only: (i, j[, k]) of point p, last axis fastest.
  std::array<std::size_t, 3> grid_index(std::size_t p) const {
    require_structured();
    std::array<std::size_t, 3> idx{};
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[a] = p % grid_->dims[a];
      p /= grid_->dims[a];
    }
    return idx;
  }

  std::size_t point_index(const std::array<std::size_t, 3>& idx) const {
    require_structured();
    std::size_t p = 0;
    for (int a = 0; a < dim_; ++a) {
      if (idx[a] >= grid_->dims[a]) throw Error(Errc::invalid_argument, "grid index out of range");
      p = p * grid_->dims[a] + idx[a];
    }
    return p;
  }

  friend bool operator==(const MeshTopology&, const MeshTopology&) = default;

 private:
  MeshTopology() = default;

  void require_structured() const {
    if (!grid_) throw Error(Errc::invalid_argument, "topology is not a structured grid");
  }

  int dim_ = 0;
  std::size_t npoints_ = 0;
  std::vector<double> coords_;
  std::vector<std::int64_t> neighbors_;
  std::optional<StructuredGrid> grid_;

  friend MeshTopology make_structured_grid(std::span<const std::size_t>, std::span<const double>,
                                           std::span<const double>);
  friend MeshTopology make_unstructured_topology(int, std::vector<double>, std::vector<std::int64_t>,
                                                 bool);
};

/// Final particle positions for every seed point. Plain data: validity is
/// checked by validate_flowmap, not enforced on construction.
struct FlowmapField {
  int dim = 0;
  std::size_t npoints = 0;
  std::vector<double> values;  // values[p * dim + i]
  double t0 = 0.0;
  double T = 0.0;

  friend bool operator==(const FlowmapField&, const FlowmapField&) = default;
};

/// One exponent per point; NaN marks a degenerate point.
struct FtleField {
  int dim = 0;
  std::size_t npoints = 0;
  std::vector<double> values;
  std::size_t degenerate_count = 0;
};

namespace detail {

inline void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw Error(Errc::invalid_argument, "dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

// Multiplies with overflow detection; nullopt on overflow.
inline std::optional<std::size_t> checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > SIZE_MAX / a) return std::nullopt;
  return a * b;
}

}  // namespace detail

inline MeshTopology make_structured_grid(std::span<const std::size_t> dims,
                                         std::span<const double> spacing,
                                         std::span<const double> origin) {
  const int dim = static_cast<int>(dims.size());
  detail::check_dim(dim);
  if (spacing.size() != dims.size() || origin.size() != dims.size()) {
    throw Error(Errc::invalid_argument, "dims, spacing and origin must have the same length");
  }

  StructuredGrid g;
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) {
    if (dims[a] < 3) {
      throw Error(Errc::invalid_argument,
                  "axis " + std::to_string(a) + " needs at least 3 points, got " + std::to_string(dims[a]));
    }
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw Error(Errc::invalid_argument, "spacing along axis " + std::to_string(a) + " must be positive");
    }
    if (!std::isfinite(origin[a])) {
      throw Error(Errc::invalid_argument, "origin along axis " + std::to_string(a) + " must be finite");
    }
    auto next = detail::checked_mul(n, dims[a]);
    if (!next) throw Error(Errc::invalid_argument, "grid point count overflows");
    n = *next;
    g.dims[a] = dims[a];
    g.spacing[a] = spacing[a];
    g.origin[a] = origin[a];
  }

  MeshTopology m;
  m.dim_ = dim;
  m.npoints_ = n;
  m.grid_ = g;
  m.coords_.resize(n * dim);
  m.neighbors_.resize(n * dim * 2);

  std::array<std::size_t, 3> stride{1, 1, 1};
  for (int a = dim - 2; a >= 0; --a) stride[a] = stride[a + 1] * g.dims[a + 1];

  std::array<std::size_t, 3> idx{};
  for (std::size_t p = 0; p < n; ++p) {
    for (int a = 0; a < dim; ++a) {
      m.coords_[p * dim + a] = g.origin[a] + static_cast<double>(idx[a]) * g.spacing[a];
      auto* nb = &m.neighbors_[(p * dim + a) * 2];
      nb[0] = idx[a] + 1 < g.dims[a] ? static_cast<std::int64_t>(p + stride[a]) : kNoNeighbor;
      nb[1] = idx[a] > 0 ? static_cast<std::int64_t>(p - stride[a]) : kNoNeighbor;
    }
    // odometer increment, last axis fastest
    for (int a = dim - 1; a >= 0; --a) {
      if (++idx[a] < g.dims[a]) break;
      idx[a] = 0;
    }
  }
  return m;
}

inline MeshTopology make_structured_grid(const StructuredGrid& g, int dim) {
  detail::check_dim(dim);
  return make_structured_grid(std::span(g.dims.data(), dim), std::span(g.spacing.data(), dim),
                              std::span(g.origin.data(), dim));
}

/// Builds a topology from an explicit neighbor table and enforces the
/// topology invariants. Symmetry (forward(p,a) = q implies backward(q,a) = p)
/// is only checked when `require_symmetry` is set.
inline MeshTopology make_unstructured_topology(int dim, std::vector<double> coords,
                                               std::vector<std::int64_t> neighbors,
                                               bool require_symmetry = false) {
  detail::check_dim(dim);
  if (coords.empty() || coords.size() % dim != 0) {
    throw Error(Errc::invalid_topology, "coordinate array length must be a positive multiple of dim");
  }
  const std::size_t n = coords.size() / dim;
  if (neighbors.size() != n * dim * 2) {
    throw Error(Errc::invalid_topology, "neighbor table must hold 2 entries per point and axis");
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!std::isfinite(coords[i])) {
      throw Error(Errc::invalid_topology, "non-finite coordinate at point " + std::to_string(i / dim));
    }
  }
  const auto sn = static_cast<std::int64_t>(n);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const auto q = neighbors[i];
    if (q != kNoNeighbor && (q < 0 || q >= sn)) {
      throw Error(Errc::out_of_range_index, "point " + std::to_string(i / (2 * dim)) + " axis " +
                                                std::to_string((i / 2) % dim) + " references index " +
                                                std::to_string(q) + " (npoints " + std::to_string(n) + ")");
    }
  }

  auto at = [&](std::size_t p, int a, int d) { return neighbors[(p * dim + a) * 2 + d]; };
  auto x = [&](std::int64_t p, int a) { return coords[static_cast<std::size_t>(p) * dim + a]; };

  for (std::size_t p = 0; p < n; ++p) {
    for (int a = 0; a < dim; ++a) {
      const auto f = at(p, a, 0);
      const auto b = at(p, a, 1);
      const auto sp = static_cast<std::int64_t>(p);
      // every difference a gradient stencil might divide by must be positive
      bool ok = true;
      if (f != kNoNeighbor && b != kNoNeighbor) ok = x(f, a) - x(b, a) > 0.0;
      else if (f != kNoNeighbor) ok = x(f, a) - x(sp, a) > 0.0;
      else if (b != kNoNeighbor) ok = x(sp, a) - x(b, a) > 0.0;
      if (!ok) {
        throw Error(Errc::invalid_topology, "neighbors of point " + std::to_string(p) +
                                                " are not ordered along axis " + std::to_string(a));
      }
      if (require_symmetry) {
        if (f != kNoNeighbor && at(static_cast<std::size_t>(f), a, 1) != sp) {
          throw Error(Errc::asymmetric_neighbors, "forward(" + std::to_string(p) + ", " + std::to_string(a) +
                                                      ") = " + std::to_string(f) + " but backward(" +
                                                      std::to_string(f) + ", " + std::to_string(a) +
                                                      ") = " + std::to_string(at(f, a, 1)));
        }
        if (b != kNoNeighbor && at(static_cast<std::size_t>(b), a, 0) != sp) {
          throw Error(Errc::asymmetric_neighbors, "backward(" + std::to_string(p) + ", " + std::to_string(a) +
                                                      ") = " + std::to_string(b) + " but forward(" +
                                                      std::to_string(b) + ", " + std::to_string(a) +
                                                      ") = " + std::to_string(at(b, a, 0)));
        }
      }
    }
  }

  MeshTopology m;
  m.dim_ = dim;
  m.npoints_ = n;
  m.coords_ = std::move(coords);
  m.neighbors_ = std::move(neighbors);
  return m;
}

/// Same coordinates and neighbor relation, without the structured description.
inline MeshTopology to_unstructured(const MeshTopology& mesh) {
  auto c = mesh.coords();
  auto nb = mesh.neighbor_table();
  return make_unstructured_topology(mesh.dim(), {c.begin(), c.end()}, {nb.begin(), nb.end()});
}

struct FlowmapDiagnostics {
  bool ok = true;
  std::vector<std::string> violations;
};

inline FlowmapDiagnostics validate_flowmap(const FlowmapField& field, const MeshTopology& mesh) {
  FlowmapDiagnostics diag;
  auto fail = [&](std::string msg) {
    diag.ok = false;
    diag.violations.push_back(std::move(msg));
  };

  if (field.dim != mesh.dim()) {
    fail("dim mismatch: flowmap " + std::to_string(field.dim) + ", mesh " + std::to_string(mesh.dim()));
  }
  if (field.npoints != mesh.npoints()) {
    fail("npoints mismatch: flowmap " + std::to_string(field.npoints) + ", mesh " +
         std::to_string(mesh.npoints()));
  }
  if (field.dim > 0 && field.values.size() != field.npoints * static_cast<std::size_t>(field.dim)) {
    fail("values length " + std::to_string(field.values.size()) + " != npoints * dim");
  }
  if (field.T == 0.0) fail("zero integration horizon");
  if (!std::isfinite(field.T) || !std::isfinite(field.t0)) fail("non-finite time parameters");

  constexpr std::size_t kMaxListed = 64;
  std::size_t bad = 0;
  std::size_t last_point = SIZE_MAX;
  const std::size_t d = field.dim > 0 ? static_cast<std::size_t>(field.dim) : 1;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (std::isfinite(field.values[i])) continue;
    const std::size_t p = i / d;
    if (p == last_point) continue;
    last_point = p;
    if (++bad <= kMaxListed) fail("non-finite value at point " + std::to_string(p));
  }
  if (bad > kMaxListed) fail("... and " + std::to_string(bad - kMaxListed) + " more non-finite points");
  return diag;
}

}  // namespace ftle
