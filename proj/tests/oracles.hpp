#pragma once

// Reference computations used only by tests. None of these call into the
// kernel code paths they are compared against.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline double det2(const Mat3& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline double shifted_det(const Mat3& s, int dim, double lambda) {
  Mat3 m = s;
  for (int i = 0; i < dim; ++i) m[i][i] -= lambda;
  return dim == 2 ? det2(m) : det3(m);
}

inline double frobenius(const Mat3& s, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) acc += s[i][j] * s[i][j];
  return std::sqrt(acc);
}

// Largest root of det(lambda*I - S) for symmetric 3x3 S by bisection. The
// largest root lies above the larger critical point of the characteristic
// cubic and below trace(S) + |S|_F, where the monic polynomial is >= 0.
inline double largest_eigenvalue_bisection(const Mat3& s) {
  auto charpoly = [&](double l) { return -shifted_det(s, 3, l); };  // det(lI - S)
  const double c2 = -(s[0][0] + s[1][1] + s[2][2]);
  const double c1 = s[0][0] * s[1][1] + s[0][0] * s[2][2] + s[1][1] * s[2][2] - s[0][1] * s[0][1] -
                    s[0][2] * s[0][2] - s[1][2] * s[1][2];
  // p'(l) = 3l^2 + 2 c2 l + c1
  const double disc = 4.0 * c2 * c2 - 12.0 * c1;
  double lo = disc > 0 ? (-2.0 * c2 + std::sqrt(disc)) / 6.0 : -frobenius(s, 3);
  double hi = std::abs(c2) + frobenius(s, 3) + 1.0;
  lo = std::max(lo, -frobenius(s, 3) - 1.0);
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (charpoly(mid) >= 0.0) hi = mid;
    else lo = mid;
  }
  return lo + (hi - lo) / 2.0;
}

// Symmetric positive-definite matrix A^T A + shift*I with uniform entries.
inline Mat3 random_spd(std::mt19937_64& rng, int dim, double scale = 1.0, double shift = 1e-3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 a{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a[i][j] = scale * u(rng);
  Mat3 s{};
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double acc = 0.0;
      for (int k = 0; k < dim; ++k) acc += a[k][i] * a[k][j];
      s[i][j] = s[j][i] = acc;
    }
  for (int i = 0; i < dim; ++i) s[i][i] += shift * scale * scale;
  return s;
}

// Central/one-sided difference gradient on a row-major structured grid,
// computed from grid indices instead of a neighbor table.
inline Mat3 grid_gradient(const std::vector<double>& phi, const std::vector<std::size_t>& dims,
                          const std::vector<double>& spacing, const std::vector<double>& origin, std::size_t point) {
  const int dim = static_cast<int>(dims.size());
  std::vector<std::size_t> idx(dim);
  std::size_t rest = point;
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = rest % dims[a];
    rest /= dims[a];
  }
  auto flat = [&](std::vector<std::size_t> i) {
    std::size_t p = 0;
    for (int a = 0; a < dim; ++a) p = p * dims[a] + i[a];
    return p;
  };
  Mat3 J{};
  for (int j = 0; j < dim; ++j) {
    auto hi = idx;
    auto lo = idx;
    if (idx[j] + 1 < dims[j]) hi[j] += 1;
    if (idx[j] > 0) lo[j] -= 1;
    const double xh = origin[j] + static_cast<double>(hi[j]) * spacing[j];
    const double xl = origin[j] + static_cast<double>(lo[j]) * spacing[j];
    for (int i = 0; i < dim; ++i) {
      J[i][j] = (phi[flat(hi) * dim + i] - phi[flat(lo) * dim + i]) / (xh - xl);
    }
  }
  return J;
}

// Minimal CSV reader: header plus rows of numbers ("nan" allowed).
inline std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, std::string* header) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace oracle
