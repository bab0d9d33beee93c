#pragma once

// File formats
// ------------
// .ftlm (flowmap + mesh), little-endian, version 1:
//   char[4]  magic "FTLM"
//   u32      version
//   u32      dim (2 or 3)
//   u64      npoints
//   u32      kind (0 = structured, 1 = unstructured)
//   structured only:  u64 dims[dim], f64 spacing[dim], f64 origin[dim]
//   f64      t0
//   f64      T
//   unstructured only: f64 coords[npoints*dim],
//                      i64 neighbors[npoints*dim*2]  (forward, backward; -1 = absent)
//   f64      values[npoints*dim]                    (omitted in neighbor-table files)
//
// .ftlf (FTLE field), little-endian, version 1:
//   char[4] "FTLF", u32 version, u32 dim, u64 npoints, u64 degenerate_count,
//   f64 values[npoints]

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ftle/core.hpp"
#include "ftle/error.hpp"

namespace ftle {

inline constexpr std::array<char, 4> kFlowmapMagic{'F', 'T', 'L', 'M'};
inline constexpr std::array<char, 4> kFtleMagic{'F', 'T', 'L', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class MeshKind : std::uint32_t { structured = 0, unstructured = 1 };

using Bytes = std::vector<unsigned char>;

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void raw(std::span<const char> s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (n > remaining()) {
      throw Error(Errc::truncated, std::string("need ") + std::to_string(n) + " bytes for " + what + ", " +
                                       std::to_string(remaining()) + " left");
    }
  }
  // Checks that `count` items of `width` bytes are available before any
  // allocation happens.
  void need_array(std::uint64_t count, std::size_t width, const char* what) const {
    if (count > remaining() / width) {
      throw Error(Errc::truncated, std::string(what) + " needs " + std::to_string(count) + " items, " +
                                       std::to_string(remaining()) + " bytes left");
    }
  }

  std::array<char, 4> magic() {
    need(4, "magic");
    std::array<char, 4> m{};
    std::memcpy(m.data(), in_.data() + pos_, 4);
    pos_ += 4;
    return m;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  std::int64_t i64(const char* what) { return static_cast<std::int64_t>(get(8, what)); }
  double f64(const char* what) { return std::bit_cast<double>(get(8, what)); }

 private:
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const unsigned char> in_;
  std::size_t pos_ = 0;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io, "read failed for " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

struct Header {
  int dim = 0;
  std::uint64_t npoints = 0;
  MeshKind kind = MeshKind::structured;
  StructuredGrid grid;
  double t0 = 0.0;
  double T = 0.0;
};

inline void encode_header(ByteWriter& w, const MeshTopology& mesh, MeshKind kind, double t0, double T) {
  w.raw(kFlowmapMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(mesh.dim()));
  w.u64(mesh.npoints());
  w.u32(static_cast<std::uint32_t>(kind));
  if (kind == MeshKind::structured) {
    const auto& g = *mesh.grid();
    for (int a = 0; a < mesh.dim(); ++a) w.u64(g.dims[a]);
    for (int a = 0; a < mesh.dim(); ++a) w.f64(g.spacing[a]);
    for (int a = 0; a < mesh.dim(); ++a) w.f64(g.origin[a]);
  }
  w.f64(t0);
  w.f64(T);
  if (kind == MeshKind::unstructured) {
    for (double c : mesh.coords()) w.f64(c);
    for (std::int64_t q : mesh.neighbor_table()) w.i64(q);
  }
}

inline Header decode_header(ByteReader& r) {
  if (r.magic() != kFlowmapMagic) throw Error(Errc::bad_magic, "not an FTLM file");
  if (const auto v = r.u32("version"); v != kFormatVersion) {
    throw Error(Errc::unsupported_version, "version " + std::to_string(v));
  }
  Header h;
  const auto dim = r.u32("dim");
  if (dim != 2 && dim != 3) throw Error(Errc::dim_mismatch, "dim field is " + std::to_string(dim));
  h.dim = static_cast<int>(dim);
  h.npoints = r.u64("npoints");
  if (h.npoints == 0) throw Error(Errc::invalid_header, "npoints is 0");
  const auto kind = r.u32("kind");
  if (kind > 1) throw Error(Errc::invalid_header, "unknown mesh kind " + std::to_string(kind));
  h.kind = static_cast<MeshKind>(kind);
  if (h.kind == MeshKind::structured) {
    std::uint64_t product = 1;
    for (int a = 0; a < h.dim; ++a) {
      const auto n = r.u64("dims");
      if (n < 3) throw Error(Errc::invalid_header, "structured axis with fewer than 3 points");
      if (product > UINT64_MAX / n) throw Error(Errc::invalid_header, "grid point count overflows");
      product *= n;
      h.grid.dims[a] = static_cast<std::size_t>(n);
    }
    if (product != h.npoints) {
      throw Error(Errc::dim_mismatch, "grid dims multiply to " + std::to_string(product) + ", npoints is " +
                                          std::to_string(h.npoints));
    }
    for (int a = 0; a < h.dim; ++a) h.grid.spacing[a] = r.f64("spacing");
    for (int a = 0; a < h.dim; ++a) h.grid.origin[a] = r.f64("origin");
    for (int a = 0; a < h.dim; ++a) {
      if (!(h.grid.spacing[a] > 0.0) || !std::isfinite(h.grid.spacing[a]) || !std::isfinite(h.grid.origin[a])) {
        throw Error(Errc::invalid_header, "bad spacing/origin on axis " + std::to_string(a));
      }
    }
  }
  h.t0 = r.f64("t0");
  h.T = r.f64("T");
  return h;
}

inline MeshTopology decode_topology(ByteReader& r, const Header& h, bool require_symmetry) {
  if (h.kind == MeshKind::structured) {
    // the value payload must be present before the grid is materialized
    const std::uint64_t nvalues = h.npoints * static_cast<std::uint64_t>(h.dim);
    if (nvalues / h.dim != h.npoints) throw Error(Errc::truncated, "npoints too large");
    r.need_array(nvalues, 8, "flowmap values");
    try {
      return make_structured_grid(h.grid, h.dim);
    } catch (const Error& e) {
      throw Error(Errc::invalid_header, e.what());
    }
  }
  const std::uint64_t ncoords = h.npoints * static_cast<std::uint64_t>(h.dim);
  if (ncoords / h.dim != h.npoints) throw Error(Errc::truncated, "npoints too large");
  r.need_array(ncoords, 8, "coords");
  std::vector<double> coords(ncoords);
  for (auto& c : coords) c = r.f64("coords");
  r.need_array(ncoords, 16, "neighbor table");
  std::vector<std::int64_t> nb(ncoords * 2);
  for (auto& q : nb) q = r.i64("neighbors");
  return make_unstructured_topology(h.dim, std::move(coords), std::move(nb), require_symmetry);
}

}  // namespace detail

inline Bytes encode_flowmap(const FlowmapField& field, const MeshTopology& mesh) {
  if (field.dim != mesh.dim() || field.npoints != mesh.npoints() ||
      field.values.size() != field.npoints * static_cast<std::size_t>(field.dim)) {
    throw Error(Errc::dim_mismatch, "flowmap does not match mesh");
  }
  Bytes out;
  detail::ByteWriter w(out);
  detail::encode_header(w, mesh, mesh.is_structured() ? MeshKind::structured : MeshKind::unstructured, field.t0,
                        field.T);
  for (double v : field.values) w.f64(v);
  return out;
}

inline std::pair<FlowmapField, MeshTopology> decode_flowmap(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  const auto h = detail::decode_header(r);
  auto mesh = detail::decode_topology(r, h, false);
  FlowmapField field;
  field.dim = h.dim;
  field.npoints = static_cast<std::size_t>(h.npoints);
  field.t0 = h.t0;
  field.T = h.T;
  const std::uint64_t nvalues = h.npoints * static_cast<std::uint64_t>(h.dim);
  if (nvalues / h.dim != h.npoints) throw Error(Errc::truncated, "npoints too large");
  r.need_array(nvalues, 8, "flowmap values");
  field.values.resize(nvalues);
  for (auto& v : field.values) v = r.f64("values");
  if (r.remaining() != 0) throw Error(Errc::trailing_data, std::to_string(r.remaining()) + " unread bytes");
  return {std::move(field), std::move(mesh)};
}

inline void write_flowmap(const std::filesystem::path& path, const FlowmapField& field, const MeshTopology& mesh) {
  const auto bytes = encode_flowmap(field, mesh);
  detail::write_file(path, bytes);
}

inline std::pair<FlowmapField, MeshTopology> read_flowmap(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_flowmap(bytes);
}

/// Topology-only file: the .ftlm unstructured layout without flowmap values
/// (t0 = T = 0).
inline Bytes encode_neighbor_table(const MeshTopology& mesh) {
  Bytes out;
  detail::ByteWriter w(out);
  detail::encode_header(w, mesh, MeshKind::unstructured, 0.0, 0.0);
  return out;
}

/// Reads the topology part of an .ftlm file; flowmap values, if present,
/// are ignored. Symmetry is enforced only when `require_symmetry` is set.
inline MeshTopology decode_neighbor_table(std::span<const unsigned char> bytes, bool require_symmetry = false) {
  detail::ByteReader r(bytes);
  const auto h = detail::decode_header(r);
  return detail::decode_topology(r, h, require_symmetry);
}

inline void write_neighbor_table(const std::filesystem::path& path, const MeshTopology& mesh) {
  detail::write_file(path, encode_neighbor_table(mesh));
}

inline MeshTopology read_neighbor_table(const std::filesystem::path& path, bool require_symmetry = false) {
  return decode_neighbor_table(detail::read_file(path), require_symmetry);
}

inline Bytes encode_ftle_field(const FtleField& field) {
  if (field.values.size() != field.npoints) throw Error(Errc::dim_mismatch, "values length != npoints");
  Bytes out;
  detail::ByteWriter w(out);
  w.raw(kFtleMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(field.dim));
  w.u64(field.npoints);
  w.u64(field.degenerate_count);
  for (double v : field.values) w.f64(v);
  return out;
}

inline FtleField decode_ftle_field(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  if (r.magic() != kFtleMagic) throw Error(Errc::bad_magic, "not an FTLF file");
  if (const auto v = r.u32("version"); v != kFormatVersion) {
    throw Error(Errc::unsupported_version, "version " + std::to_string(v));
  }
  FtleField f;
  const auto dim = r.u32("dim");
  if (dim != 2 && dim != 3) throw Error(Errc::dim_mismatch, "dim field is " + std::to_string(dim));
  f.dim = static_cast<int>(dim);
  const auto n = r.u64("npoints");
  f.degenerate_count = static_cast<std::size_t>(r.u64("degenerate_count"));
  r.need_array(n, 8, "FTLE values");
  f.npoints = static_cast<std::size_t>(n);
  f.values.resize(f.npoints);
  for (auto& v : f.values) v = r.f64("values");
  if (r.remaining() != 0) throw Error(Errc::trailing_data, std::to_string(r.remaining()) + " unread bytes");
  return f;
}

inline void write_ftle_field(const std::filesystem::path& path, const FtleField& field) {
  detail::write_file(path, encode_ftle_field(field));
}

inline FtleField read_ftle_field(const std::filesystem::path& path) {
  return decode_ftle_field(detail::read_file(path));
}

/// Shortest text of at most 17 significant digits; "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// CSV with header `x,y[,z],ftle`, one row per point in canonical order.
inline std::string format_ftle_csv(const FtleField& field, const MeshTopology& mesh) {
  if (field.npoints != mesh.npoints() || field.values.size() != field.npoints) {
    throw Error(Errc::dim_mismatch, "FTLE field does not match mesh");
  }
  const int dim = mesh.dim();
  std::string out = dim == 2 ? "x,y,ftle\n" : "x,y,z,ftle\n";
  out.reserve(out.size() + field.npoints * 24 * (dim + 1));
  for (std::size_t p = 0; p < field.npoints; ++p) {
    for (int a = 0; a < dim; ++a) {
      out += format_double(mesh.coord(p, a));
      out += ',';
    }
    out += format_double(field.values[p]);
    out += '\n';
  }
  return out;
}

inline void write_ftle_csv(const std::filesystem::path& path, const FtleField& field, const MeshTopology& mesh) {
  detail::write_text_file(path, format_ftle_csv(field, mesh));
}

}  // namespace ftle
