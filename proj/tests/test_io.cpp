#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <vector>

#include "ftle/io.hpp"
#include "ftle/kernels.hpp"
#include "oracles.hpp"
#include "random_inputs.hpp"

using namespace ftle;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ftle_test_io_" + name);
}

MeshTopology grid2(std::size_t nx, std::size_t ny) {
  const std::vector<std::size_t> d{nx, ny};
  const std::vector<double> h{1.0, 1.0}, o{0.0, 0.0};
  return make_structured_grid(d, h, o);
}

FlowmapField identity_field(const MeshTopology& m) {
  return FlowmapField{m.dim(), m.npoints(), {m.coords().begin(), m.coords().end()}, 0.0, 1.0};
}

Errc decode_error(const Bytes& b) {
  try {
    decode_flowmap(b);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected a decode error";
  return Errc::invalid_argument;
}

void put_u32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(Bytes& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(Bytes& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

}  // namespace

TEST(Flowmap, RoundTripIdentity3x3) {
  const auto m = grid2(3, 3);
  const auto f = identity_field(m);
  const auto path = temp_path("identity.ftlm");
  write_flowmap(path, f, m);
  const auto [f2, m2] = read_flowmap(path);
  EXPECT_EQ(f2.dim, f.dim);
  EXPECT_EQ(f2.npoints, f.npoints);
  EXPECT_EQ(std::memcmp(f2.values.data(), f.values.data(), f.values.size() * 8), 0);
  EXPECT_EQ(m2, m);
  std::filesystem::remove(path);
}

TEST(Flowmap, HeaderLayoutMatchesHandAssembly) {
  const std::vector<std::size_t> d{500, 400};
  const std::vector<double> h{0.004, 0.0025}, o{0.0, 0.0};
  const auto m = make_structured_grid(d, h, o);
  FlowmapField f{2, m.npoints(), {m.coords().begin(), m.coords().end()}, 0.0, 15.0};
  const auto bytes = encode_flowmap(f, m);

  Bytes expected{'F', 'T', 'L', 'M'};
  put_u32(expected, 1);
  put_u32(expected, 2);
  put_u64(expected, 200000);
  put_u32(expected, 0);
  put_u64(expected, 500);
  put_u64(expected, 400);
  put_f64(expected, 0.004);
  put_f64(expected, 0.0025);
  put_f64(expected, 0.0);
  put_f64(expected, 0.0);
  put_f64(expected, 0.0);
  put_f64(expected, 15.0);
  ASSERT_EQ(expected.size(), 88u);
  ASSERT_EQ(bytes.size(), 88u + 200000u * 2 * 8);
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), bytes.begin()));

  std::uint64_t npoints = 0;
  for (int i = 0; i < 8; ++i) npoints |= static_cast<std::uint64_t>(bytes[12 + i]) << (8 * i);
  EXPECT_EQ(npoints, 200000u);
}

TEST(Flowmap, DistinctErrors) {
  const auto m = grid2(3, 3);
  const auto good = encode_flowmap(identity_field(m), m);

  auto bad = good;
  std::memcpy(bad.data(), "XXXX", 4);
  EXPECT_EQ(decode_error(bad), Errc::bad_magic);

  bad = good;
  bad[4] = 2;
  EXPECT_EQ(decode_error(bad), Errc::unsupported_version);

  bad = good;
  bad[8] = 4;
  EXPECT_EQ(decode_error(bad), Errc::dim_mismatch);

  bad = good;
  bad[12] = 10;  // npoints no longer matches 3x3
  EXPECT_EQ(decode_error(bad), Errc::dim_mismatch);

  bad.assign(good.begin(), good.end() - 1);
  EXPECT_EQ(decode_error(bad), Errc::truncated);

  bad = good;
  bad.push_back(0);
  EXPECT_EQ(decode_error(bad), Errc::trailing_data);

  EXPECT_EQ(decode_error(Bytes{}), Errc::truncated);
}

TEST(Flowmap, RandomizedRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto [f, m] = testing_inputs::random_flowmap(rng);
    const auto bytes = encode_flowmap(f, m);
    const auto [f2, m2] = decode_flowmap(bytes);
    EXPECT_TRUE(testing_inputs::bit_equal(f, f2));
    EXPECT_EQ(m2, m);
    EXPECT_EQ(encode_flowmap(f2, m2), bytes);
  }
}

TEST(Flowmap, FuzzedInputsYieldStructuredErrors) {
  std::mt19937_64 rng(2);
  std::size_t errors = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto bytes = testing_inputs::fuzz_bytes(rng, i);
    try {
      decode_flowmap(bytes);
    } catch (const Error&) {
      ++errors;
    }
  }
  EXPECT_GT(errors, 0u);
}

TEST(Flowmap, HugeStructuredHeaderDoesNotAllocate) {
  Bytes b{'F', 'T', 'L', 'M'};
  put_u32(b, 1);
  put_u32(b, 3);
  put_u64(b, 1000000ULL * 1000000ULL * 1000ULL);
  put_u32(b, 0);
  put_u64(b, 1000000);
  put_u64(b, 1000000);
  put_u64(b, 1000);
  for (int i = 0; i < 6; ++i) put_f64(b, 1.0);
  put_f64(b, 0.0);
  put_f64(b, 1.0);
  EXPECT_EQ(decode_error(b), Errc::truncated);
}

TEST(FtleCsv, IdentityFieldIsAllZeros) {
  const auto m = grid2(3, 3);
  const auto r = compute_ftle_field(identity_field(m), m, SinglePass{});
  const auto text = format_ftle_csv(r, m);
  std::string header;
  const auto rows = oracle::parse_numeric_csv(text, &header);
  EXPECT_EQ(header, "x,y,ftle");
  ASSERT_EQ(rows.size(), 9u);
  std::size_t line = 0;
  std::istringstream in(text);
  std::string s;
  std::getline(in, s);
  while (std::getline(in, s)) {
    EXPECT_EQ(s.substr(s.rfind(',') + 1), "0") << "row " << line++;
  }
}

TEST(FtleCsv, DegeneratePointIsNan) {
  const auto m = grid2(3, 3);
  FtleField f{2, 9, std::vector<double>(9, 0.5), 1};
  f.values[4] = std::numeric_limits<double>::quiet_NaN();
  const auto text = format_ftle_csv(f, m);
  EXPECT_NE(text.find("\n1,1,nan\n"), std::string::npos);
  const auto path = temp_path("nan.csv");
  write_ftle_csv(path, f, m);
  EXPECT_TRUE(std::filesystem::exists(path));
  std::filesystem::remove(path);
}

TEST(FtleCsv, ReparseIsLossless) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  const std::vector<std::size_t> d{4, 3, 5};
  const std::vector<double> h{0.1, 1.0 / 3.0, std::numbers::pi}, o{-0.7, 1e-9, 12345.678};
  const auto m = make_structured_grid(d, h, o);
  FtleField f{3, m.npoints(), {}, 0};
  for (std::size_t p = 0; p < m.npoints(); ++p) f.values.push_back(u(rng) * std::pow(10.0, static_cast<int>(p % 9) - 4));
  std::string header;
  const auto rows = oracle::parse_numeric_csv(format_ftle_csv(f, m), &header);
  EXPECT_EQ(header, "x,y,z,ftle");
  ASSERT_EQ(rows.size(), m.npoints());
  for (std::size_t p = 0; p < m.npoints(); ++p) {
    ASSERT_EQ(rows[p].size(), 4u);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(rows[p][a], m.coord(p, a));
    EXPECT_EQ(rows[p][3], f.values[p]);
  }
}

TEST(FtleCsv, UnwritablePath) {
  const auto m = grid2(3, 3);
  FtleField f{2, 9, std::vector<double>(9, 0.0), 0};
  try {
    write_ftle_csv("/nonexistent-dir/x.csv", f, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

TEST(NeighborTable, StructuredExportReadsBackIdentical) {
  const auto m = grid2(3, 3);
  const auto path = temp_path("nb3x3.ftlm");
  write_neighbor_table(path, m);
  const auto u = read_neighbor_table(path, true);
  EXPECT_FALSE(u.is_structured());
  EXPECT_TRUE(std::equal(u.neighbor_table().begin(), u.neighbor_table().end(), m.neighbor_table().begin(),
                         m.neighbor_table().end()));
  EXPECT_TRUE(std::equal(u.coords().begin(), u.coords().end(), m.coords().begin(), m.coords().end()));
  std::filesystem::remove(path);
}

TEST(NeighborTable, OutOfRangeIndexRejected) {
  auto bytes = encode_neighbor_table(grid2(3, 3));
  // first neighbor entry sits after the 40-byte header and 9*2 coordinates
  const std::size_t at = 40 + 9 * 2 * 8;
  for (int i = 0; i < 8; ++i) bytes[at + i] = static_cast<unsigned char>(std::uint64_t{9} >> (8 * i));
  try {
    decode_neighbor_table(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::out_of_range_index);
  }
}

TEST(NeighborTable, AsymmetricPairRejectedWhenRequired) {
  const auto m = grid2(4, 3);
  std::vector<std::int64_t> nb(m.neighbor_table().begin(), m.neighbor_table().end());
  nb[(4 * 2 + 0) * 2 + 1] = 0;
  const auto u = make_unstructured_topology(2, {m.coords().begin(), m.coords().end()}, nb);
  const auto bytes = encode_neighbor_table(u);
  EXPECT_NO_THROW(decode_neighbor_table(bytes, false));
  try {
    decode_neighbor_table(bytes, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::asymmetric_neighbors);
  }
}

TEST(NeighborTable, PerturbedGridGradientsMatchInMemory) {
  std::mt19937_64 rng(4);
  const auto mem = testing_inputs::perturbed_grid(rng, {10, 10, 10}, 0.3);
  ASSERT_EQ(mem.npoints(), 1000u);
  const auto path = temp_path("perturbed.ftlm");
  write_neighbor_table(path, mem);
  const auto disk = read_neighbor_table(path, true);
  std::filesystem::remove(path);

  std::uniform_real_distribution<double> u(-1, 1);
  FlowmapField f{3, 1000, {}, 0.0, 2.0};
  for (std::size_t i = 0; i < 3000; ++i) f.values.push_back(mem.coords()[i] + 0.1 * u(rng));
  for (std::size_t p = 0; p < 1000; ++p) {
    const auto a = flowmap_gradient(f, mem, p);
    const auto b = flowmap_gradient(f, disk, p);
    EXPECT_EQ(std::memcmp(&a.entries, &b.entries, sizeof a.entries), 0) << "point " << p;
  }
}

TEST(FtleFieldFile, RoundTrip) {
  FtleField f{3, 5, {0.0, 1.5, std::numeric_limits<double>::quiet_NaN(), -2.25, 1e-300}, 1};
  const auto g = decode_ftle_field(encode_ftle_field(f));
  EXPECT_EQ(g.dim, 3);
  EXPECT_EQ(g.npoints, 5u);
  EXPECT_EQ(g.degenerate_count, 1u);
  EXPECT_EQ(std::memcmp(f.values.data(), g.values.data(), 5 * 8), 0);
  auto bad = encode_ftle_field(f);
  bad[0] = 'X';
  EXPECT_THROW(decode_ftle_field(bad), Error);
}
