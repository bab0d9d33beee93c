#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ftle/cli.hpp"
#include "oracles.hpp"

using namespace ftle;

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run ftle_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ftle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::string slurp(const std::string& p) {
  const auto b = ftle::detail::read_file(p);
  return {b.begin(), b.end()};
}

}  // namespace

TEST_F(Cli, IdentityComputeReportsNoDegeneracies) {
  ASSERT_EQ(ftle_cli({"generate", "--flow", "identity", "--dims", "3x3", "--T", "1", "--dt", "0.5", "--out",
                      path("id.ftlm")})
                .code,
            0);
  const auto r = ftle_cli({"compute", "--input", path("id.ftlm"), "--strategy", "single-pass", "--out",
                           path("id.ftlf"), "--csv", path("id.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("strategy=single-pass\n"), std::string::npos);
  EXPECT_NE(r.out.find("degenerate_count=0\n"), std::string::npos);
  EXPECT_NE(r.out.find("kernel_time_ms="), std::string::npos);
  std::string header;
  const auto rows = oracle::parse_numeric_csv(slurp(path("id.csv")), &header);
  EXPECT_EQ(header, "x,y,ftle");
  ASSERT_EQ(rows.size(), 9u);
  for (const auto& row : rows) EXPECT_EQ(row.at(2), 0.0);
  const auto f = read_ftle_field(path("id.ftlf"));
  EXPECT_EQ(f.npoints, 9u);
}

TEST_F(Cli, StrategiesWriteIdenticalFiles) {
  ASSERT_EQ(ftle_cli({"generate", "--flow", "double-gyre", "--dims", "60x30", "--T", "-5", "--dt", "-0.1", "--out",
                      path("dg.ftlm")})
                .code,
            0);
  ASSERT_EQ(ftle_cli({"--quiet", "compute", "--input", path("dg.ftlm"), "--strategy", "single-pass", "--out",
                      path("sp.ftlf")})
                .code,
            0);
  const auto dp = ftle_cli({"compute", "--input", path("dg.ftlm"), "--strategy", "data-parallel", "--workers", "3",
                            "--chunk", "17", "--out", path("dp.ftlf")});
  ASSERT_EQ(dp.code, 0) << dp.err;
  EXPECT_NE(dp.out.find("strategy=data-parallel/w3/c17"), std::string::npos);
  EXPECT_EQ(ftle::detail::read_file(path("sp.ftlf")), ftle::detail::read_file(path("dp.ftlf")));
}

TEST_F(Cli, GenerateFlowVariants) {
  EXPECT_EQ(ftle_cli({"generate", "--flow", "abc", "--dims", "4x4x4", "--T", "0.5", "--dt", "0.1", "--out",
                      path("abc.ftlm")})
                .code,
            0);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "drift", "--dims", "3x4", "--velocity", "1,2", "--T", "1", "--dt", "0.25",
                      "--out", path("drift.ftlm")})
                .code,
            0);
  const auto [f, m] = read_flowmap(path("drift.ftlm"));
  EXPECT_NEAR(f.values[0], m.coord(0, 0) + 1.0, 1e-14);
  EXPECT_NEAR(f.values[1], m.coord(0, 1) + 2.0, 1e-14);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "double-gyre", "--dims", "5x5x3", "--A", "0.2", "--eps", "0", "--T", "1",
                      "--dt", "0.1", "--out", path("dg3.ftlm")})
                .code,
            0);
}

TEST_F(Cli, ReferenceReportPositions) {
  const auto r = ftle_cli({"report", "--reference", "table1"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto row_of = [&](const std::string& label) {
    const auto at = r.out.find("| " + label + " |");
    EXPECT_NE(at, std::string::npos) << label;
    std::vector<std::string> cells;
    std::stringstream line(r.out.substr(at, r.out.find('\n', at) - at));
    std::string cell;
    while (std::getline(line, cell, '|')) {
      if (cell.size() > 1) cells.push_back(cell.substr(1, cell.size() - 2));
    }
    return cells;
  };
  EXPECT_EQ(row_of("S-NR naïve").at(1), "11.1");
  EXPECT_EQ(row_of("S-NR naïve").at(6), "1364.9");
  EXPECT_EQ(row_of("O-NR naïve").at(1), "10.7");
  EXPECT_EQ(row_of("O-ST naïve").at(3), "20034.4");
  EXPECT_EQ(row_of("CPU 8 threads").at(6), "70.6");

  const auto csv = ftle_cli({"report", "--reference", "table1", "--format", "csv"});
  EXPECT_NE(csv.out.find("O-ST naïve,2085.7,4116.1,20034.4,9194.2,18455.6,92703.2\n"), std::string::npos);
}

TEST_F(Cli, BenchWritesRepetitionAndSummaryRows) {
  const auto r = ftle_cli({"bench", "--sizes", "200000", "--dims", "2", "--strategies", "data-parallel,single-pass",
                           "--reps", "3", "--warmup", "0", "--workers", "2", "--T", "1", "--dt", "0.5", "--out",
                           path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("b.csv"))), 1u + 6u);
  EXPECT_EQ(count_lines(slurp(path("b.summary.csv"))), 1u + 2u);

  const auto rep = ftle_cli({"report", "--bench", path("b.csv"), "--reference", "table1"});
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("configurations"), std::string::npos);
  EXPECT_NE(rep.out.find("| data-parallel/w2/c4096 |"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(ftle_cli({}).code, 1);
  EXPECT_EQ(ftle_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "identity"}).code, 1);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "warp", "--dims", "3x3", "--T", "1", "--dt", "1", "--out", path("x")}).code,
            1);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "identity", "--dims", "3x3", "--T", "1", "--dt", "-1", "--out",
                      path("x")})
                .code,
            1);
  EXPECT_EQ(ftle_cli({"generate", "--flow", "drift", "--dims", "3x3", "--T", "1", "--dt", "1", "--out", path("x")})
                .code,
            1);
  EXPECT_EQ(ftle_cli({"compute", "--input", path("x"), "--strategy", "single-pass", "--workers", "2", "--out",
                      path("y")})
                .code,
            1);
  EXPECT_EQ(ftle_cli({"bench", "--dims", "4"}).code, 1);
  EXPECT_EQ(ftle_cli({"report"}).code, 1);
  EXPECT_EQ(ftle_cli({"report", "--reference", "table2"}).code, 1);
  const auto r = ftle_cli({"compute"});
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = ftle_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("compute"), std::string::npos);
}

TEST_F(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(ftle_cli({"compute", "--input", path("missing.ftlm"), "--strategy", "single-pass", "--out", path("o")})
                .code,
            2);
  {
    std::ofstream(path("junk.ftlm")) << "not a flowmap";
  }
  const auto junk = ftle_cli({"compute", "--input", path("junk.ftlm"), "--strategy", "single-pass", "--out", path("o")});
  EXPECT_EQ(junk.code, 2);
  EXPECT_NE(junk.err.find("bad magic"), std::string::npos);

  const std::vector<std::size_t> d{3, 3};
  const std::vector<double> h{1, 1}, o{0, 0};
  const auto m = make_structured_grid(d, h, o);
  FlowmapField f{2, 9, {m.coords().begin(), m.coords().end()}, 0.0, 1.0};
  f.values[7] = std::numeric_limits<double>::infinity();
  write_flowmap(path("inf.ftlm"), f, m);
  const auto inf = ftle_cli({"compute", "--input", path("inf.ftlm"), "--strategy", "single-pass", "--out", path("o")});
  EXPECT_EQ(inf.code, 2);
  EXPECT_NE(inf.err.find("point 3"), std::string::npos);

  EXPECT_EQ(ftle_cli({"report", "--bench", path("missing.csv")}).code, 2);
}

TEST_F(Cli, KernelErrorsExitThree) {
  // three points on a line: no neighbors at all along y
  const std::vector<double> coords{0, 0, 1, 0, 2, 0};
  const std::vector<std::int64_t> nb{1,           kNoNeighbor, kNoNeighbor, kNoNeighbor,  //
                                     2,           0,           kNoNeighbor, kNoNeighbor,  //
                                     kNoNeighbor, 1,           kNoNeighbor, kNoNeighbor};
  const auto m = make_unstructured_topology(2, coords, nb);
  FlowmapField f{2, 3, coords, 0.0, 1.0};
  write_flowmap(path("line.ftlm"), f, m);
  const auto r = ftle_cli({"compute", "--input", path("line.ftlm"), "--strategy", "data-parallel", "--out", path("o")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("degenerate stencil"), std::string::npos);
  EXPECT_NE(r.err.find("point 0"), std::string::npos);
}
