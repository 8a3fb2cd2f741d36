#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "espresso/cli/commands.hpp"

namespace espresso::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int status = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "espresso");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

RunConfig parse(std::vector<std::string> args) {
  args.insert(args.begin(), "espresso");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("espresso_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return dir / name;
  }

  fs::path dir;
};

TEST(ParseConfig, Defaults) {
  const RunConfig scaling = parse({"scaling"});
  EXPECT_EQ(scaling.kind, "espresso");
  EXPECT_EQ(scaling.frames, (std::vector<std::size_t>{8, 16, 32, 64, 128}));
  EXPECT_EQ(scaling.projector.segments, 1u);
  EXPECT_EQ(scaling.format, ReportFormat::csv);

  const RunConfig train = parse({"train"});
  EXPECT_EQ(train.projector.segments, 4u);
  EXPECT_EQ(train.steps, 2000u);
  EXPECT_EQ(train.batch, 32u);
  EXPECT_EQ(train.seed, 7u);
  EXPECT_EQ(train.projector.llm_width, 32u);
  EXPECT_EQ(train.task.width, 16u);
}

TEST(ParseConfig, InvalidValuesNameTheKey) {
  try {
    parse({"scaling", "--p", "0"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "p");
  }
  try {
    parse({"scaling", "--frames", "4", "--n", "8"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "n");
  }
  EXPECT_THROW(parse({"train", "--kind", "all"}), ConfigError);
  EXPECT_THROW(parse({"stats"}), ConfigError);
  EXPECT_THROW(parse({"scaling", "--format", "xml"}), ConfigError);
}

TEST(ParseConfig, UnknownCommandAndFlag) {
  EXPECT_THROW(parse({"compress"}), UsageError);
  EXPECT_THROW(parse({"scaling", "--bogus", "1"}), UsageError);
  EXPECT_THROW(parse({}), UsageError);

  const CliRun r = run({"compress"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("unknown command"), std::string::npos);
  EXPECT_NE(r.err.find("usage:"), std::string::npos);
}

TEST_F(CliTest, ConfigFileAndFlagOverride) {
  const fs::path cfg = write("run.toml", "# sweep\nframes = 8,16\nn = 2\npatches = 4\n");
  const RunConfig from_file = parse({"scaling", "--config", cfg.string()});
  EXPECT_EQ(from_file.frames, (std::vector<std::size_t>{8, 16}));
  EXPECT_EQ(from_file.projector.segments, 2u);
  EXPECT_EQ(from_file.patches, 4u);

  const RunConfig overridden = parse({"scaling", "--config", cfg.string(), "--n", "8"});
  EXPECT_EQ(overridden.projector.segments, 8u);
  EXPECT_EQ(overridden.frames, (std::vector<std::size_t>{8, 16}));

  const fs::path bad = write("bad.toml", "bogus = 1\n");
  EXPECT_THROW(parse({"scaling", "--config", bad.string()}), UsageError);
}

TEST_F(CliTest, ScalingTokensConstantForEspresso) {
  const fs::path out = dir / "scaling.csv";
  ASSERT_EQ(run({"scaling", "--n", "8", "--out", out.string()}).status, 0);
  const Report report = read_report(out, ReportFormat::csv);
  ASSERT_EQ(report.rows.size(), 5u);
  for (const auto& row : report.rows) {
    EXPECT_EQ(std::get<std::int64_t>(row[report.column("tokens")]), 64);
  }
}

TEST(Stats, SegmentsDefaultColumn) {
  const CliRun r = run({"stats", "--table", std::string(ESPRESSO_DATA_DIR) + "/segments_default.csv"});
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream in(r.out);
  const Report report = parse_report(in, ReportFormat::csv);
  EXPECT_NEAR(std::get<double>(report.rows.at(0)[report.column("r")]), 0.97, 0.005);
}

TEST(Stats, SpatialAxisUsesCompressionRate) {
  const CliRun r = run({"stats", "--table", std::string(ESPRESSO_DATA_DIR) + "/spatial_queries.csv",
                     "--axis", "spatial"});
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream in(r.out);
  const Report report = parse_report(in, ReportFormat::csv);
  EXPECT_NEAR(std::get<double>(report.rows.at(0)[report.column("r")]), 0.39, 0.01);
}

TEST(Report, RoundTripBothFormats) {
  Report report({"name", "count", "value"});
  report.add_row({std::string("a,\"b\""), std::int64_t{3}, 0.1});
  report.add_row({std::string("plain"), std::int64_t{-7}, 2.0});
  report.add_row({std::string("x"), std::int64_t{0}, 1e-300});
  for (auto format : {ReportFormat::csv, ReportFormat::structured}) {
    std::stringstream buffer;
    write_report(report, format, buffer);
    EXPECT_EQ(parse_report(buffer, format), report) << to_string(format);
  }
  EXPECT_EQ(format_cell(2.0), "2.0");
  EXPECT_THROW(report.add_row({std::int64_t{1}}), std::invalid_argument);
}

TEST(Report, EmptyCsvIsHeaderOnly) {
  std::ostringstream out;
  write_report(Report({"step", "loss"}), ReportFormat::csv, out);
  EXPECT_EQ(out.str(), "step,loss\n");
}

TEST_F(CliTest, AtomicOverwriteLeavesNoTemporary) {
  const fs::path path = dir / "r.csv";
  write("r.csv", "old contents that are longer than the new ones\n");
  Report report({"a"});
  report.add_row({std::int64_t{1}});
  write_report(report, ReportFormat::csv, path);
  EXPECT_EQ(slurp(path), "a\n1\n");
  EXPECT_FALSE(fs::exists(dir / "r.csv.tmp"));
  EXPECT_THROW(write_report(report, ReportFormat::csv, dir / "missing" / "r.csv"),
               std::runtime_error);
}

TEST_F(CliTest, RejectedConfigWritesNothing) {
  const fs::path out = dir / "never.csv";
  const CliRun r = run({"scaling", "--dv", "15", "--out", out.string()});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("dv"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out));
  EXPECT_TRUE(fs::is_empty(dir));
}

TEST_F(CliTest, NeedleGenManifest) {
  ASSERT_EQ(run({"needle-gen", "--count", "3", "--out", (dir / "n").string()}).status, 0);
  std::istringstream manifest(slurp(dir / "n" / "manifest.txt"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(manifest, line)) {
    EXPECT_EQ(line.rfind("index=" + std::to_string(lines) + " ", 0), 0u) << line;
    ++lines;
  }
  EXPECT_EQ(lines, 3u);
  const FeatureVideo video = read_feature_video(dir / "n" / "example_00002.espr");
  EXPECT_EQ(video.frames(), 32u);
  EXPECT_EQ(video.patches(), 16u);
  EXPECT_EQ(video.width(), 16u);
}

TEST_F(CliTest, TrainEvalRerunsAreByteIdentical) {
  auto train = [&](const std::string& tag) {
    const CliRun r = run({"train", "--steps", "5", "--batch", "4", "--train_count", "16",
                       "--eval_count", "16", "--checkpoint", (dir / (tag + ".ckpt")).string(),
                       "--out", (dir / (tag + ".csv")).string(), "--summary",
                       (dir / (tag + "_summary.csv")).string()});
    ASSERT_EQ(r.status, 0) << r.err;
  };
  train("a");
  train("b");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a_summary.csv"), slurp(dir / "b_summary.csv"));
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));

  const Report history = read_report(dir / "a.csv", ReportFormat::csv);
  EXPECT_EQ(history.rows.size(), 5u);

  const Report summary = read_report(dir / "a_summary.csv", ReportFormat::csv);
  const CliRun e = run({"eval", "--checkpoint", (dir / "a.ckpt").string(), "--eval_count", "16"});
  ASSERT_EQ(e.status, 0) << e.err;
  std::istringstream in(e.out);
  const Report eval = parse_report(in, ReportFormat::csv);
  EXPECT_EQ(eval.rows.at(0)[eval.column("accuracy")],
            summary.rows.at(0)[summary.column("eval_accuracy")]);
}

TEST_F(CliTest, EvalWithMissingCheckpointFails) {
  const CliRun r = run({"eval", "--checkpoint", (dir / "absent.ckpt").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("absent.ckpt"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace espresso::cli
