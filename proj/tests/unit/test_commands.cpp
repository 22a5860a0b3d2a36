#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fluxcz/commands.hpp"
#include "fluxcz/errors.hpp"
#include "fluxcz/types.hpp"

using namespace fluxcz;
namespace fs = std::filesystem;

namespace {

const std::string kConfig = FLUXCZ_CONFIG_DIR "/reference_device.json";

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("fluxcz_cmd_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Angles, Parsing) {
  EXPECT_DOUBLE_EQ(parse_angle("pi"), kPi);
  EXPECT_DOUBLE_EQ(parse_angle("-pi/2"), -kPi / 2.0);
  EXPECT_DOUBLE_EQ(parse_angle("0.5*pi"), 0.5 * kPi);
  EXPECT_DOUBLE_EQ(parse_angle("1.25"), 1.25);
  EXPECT_THROW(parse_angle("tau"), ValidationError);
  EXPECT_THROW(parse_angle(""), ValidationError);
}

TEST(Format, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 5.18122, -2.5e-9}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Catalog, NamesAreUnique) {
  std::set<std::string> names;
  for (const auto& c : command_catalog()) EXPECT_TRUE(names.insert(c.name).second) << c.name;
  for (const char* n : {"spectrum", "flux-sweep", "rabi-map", "design", "gate-error-vs-duration",
                        "error-landscape", "lindblad-error", "optimize", "rb-fit",
                        "readout-correct", "rate-fit"})
    EXPECT_TRUE(names.count(n)) << n;
}

TEST(Commands, DesignIsReproducibleAndHeadered) {
  const auto d1 = fresh_dir("design1");
  const auto d2 = fresh_dir("design2");
  run_command({"design", kConfig, d1.string(), {}});
  run_command({"design", kConfig, d2.string(), {}});
  const auto a = slurp(d1 / "design.json");
  EXPECT_EQ(a, slurp(d2 / "design.json"));
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["header"]["command"], "design");
  EXPECT_EQ(j["header"]["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["header"]["seed"], 0);
}

TEST(Commands, RejectsUnknownInputs) {
  const auto d = fresh_dir("errors");
  EXPECT_THROW(run_command({"design", kConfig, d.string(), {{"bogus", "1"}}}), ValidationError);
  EXPECT_THROW(run_command({"no-such-command", kConfig, d.string(), {}}), UnknownCommandError);
  EXPECT_THROW(run_command({"design", "", d.string(), {}}), ValidationError);
  EXPECT_THROW(run_command({"design", kConfig, d.string(), {{"r", "abc"}}}), ValidationError);
}

TEST(Commands, SynthThenFitRecoversDecay) {
  const auto d = fresh_dir("rb");
  run_command({"synth-rb", "", d.string(),
               {{"p", "0.97"}, {"sigma", "0"}, {"m", "1,2,3,5,8,12,17,25,35,50"}}});
  const auto in = (d / "rb_curve.csv").string();
  run_command({"rb-fit", "", d.string(), {{"input", in}}});
  const auto j = nlohmann::json::parse(slurp(d / "rb_fit.json"));
  EXPECT_NEAR(j["fit"]["p"].get<double>(), 0.97, 1e-6);
  EXPECT_EQ(j["header"]["config_hash"], "none");
}

TEST(Commands, ReadoutWithIdentityCalibration) {
  const auto d = fresh_dir("readout");
  run_command({"readout-correct", "", d.string(), {{"p", "0.7,0.1,0.15,0.05"}}});
  const auto j = nlohmann::json::parse(slurp(d / "readout.json"));
  const auto p = j["corrected"].get<std::vector<double>>();
  ASSERT_EQ(p.size(), 4u);
  EXPECT_NEAR(p[0], 0.7, 1e-15);
  EXPECT_NEAR(p[3], 0.05, 1e-15);
}
