#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fluxcz/config.hpp"
#include "fluxcz/errors.hpp"

using namespace fluxcz;

namespace {

std::string shipped_text() {
  std::ifstream in(FLUXCZ_CONFIG_DIR "/reference_device.json");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replaced(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

template <class E>
std::string message_of(const std::string& text) {
  try {
    parse_config(text, "dev.json");
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, ShippedDeviceLoads) {
  const auto c = load_config(FLUXCZ_CONFIG_DIR "/reference_device.json");
  EXPECT_DOUBLE_EQ(c.device.qubit_a.e_c, 0.973);
  EXPECT_DOUBLE_EQ(c.device.qubit_b.e_l, 0.684);
  EXPECT_DOUBLE_EQ(c.device.j_c, 0.224);
  EXPECT_DOUBLE_EQ(c.drive_ratio, 0.9);
  EXPECT_EQ(c.numerics.single.n_basis, 80);
  EXPECT_EQ(c.numerics.m_trunc, 20);
  EXPECT_DOUBLE_EQ(c.tol, 1e-10);
  const auto g = c.gate_coherence();
  EXPECT_DOUBLE_EQ(g.t1_10_20, 8.9);
  EXPECT_DOUBLE_EQ(g.t2r_11_21, 1.7);
  EXPECT_DOUBLE_EQ(c.coherence.at("00-01").t2e_us, 64.0);
}

TEST(Config, HashIsStableAndContentSensitive) {
  const auto text = shipped_text();
  const auto a = parse_config(text);
  const auto b = parse_config(replaced(text, "\n", "\n\n  "));
  EXPECT_EQ(a.hash(), b.hash());
  const auto c = parse_config(replaced(text, "0.224", "0.225"));
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(hex64(a.hash()).size(), 16u);
  // FNV-1a reference values
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, FieldErrorsNameTheField) {
  const auto text = shipped_text();
  EXPECT_NE(message_of<ValidationError>(replaced(text, "\"e_c_ghz\": 0.973", "\"e_c_ghz\": -1"))
                .find("qubit_a.e_c_ghz"),
            std::string::npos);
  EXPECT_NE(message_of<ValidationError>(replaced(text, "\"j_c_ghz\"", "\"foo\": 1, \"j_c_ghz\""))
                .find("foo"),
            std::string::npos);
  EXPECT_NE(message_of<ValidationError>(replaced(text, "\"n_basis\": 80", "\"n_basis\": 10"))
                .find("n_basis"),
            std::string::npos);
  EXPECT_NE(message_of<ValidationError>(replaced(text, "\"tol\": 1e-10", "\"tol\": 1e-3"))
                .find("tol"),
            std::string::npos);
  EXPECT_NE(message_of<ValidationError>(replaced(text, "\"t2r\": 2.5", "\"t2r\": 20"))
                .find("10-20"),
            std::string::npos);
}

TEST(Config, ParseErrorsCarryLineAndColumn) {
  const std::string msg = message_of<ParseError>("{\n  \"qubit_a\": ,\n}");
  EXPECT_EQ(msg.rfind("dev.json:2:", 0), 0u) << msg;
  EXPECT_THROW(load_config("/nonexistent/device.json"), IoError);
}
