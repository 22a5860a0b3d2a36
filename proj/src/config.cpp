#include "fluxcz/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fluxcz/errors.hpp"

namespace fluxcz {

using nlohmann::json;

namespace {

const std::set<std::string> kTransitions = {"00-10", "00-01", "10-20", "11-21"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError("missing key '" + key + "' in " + where);
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(field + " must be finite");
  return x;
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ValidationError(field + " must be an integer");
  return v.get<int>();
}

const json& object(const json& v, const std::string& field) {
  if (!v.is_object()) throw ValidationError(field + " must be an object");
  return v;
}

FluxoniumParams qubit(const json& v, const std::string& name) {
  object(v, name);
  reject_unknown(v, {"e_c_ghz", "e_l_ghz", "e_j_ghz", "phi_ext_rad"}, name);
  FluxoniumParams p;
  p.e_c = number(require(v, "e_c_ghz", name), name + ".e_c_ghz");
  p.e_l = number(require(v, "e_l_ghz", name), name + ".e_l_ghz");
  p.e_j = number(require(v, "e_j_ghz", name), name + ".e_j_ghz");
  if (v.contains("phi_ext_rad")) p.phi_ext = number(v.at("phi_ext_rad"), name + ".phi_ext_rad");
  if (!(p.e_c > 0.0)) throw ValidationError(name + ".e_c_ghz must be > 0");
  if (!(p.e_l > 0.0)) throw ValidationError(name + ".e_l_ghz must be > 0");
  if (!(p.e_j >= 0.0)) throw ValidationError(name + ".e_j_ghz must be >= 0");
  return p;
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

CoherenceSet DeviceConfig::gate_coherence() const {
  auto get = [&](const std::string& key) -> const TransitionTimes& {
    auto it = coherence.find(key);
    if (it == coherence.end()) throw ValidationError("coherence_us." + key + " is required");
    return it->second;
  };
  CoherenceSet c;
  c.t1_10_20 = get("10-20").t1_us;
  c.t2r_10_20 = get("10-20").t2r_us;
  c.t1_11_21 = get("11-21").t1_us;
  c.t2r_11_21 = get("11-21").t2r_us;
  c.validate();
  return c;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::uint64_t DeviceConfig::hash() const { return fnv1a64(canonical); }

DeviceConfig parse_config(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": parse error: " << e.what();
    throw ParseError(os.str());
  }
  object(root, "config");
  reject_unknown(root,
                 {"qubit_a", "qubit_b", "j_c_ghz", "drive_ratio", "coherence_us", "numerics"},
                 "config");

  DeviceConfig cfg;
  cfg.device.qubit_a = qubit(require(root, "qubit_a", "config"), "qubit_a");
  cfg.device.qubit_b = qubit(require(root, "qubit_b", "config"), "qubit_b");
  cfg.device.j_c = number(require(root, "j_c_ghz", "config"), "j_c_ghz");
  if (root.contains("drive_ratio")) {
    cfg.drive_ratio = number(root.at("drive_ratio"), "drive_ratio");
  }

  if (root.contains("coherence_us")) {
    const json& coh = object(root.at("coherence_us"), "coherence_us");
    reject_unknown(coh, kTransitions, "coherence_us");
    for (auto it = coh.begin(); it != coh.end(); ++it) {
      const std::string where = "coherence_us." + it.key();
      object(it.value(), where);
      reject_unknown(it.value(), {"t1", "t2r", "t2e"}, where);
      TransitionTimes t;
      t.t1_us = number(require(it.value(), "t1", where), where + ".t1");
      t.t2r_us = number(require(it.value(), "t2r", where), where + ".t2r");
      if (it.value().contains("t2e")) t.t2e_us = number(it.value().at("t2e"), where + ".t2e");
      if (!(t.t1_us > 0.0)) throw ValidationError(where + ".t1 must be > 0");
      if (!(t.t2r_us > 0.0)) throw ValidationError(where + ".t2r must be > 0");
      if (!(t.t2e_us >= 0.0)) throw ValidationError(where + ".t2e must be >= 0");
      if (t.t2r_us > 2.0 * t.t1_us) throw ValidationError(where + ".t2r exceeds 2 * t1");
      cfg.coherence[it.key()] = t;
    }
  }

  if (root.contains("numerics")) {
    const json& num = object(root.at("numerics"), "numerics");
    reject_unknown(num, {"n_basis", "n_keep", "m_trunc", "tol"}, "numerics");
    if (num.contains("n_basis")) cfg.numerics.single.n_basis = integer(num.at("n_basis"), "numerics.n_basis");
    if (num.contains("n_keep")) cfg.numerics.single.n_keep = integer(num.at("n_keep"), "numerics.n_keep");
    if (num.contains("m_trunc")) cfg.numerics.m_trunc = integer(num.at("m_trunc"), "numerics.m_trunc");
    if (num.contains("tol")) cfg.tol = number(num.at("tol"), "numerics.tol");
  }
  if (cfg.numerics.single.n_basis < 20) throw ValidationError("numerics.n_basis must be >= 20");
  if (cfg.numerics.single.n_keep < 3 || cfg.numerics.single.n_keep > cfg.numerics.single.n_basis) {
    throw ValidationError("numerics.n_keep must lie in [3, n_basis]");
  }
  const int product = cfg.numerics.single.n_keep * cfg.numerics.single.n_keep;
  if (cfg.numerics.m_trunc < 9 || cfg.numerics.m_trunc > product) {
    throw ValidationError("numerics.m_trunc must lie in [9, n_keep^2]");
  }
  if (!(cfg.tol >= 1e-12 && cfg.tol <= 1e-6)) {
    throw ValidationError("numerics.tol must lie in [1e-12, 1e-6]");
  }
  cfg.canonical = root.dump();
  return cfg;
}

DeviceConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace fluxcz
