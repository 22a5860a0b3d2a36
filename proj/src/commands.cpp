#include "fluxcz/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fluxcz/config.hpp"
#include "fluxcz/device_model.hpp"
#include "fluxcz/errors.hpp"
#include "fluxcz/gate_design.hpp"
#include "fluxcz/metrology.hpp"
#include "fluxcz/open_system.hpp"
#include "fluxcz/optimizer.hpp"
#include "fluxcz/propagator.hpp"

namespace fluxcz {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<CommandInfo> kCatalog = {
    {"spectrum",
     "Dressed spectrum summary. Writes spectrum.json.",
     true,
     {}},
    {"flux-sweep",
     "Spectrum versus external flux of qubit A (B at flux + offset). Writes flux_sweep.csv "
     "with columns flux_rad,ok,f_a_ghz,f_b_ghz,f_10_20_ghz,f_11_21_ghz,delta_ghz,xi_zz_ghz,error.",
     true,
     {{"flux-min", "2.941592653589793", "lowest flux, rad"},
      {"flux-max", "3.341592653589793", "highest flux, rad"},
      {"points", "21", "number of flux points"},
      {"offset", "0", "flux offset of qubit B, rad"}}},
    {"rabi-map",
     "Square-drive Rabi oscillations around the two gate transitions. Writes rabi_map.csv "
     "with columns transition,f_d_ghz,t_ns,population and rabi_fit.json with per-trace "
     "frequencies, chevron fits and the ratio r.",
     true,
     {{"eps-b", "0", "drive amplitude on qubit B, GHz; 0 picks a 4 MHz Rabi rate on 11-21"},
      {"points", "9", "drive frequencies per transition"},
      {"half-span", "0", "half width of each frequency grid, GHz; 0 uses 2.5 Rabi rates"},
      {"duration", "0", "drive length, ns; 0 uses the default"},
      {"dt", "2", "sampling interval, ns"},
      {"tol", "1e-8", "integrator tolerance"}}},
    {"design",
     "Synchronized-Rabi design. Writes design.json.",
     true,
     {{"target-phase", "pi", "conditional phase, rad (accepts pi, pi/2, ...)"},
      {"r", "0", "Rabi ratio override; 0 uses the charge matrix elements"}}},
    {"gate-error-vs-duration",
     "Leakage-tuned flat-top gates over a duration grid. Writes gate_error_vs_duration.csv "
     "with columns t_gate_ns,t_plateau_ns,eps_a_ghz,eps_b_ghz,f_d_ghz,fidelity_error,p_leak,"
     "delta_phi_rad,converged,error and gate_error_optimum.json.",
     true,
     {{"t-min", "50", "shortest duration, ns"},
      {"t-max", "70", "longest duration, ns"},
      {"step", "1", "duration step, ns"},
      {"t-width", "15", "edge width, ns"},
      {"tol", "1e-9", "integrator tolerance"},
      {"max-evals", "60", "least-squares evaluation budget per duration"},
      {"refine", "1", "1 to refine the optimum by golden-section search"}}},
    {"error-landscape",
     "Gate error over drive detuning and amplitude scale around a tuned pulse. Writes "
     "error_landscape.csv with columns detuning_ghz,amplitude_scale,fidelity_error,p_leak,"
     "delta_phi_rad,ok.",
     true,
     {{"t-gate", "56", "total duration, ns"},
      {"t-width", "15", "edge width, ns"},
      {"detuning-span", "0.004", "half width of the detuning grid around the tuned value, GHz"},
      {"detuning-points", "11", "detuning points"},
      {"scale-min", "0.9", "smallest amplitude scale"},
      {"scale-max", "1.1", "largest amplitude scale"},
      {"scale-points", "11", "amplitude points"},
      {"tol", "1e-9", "integrator tolerance"}}},
    {"lindblad-error",
     "Incoherent gate error from the six-level master equation and the analytic estimate. "
     "Writes lindblad_error.json.",
     true,
     {{"t-gate", "0", "gate time, ns; 0 uses 1/Omega of the device design"},
      {"delta", "0", "splitting, GHz; 0 uses the device, or |phase|/(pi t_gate) when t-gate is set"},
      {"r", "0", "Rabi ratio; 0 uses the charge matrix elements"},
      {"target-phase", "pi", "conditional phase, rad"},
      {"rate-scale", "1", "multiplier on all decay rates"},
      {"tol", "1e-10", "integrator tolerance"}}},
    {"optimize",
     "CMA-ES over (amplitude_scale, t_plateau, t_width, f_d, z_a, z_b). Writes "
     "optimize_trace.csv with columns evaluation,generation,amplitude_scale,t_plateau_ns,"
     "t_width_ns,f_d_ghz,z_a_rad,z_b_rad,cost,best_so_far,failed and optimize_best.json.",
     true,
     {{"mode", "coherent", "cost mode: coherent or lindblad"},
      {"t-gate", "56", "starting total duration, ns"},
      {"t-width", "15", "starting edge width, ns"},
      {"population", "12", "CMA-ES population"},
      {"max-evals", "300", "evaluation budget"},
      {"tol", "1e-9", "integrator tolerance"}}},
    {"rb-fit",
     "Fits a + b p^m + c (m - 1) p^(m - 2) to an RB curve CSV (m,survival,std,n_interleaved). "
     "Writes rb_fit.json; with --reference also the interleaved gate error.",
     false,
     {{"input", "", "RB curve CSV"},
      {"reference", "", "optional reference RB curve CSV"},
      {"dimension", "4", "Hilbert space dimension, 2 or 4"}}},
    {"readout-correct",
     "Applies the swap and confusion matrices to raw populations and renormalizes. Writes readout.json.",
     false,
     {{"p", "", "raw populations p00,p10,p01,p11 (first label qubit A)"},
      {"a-a", "1", "qubit A confusion a"},
      {"b-a", "1", "qubit A confusion b"},
      {"a-b", "1", "qubit B confusion a"},
      {"b-b", "1", "qubit B confusion b"},
      {"swap-b", "0", "excitation swap b"},
      {"swap-c", "0", "excitation swap c"}}},
    {"rate-fit",
     "Fits the two-level rate equation to a CSV with columns t_ms,p1. Writes rate_fit.json.",
     false,
     {{"input", "", "population CSV"}}},
    {"synth-rb",
     "Synthetic RB curve with Gaussian noise. Writes rb_curve.csv with columns "
     "m,survival,std,n_interleaved.",
     false,
     {{"p", "0.98", "depolarizing parameter"},
      {"a", "0.25", "offset"},
      {"b", "0.7", "amplitude"},
      {"c", "0", "gate-dependent term"},
      {"m", "1,2,4,8,16,32,64,128", "sequence lengths"},
      {"sigma", "0.005", "noise standard deviation"},
      {"n-interleaved", "0", "interleaved gate count"},
      {"out-name", "rb_curve.csv", "output file name"}}},
};

// ---- flag access ----

class Flags {
 public:
  Flags(const CommandInfo& info, const std::map<std::string, std::string>& given) {
    for (const auto& f : info.flags) values_[f.name] = f.default_value;
    values_["seed"] = "0";
    for (const auto& [k, v] : given) {
      if (!values_.count(k)) {
        throw ValidationError("unknown flag --" + k + " for command " + info.name);
      }
      values_[k] = v;
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  double num(const std::string& key) const {
    const std::string& s = str(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ValidationError("--" + key + " expects a number, got '" + s + "'");
    }
    return v;
  }

  long integer(const std::string& key) const {
    const std::string& s = str(key);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ValidationError("--" + key + " expects an integer, got '" + s + "'");
    }
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc() || ptr != item.data() + item.size()) {
        throw ValidationError("--" + key + " expects a comma-separated list of numbers");
      }
      out.push_back(v);
    }
    return out;
  }

  std::uint64_t seed() const {
    const long s = integer("seed");
    if (s < 0) throw ValidationError("--seed must be >= 0");
    return static_cast<std::uint64_t>(s);
  }

  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// ---- output ----

struct Context {
  const CommandInfo* info = nullptr;
  std::string hash = "none";
  std::uint64_t seed = 0;
  const Flags* flags = nullptr;
  std::filesystem::path out_dir;
  CommandResult result;
};

ojson header(const Context& ctx) {
  ojson h;
  h["tool"] = "fluxcz";
  h["version"] = kVersion;
  h["command"] = ctx.info->name;
  h["config_hash"] = ctx.hash;
  h["seed"] = ctx.seed;
  ojson flags = ojson::object();
  for (const auto& [k, v] : ctx.flags->all()) flags[k] = v;
  h["flags"] = flags;
  return h;
}

void write_file(Context& ctx, const std::string& name, const std::string& body) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.out_dir, ec);
  const auto path = ctx.out_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed for " + path.string());
  ctx.result.files.push_back(path.string());
}

void write_json(Context& ctx, const std::string& name, ojson body) {
  ojson doc;
  doc["header"] = header(ctx);
  for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
  write_file(ctx, name, doc.dump(2) + "\n");
}

std::string csv_header_block(const Context& ctx) {
  std::ostringstream os;
  os << "# tool=fluxcz version=" << kVersion << "\n";
  os << "# command=" << ctx.info->name << "\n";
  os << "# config_hash=" << ctx.hash << "\n";
  os << "# seed=" << ctx.seed << "\n";
  for (const auto& [k, v] : ctx.flags->all()) os << "# flag " << k << "=" << v << "\n";
  return os.str();
}

// CSV row builder with shortest round-trip numbers.
class Row {
 public:
  Row& operator<<(double x) { return add(format_double(x)); }
  Row& operator<<(int x) { return add(std::to_string(x)); }
  Row& operator<<(const std::string& s) {
    std::string clean = s;
    for (char& ch : clean) {
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return add(clean);
  }
  std::string str() const { return text_ + "\n"; }

 private:
  Row& add(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
    return *this;
  }
  std::string text_;
  bool first_ = true;
};

ojson summary_json(const SpectrumSummary& s) {
  ojson j;
  j["f_a_ghz"] = s.f_a;
  j["f_b_ghz"] = s.f_b;
  j["f_10_20_ghz"] = s.f_10_20;
  j["f_11_21_ghz"] = s.f_11_21;
  j["delta_ghz"] = s.delta;
  j["delta_sign"] = s.delta_sign;
  j["xi_zz_ghz"] = s.xi_zz;
  j["n01_a"] = s.n01_a;
  j["n12_a"] = s.n12_a;
  j["n01_b"] = s.n01_b;
  j["n12_b"] = s.n12_b;
  return j;
}

ojson sync_json(const SyncSolution& s) {
  ojson j;
  j["delta_ghz"] = s.delta;
  j["r"] = s.r;
  j["target_phase_rad"] = s.target_phase;
  j["delta_detuning_ghz"] = s.delta_detuning;
  j["delta_detuning_ratio"] = s.delta_detuning / s.delta;
  j["omega_ghz"] = s.omega;
  j["omega_10_20_ghz"] = s.omega_10_20;
  j["omega_11_21_ghz"] = s.omega_11_21;
  j["t_gate_ideal_ns"] = s.t_gate_ideal;
  j["f_d_ghz"] = s.f_d;
  j["sync_residual_ghz"] = s.sync_residual();
  return j;
}

// ---- commands ----

struct Loaded {
  DeviceConfig cfg;
  JointSystem joint;
};

Loaded load_device(const std::string& path) {
  if (path.empty()) throw ValidationError("--config is required for this command");
  Loaded l;
  l.cfg = load_config(path);
  l.joint = build_device(l.cfg.device, l.cfg.numerics);
  return l;
}

void cmd_spectrum(Context& ctx, const Loaded& dev, const Flags&) {
  const auto s = spectrum_summary(dev.joint);
  ojson body;
  body["summary"] = summary_json(s);
  body["gap_above_computational_ghz"] = gap_above_computational(dev.joint);
  ojson levels = ojson::array();
  for (int k = 0; k < dev.joint.dim(); ++k) {
    ojson lv;
    lv["index"] = k;
    lv["energy_ghz"] = dev.joint.energies(k);
    lv["label"] = dev.joint.label_map[k] ? dev.joint.label_map[k]->str() : std::string();
    lv["overlap"] = dev.joint.label_overlap[k];
    levels.push_back(lv);
  }
  body["levels"] = levels;
  write_json(ctx, "spectrum.json", body);
  ctx.result.summary = "delta_ghz=" + format_double(s.delta);
}

void cmd_flux_sweep(Context& ctx, const Loaded& dev, const Flags& f) {
  const double lo = f.num("flux-min");
  const double hi = f.num("flux-max");
  const long n = f.integer("points");
  if (n < 1) throw ValidationError("--points must be >= 1");
  if (!(hi >= lo)) throw ValidationError("--flux-max must be >= --flux-min");
  std::vector<double> grid;
  for (long k = 0; k < n; ++k) grid.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
  const auto rows = flux_sweep(dev.cfg.device, grid, f.num("offset"), dev.cfg.numerics);
  std::string out = csv_header_block(ctx);
  out += "flux_rad,ok,f_a_ghz,f_b_ghz,f_10_20_ghz,f_11_21_ghz,delta_ghz,xi_zz_ghz,error\n";
  for (const auto& r : rows) {
    Row row;
    row << r.flux << (r.ok ? 1 : 0) << r.summary.f_a << r.summary.f_b << r.summary.f_10_20
        << r.summary.f_11_21 << r.summary.delta << r.summary.xi_zz << r.error;
    out += row.str();
  }
  write_file(ctx, "flux_sweep.csv", out);
  ctx.result.summary = "rows=" + std::to_string(rows.size());
}

void cmd_rabi_map(Context& ctx, const Loaded& dev, const Flags& f) {
  RabiMapRequest req = default_rabi_request(dev.joint, dev.cfg.drive_ratio);
  const auto s = spectrum_summary(dev.joint);
  const auto charge = rabi_from_charge(dev.joint, dev.cfg.drive_ratio);
  if (f.num("eps-b") > 0.0) req.eps_b = f.num("eps-b");
  const long n = f.integer("points");
  if (n < 3) throw ValidationError("--points must be >= 3");
  const double hs = f.num("half-span");
  const double hs10 = hs > 0.0 ? hs : 2.5 * req.eps_b * charge.element_10_20;
  const double hs11 = hs > 0.0 ? hs : 2.5 * req.eps_b * charge.element_11_21;
  req.f_grid_10 = centered_grid(s.f_10_20, hs10, static_cast<int>(n));
  req.f_grid_11 = centered_grid(s.f_11_21, hs11, static_cast<int>(n));
  if (f.num("duration") > 0.0) req.duration = f.num("duration");
  req.sample_dt = f.num("dt");
  req.tol = f.num("tol");

  const RabiMap map = rabi_map(dev.joint, req);
  std::string out = csv_header_block(ctx);
  out += "transition,f_d_ghz,t_ns,population\n";
  ojson traces = ojson::array();
  for (const auto& tr : map.traces) {
    const std::string name = tr.initial.str() + "-" + tr.excited.str();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      Row row;
      row << name << tr.f_d << tr.times[k] << tr.population[k];
      out += row.str();
    }
    ojson t;
    t["transition"] = name;
    t["f_d_ghz"] = tr.f_d;
    t["rabi_frequency_ghz"] = tr.fit.frequency;
    t["offset"] = tr.fit.offset;
    t["amplitude"] = tr.fit.amplitude;
    t["rms_residual"] = tr.fit.rms_residual;
    traces.push_back(t);
  }
  write_file(ctx, "rabi_map.csv", out);

  auto chev = [](const ChevronFit& c) {
    ojson j;
    j["f0_ghz"] = c.f0;
    j["omega_res_ghz"] = c.omega_res;
    j["rms_residual"] = c.rms_residual;
    return j;
  };
  ojson body;
  body["eps_a_ghz"] = req.eps_ratio * req.eps_b;
  body["eps_b_ghz"] = req.eps_b;
  body["duration_ns"] = req.duration;
  body["chevron_10_20"] = chev(map.chevron_10);
  body["chevron_11_21"] = chev(map.chevron_11);
  body["r"] = map.r;
  body["r_from_charge"] = charge.r;
  body["traces"] = traces;
  write_json(ctx, "rabi_fit.json", body);
  ctx.result.summary = "r=" + format_double(map.r);
}

void cmd_design(Context& ctx, const Loaded& dev, const Flags& f) {
  const double phase = parse_angle(f.str("target-phase"));
  const GateDesign d = design_gate(dev.joint, dev.cfg.drive_ratio, phase, f.num("r"));
  const GeometricPhases g = geometric_phases(d.sync, d.sync.delta);
  ojson body;
  body["sync"] = sync_json(d.sync);
  body["eps_a_ghz"] = d.eps_a;
  body["eps_b_ghz"] = d.eps_b;
  body["theta_10_rad"] = g.theta_10;
  body["theta_11_rad"] = g.theta_11;
  body["delta_phi_rad"] = g.delta_phi;
  body["element_10_20"] = d.charge.element_10_20;
  body["element_11_21"] = d.charge.element_11_21;
  body["spectrum"] = summary_json(d.spectrum);
  write_json(ctx, "design.json", body);
  ctx.result.summary = "delta_detuning_ratio=" + format_double(d.sync.delta_detuning / d.sync.delta);
}

ojson scan_row_json(const DurationScanRow& r) {
  ojson j;
  j["t_gate_ns"] = r.t_gate;
  j["t_plateau_ns"] = r.t_plateau;
  j["eps_a_ghz"] = r.eps_a;
  j["eps_b_ghz"] = r.eps_b;
  j["f_d_ghz"] = r.f_d;
  j["fidelity_error"] = r.fidelity_error;
  j["p_leak"] = r.p_leak;
  j["delta_phi_rad"] = r.delta_phi;
  j["converged"] = r.converged;
  j["error"] = r.error;
  return j;
}

void cmd_duration(Context& ctx, const Loaded& dev, const Flags& f) {
  DurationScanRequest req;
  const double lo = f.num("t-min");
  const double hi = f.num("t-max");
  const double step = f.num("step");
  if (!(step > 0.0)) throw ValidationError("--step must be > 0");
  if (!(hi >= lo)) throw ValidationError("--t-max must be >= --t-min");
  const long n = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (long k = 0; k < n; ++k) req.durations.push_back(lo + step * k);
  req.t_width = f.num("t-width");
  req.eps_ratio = dev.cfg.drive_ratio;
  req.tol = f.num("tol");
  req.max_evals = static_cast<int>(f.integer("max-evals"));

  const auto rows = gate_error_vs_duration(dev.joint, req);
  std::string out = csv_header_block(ctx);
  out += "t_gate_ns,t_plateau_ns,eps_a_ghz,eps_b_ghz,f_d_ghz,fidelity_error,p_leak,delta_phi_rad,"
         "converged,error\n";
  for (const auto& r : rows) {
    Row row;
    row << r.t_gate << r.t_plateau << r.eps_a << r.eps_b << r.f_d << r.fidelity_error << r.p_leak
        << r.delta_phi << (r.converged ? 1 : 0) << r.error;
    out += row.str();
  }
  write_file(ctx, "gate_error_vs_duration.csv", out);

  const DurationScanRow best = f.integer("refine") != 0
                                   ? refine_optimal_duration(dev.joint, req, rows)
                                   : [&] {
                                       DurationScanRow b = rows.front();
                                       for (const auto& r : rows) {
                                         if (r.converged && r.fidelity_error < b.fidelity_error) b = r;
                                       }
                                       return b;
                                     }();
  ojson body;
  body["optimum"] = scan_row_json(best);
  write_json(ctx, "gate_error_optimum.json", body);
  ctx.result.summary = "t_opt_ns=" + format_double(best.t_gate) +
                       " fidelity_error=" + format_double(best.fidelity_error);
}

void cmd_landscape(Context& ctx, const Loaded& dev, const Flags& f) {
  DurationScanRequest req;
  req.durations = {f.num("t-gate")};
  req.t_width = f.num("t-width");
  req.eps_ratio = dev.cfg.drive_ratio;
  req.tol = f.num("tol");
  const auto tuned = gate_error_vs_duration(dev.joint, req).front();
  if (!tuned.converged) throw ConvergenceError("base pulse tuning failed: " + tuned.error);

  PulseSpec base;
  base.eps_a = tuned.eps_a;
  base.eps_b = tuned.eps_b;
  base.f_d = tuned.f_d;
  base.t_width = req.t_width;
  base.t_plateau = tuned.t_plateau;

  const double f11 = spectrum_summary(dev.joint).f_11_21;
  const double d0 = f11 - tuned.f_d;
  const long nd = f.integer("detuning-points");
  const long ns = f.integer("scale-points");
  if (nd < 1 || ns < 1) throw ValidationError("grid point counts must be >= 1");
  const auto detunings = centered_grid(d0, f.num("detuning-span"), static_cast<int>(nd));
  std::vector<double> scales;
  const double s0 = f.num("scale-min"), s1 = f.num("scale-max");
  for (long k = 0; k < ns; ++k) scales.push_back(ns == 1 ? s0 : s0 + (s1 - s0) * k / (ns - 1));

  const auto rows = error_landscape(dev.joint, base, detunings, scales, req.tol);
  std::string out = csv_header_block(ctx);
  out += "detuning_ghz,amplitude_scale,fidelity_error,p_leak,delta_phi_rad,ok\n";
  for (const auto& r : rows) {
    Row row;
    row << r.detuning << r.amplitude_scale << r.fidelity_error << r.p_leak << r.delta_phi
        << (r.ok ? 1 : 0);
    out += row.str();
  }
  write_file(ctx, "error_landscape.csv", out);
  ctx.result.summary = "rows=" + std::to_string(rows.size());
}

void cmd_lindblad(Context& ctx, const Loaded& dev, const Flags& f) {
  const double phase = parse_angle(f.str("target-phase"));
  const auto s = spectrum_summary(dev.joint);
  double r = f.num("r");
  if (r <= 0.0) r = rabi_from_charge(dev.joint, dev.cfg.drive_ratio).r;
  double t_gate = f.num("t-gate");
  double delta = f.num("delta");
  if (delta <= 0.0) delta = t_gate > 0.0 ? std::abs(phase) / (kPi * t_gate) : s.delta;
  const SyncSolution sync = sync_parameters(delta, r, phase, s.f_11_21);
  if (t_gate <= 0.0) t_gate = sync.t_gate_ideal;

  const CoherenceSet coh = dev.cfg.gate_coherence();
  const double scale = f.num("rate-scale");
  if (!(scale >= 0.0)) throw ValidationError("--rate-scale must be >= 0");

  SixLevelModel model;
  model.delta = delta;
  model.delta_detuning = sync.delta_detuning;
  model.omega_10_20 = sync.omega_10_20;
  model.omega_11_21 = sync.omega_11_21;
  LindbladOptions opt;
  opt.t_gate = t_gate;
  opt.tol = f.num("tol");
  const LindbladResult lr = lindblad_gate_error(model, SixLevelRates::from(coh, scale), opt);

  CoherenceSet scaled = coh;
  AnalyticGateError an;
  if (scale > 0.0) {
    scaled.t1_10_20 /= scale;
    scaled.t2r_10_20 /= scale;
    scaled.t1_11_21 /= scale;
    scaled.t2r_11_21 /= scale;
    an = analytic_gate_error(scaled, t_gate);
  }

  ojson body;
  body["t_gate_ns"] = t_gate;
  body["sync"] = sync_json(sync);
  body["rate_scale"] = scale;
  body["analytic_error"] = an.total;
  body["analytic_contribution_10_20"] = an.contribution_10_20;
  body["analytic_contribution_11_21"] = an.contribution_11_21;
  body["analytic_dephasing_approx"] = an.dephasing_approx;
  body["lindblad_error"] = lr.error;
  body["lindblad_per_state"] = lr.per_state;
  body["max_trace_deviation"] = lr.max_trace_deviation;
  body["min_eigenvalue"] = lr.min_eigenvalue;
  write_json(ctx, "lindblad_error.json", body);
  ctx.result.summary = "lindblad_error=" + format_double(lr.error) +
                       " analytic_error=" + format_double(an.total);
}

void cmd_optimize(Context& ctx, const Loaded& dev, const Flags& f) {
  OrbitContext oc;
  oc.joint = &dev.joint;
  const std::string mode = f.str("mode");
  if (mode == "coherent") {
    oc.mode = CostMode::kCoherent;
  } else if (mode == "lindblad") {
    oc.mode = CostMode::kLindblad;
    oc.coherence = dev.cfg.gate_coherence();
  } else {
    throw ValidationError("--mode must be coherent or lindblad");
  }
  oc.tol = f.num("tol");

  // Area-matched start from the synchronized design, untuned.
  const double t_gate = f.num("t-gate");
  const double t_width = f.num("t-width");
  if (!(t_gate >= 2.0 * t_width)) throw ValidationError("--t-gate must be >= 2 * --t-width");
  const GateDesign d = design_gate(dev.joint, dev.cfg.drive_ratio, kPi);
  PulseSpec edge;
  edge.t_width = t_width;
  double area = 0.0;
  const int n = 2000;
  for (int k = 0; k <= n; ++k) {
    area += ((k == 0 || k == n) ? 0.5 : 1.0) * envelope(t_width * k / n, edge);
  }
  area *= t_width / n;
  const double t_plateau = t_gate - 2.0 * t_width;
  const double scale0 = d.sync.t_gate_ideal / (t_plateau + 2.0 * area);
  oc.eps_a = d.eps_a * scale0;
  oc.eps_b = d.eps_b * scale0;

  GateParams p0;
  p0.amplitude_scale = 1.0;
  p0.t_plateau = t_plateau;
  p0.t_width = t_width;
  p0.f_d = d.sync.f_d;
  const auto [za, zb] = natural_z_angles(p0, oc);
  p0.z_a = za;
  p0.z_b = zb;
  const CostValue c0 = orbit_cost(p0, oc);

  OptBounds bounds;
  bounds.lower.resize(6);
  bounds.upper.resize(6);
  bounds.lower << 0.7, std::max(0.0, t_plateau - 10.0), std::max(1.0, t_width - 5.0),
      p0.f_d - 0.005, za - kPi, zb - kPi;
  bounds.upper << 1.3, t_plateau + 10.0, t_width + 5.0, p0.f_d + 0.005, za + kPi, zb + kPi;

  OptOptions opts;
  opts.population = static_cast<int>(f.integer("population"));
  opts.max_evals = static_cast<int>(f.integer("max-evals"));
  opts.seed = ctx.seed;
  auto cost = [&](const VectorXd& x) { return orbit_cost(GateParams::from_vector(x), oc); };
  const OptResult res = optimize(cost, p0.to_vector(), bounds, opts);

  write_file(ctx, "optimize_trace.csv",
             csv_header_block(ctx) + trace_csv(res, GateParams::names()));
  ojson best;
  const auto& names = GateParams::names();
  for (std::size_t i = 0; i < names.size(); ++i) best[names[i]] = res.best_x(i);
  ojson body;
  body["mode"] = mode;
  body["eps_a_ghz"] = oc.eps_a;
  body["eps_b_ghz"] = oc.eps_b;
  body["start_cost"] = c0.cost;
  body["best_cost"] = res.best_cost;
  body["best"] = best;
  body["evaluations"] = res.trace.size();
  body["generations"] = res.generations;
  body["termination"] = res.termination;
  write_json(ctx, "optimize_best.json", body);
  ctx.result.summary = "best_cost=" + format_double(res.best_cost) + " start_cost=" +
                       format_double(c0.cost) + " termination=" + res.termination;
}

ojson rb_fit_json(const RbFit& fit, int d) {
  ojson j;
  j["p"] = fit.p;
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["c"] = fit.c;
  j["dp"] = fit.dp;
  j["da"] = fit.da;
  j["db"] = fit.db;
  j["dc"] = fit.dc;
  j["rms_residual"] = fit.rms_residual;
  j["weighted"] = fit.weighted;
  j["p_at_bound"] = fit.p_at_bound;
  j["clifford_fidelity"] = clifford_fidelity(fit.p, d);
  return j;
}

void cmd_rb_fit(Context& ctx, const Flags& f) {
  if (f.str("input").empty()) throw ValidationError("--input is required");
  const long d = f.integer("dimension");
  if (d != 2 && d != 4) throw ValidationError("--dimension must be 2 or 4");
  const RbCurve curve = read_rb_csv(f.str("input"));
  const RbFit fit = fit_rb(curve);
  ojson body;
  body["n_interleaved"] = curve.n_interleaved;
  body["fit"] = rb_fit_json(fit, static_cast<int>(d));
  std::string summary = "p=" + format_double(fit.p);
  if (!f.str("reference").empty()) {
    const RbFit ref = fit_rb(read_rb_csv(f.str("reference")));
    const InterleavedError ie = interleaved_error(fit.p, ref.p, static_cast<int>(d));
    body["reference"] = rb_fit_json(ref, static_cast<int>(d));
    body["interleaved_error"] = ie.error;
    body["interleaved_error_bar"] = rb_error_bar(fit.p, fit.dp, ref.p, ref.dp, static_cast<int>(d));
    body["interleaved_warning"] = ie.warning;
    summary += " interleaved_error=" + format_double(ie.error);
  }
  write_json(ctx, "rb_fit.json", body);
  ctx.result.summary = summary;
}

void cmd_readout(Context& ctx, const Flags& f) {
  const auto p = f.list("p");
  if (p.size() != 4) throw ValidationError("--p expects four populations p00,p10,p01,p11");
  ReadoutCal cal;
  cal.a_a = f.num("a-a");
  cal.b_a = f.num("b-a");
  cal.a_b = f.num("a-b");
  cal.b_b = f.num("b-b");
  cal.swap_b = f.num("swap-b");
  cal.swap_c = f.num("swap-c");
  const ReadoutResult r = readout_correct(Eigen::Vector4d(p[0], p[1], p[2], p[3]), cal);
  ojson body;
  body["order"] = {"p00", "p10", "p01", "p11"};
  body["raw"] = p;
  body["corrected"] = {r.p(0), r.p(1), r.p(2), r.p(3)};
  body["clamped"] = r.clamped;
  write_json(ctx, "readout.json", body);
  ctx.result.summary = "clamped=" + std::string(r.clamped ? "1" : "0");
}

void cmd_rate_fit(Context& ctx, const Flags& f) {
  const std::string path = f.str("input");
  if (path.empty()) throw ValidationError("--input is required");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> t, p1;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "t_ms,p1") throw ParseError(path + ":" + std::to_string(line_no) + ": expected header t_ms,p1");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    double a = 0.0, b = 0.0;
    bool ok = comma != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(line.data(), line.data() + comma, a);
      auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), b);
      ok = r1.ec == std::errc() && r2.ec == std::errc() && r2.ptr == line.data() + line.size();
    }
    if (!ok) throw ParseError(path + ":" + std::to_string(line_no) + ": expected two numbers");
    t.push_back(a);
    p1.push_back(b);
  }
  const RateFit fit = fit_rates(t, p1);
  ojson body;
  body["gamma_up_per_ms"] = fit.gamma_up;
  body["gamma_down_per_ms"] = fit.gamma_down;
  body["p1_0"] = fit.p1_0;
  body["d_gamma_up"] = fit.d_gamma_up;
  body["d_gamma_down"] = fit.d_gamma_down;
  body["d_p1_0"] = fit.d_p1_0;
  body["steady_state"] = fit.steady_state;
  body["rms_residual"] = fit.rms_residual;
  write_json(ctx, "rate_fit.json", body);
  ctx.result.summary = "steady_state=" + format_double(fit.steady_state);
}

void cmd_synth_rb(Context& ctx, const Flags& f) {
  const RbCurve c = synth_rb_curve(f.num("p"), f.num("a"), f.num("b"), f.num("c"), f.list("m"),
                                   f.num("sigma"), ctx.seed,
                                   static_cast<int>(f.integer("n-interleaved")));
  const std::string name = f.str("out-name");
  if (name.empty() || name.find('/') != std::string::npos) {
    throw ValidationError("--out-name must be a plain file name");
  }
  write_file(ctx, name, csv_header_block(ctx) + rb_csv(c));
  ctx.result.summary = "points=" + std::to_string(c.m_values.size());
}

}  // namespace

const std::vector<CommandInfo>& command_catalog() { return kCatalog; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

double parse_angle(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (ch != ' ') s += ch;
  }
  if (s.empty()) throw ValidationError("empty angle");
  const auto pos = s.find("pi");
  auto number = [&](const std::string& part, double fallback) {
    if (part.empty()) return fallback;
    if (part == "-") return -fallback;
    if (part == "+") return fallback;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw ValidationError("cannot parse angle '" + text + "'");
    }
    return v;
  };
  if (pos == std::string::npos) return number(s, 0.0);
  std::string pre = s.substr(0, pos);
  std::string post = s.substr(pos + 2);
  if (!pre.empty() && pre.back() == '*') pre.pop_back();
  double v = number(pre, 1.0) * kPi;
  if (!post.empty()) {
    if (post[0] != '/') throw ValidationError("cannot parse angle '" + text + "'");
    const double den = number(post.substr(1), 0.0);
    if (den == 0.0) throw ValidationError("zero denominator in angle '" + text + "'");
    v /= den;
  }
  return v;
}

CommandResult run_command(const CommandRequest& request) {
  const CommandInfo* info = nullptr;
  for (const auto& c : kCatalog) {
    if (c.name == request.name) info = &c;
  }
  if (!info) throw UnknownCommandError("unknown command '" + request.name + "'");

  const Flags flags(*info, request.flags);
  Context ctx;
  ctx.info = info;
  ctx.flags = &flags;
  ctx.seed = flags.seed();
  ctx.out_dir = request.out_dir.empty() ? "." : request.out_dir;

  if (info->needs_config) {
    const Loaded dev = load_device(request.config_path);
    ctx.hash = hex64(dev.cfg.hash());
    const std::string& n = info->name;
    if (n == "spectrum") cmd_spectrum(ctx, dev, flags);
    else if (n == "flux-sweep") cmd_flux_sweep(ctx, dev, flags);
    else if (n == "rabi-map") cmd_rabi_map(ctx, dev, flags);
    else if (n == "design") cmd_design(ctx, dev, flags);
    else if (n == "gate-error-vs-duration") cmd_duration(ctx, dev, flags);
    else if (n == "error-landscape") cmd_landscape(ctx, dev, flags);
    else if (n == "lindblad-error") cmd_lindblad(ctx, dev, flags);
    else if (n == "optimize") cmd_optimize(ctx, dev, flags);
  } else {
    if (!request.config_path.empty()) ctx.hash = hex64(load_config(request.config_path).hash());
    const std::string& n = info->name;
    if (n == "rb-fit") cmd_rb_fit(ctx, flags);
    else if (n == "readout-correct") cmd_readout(ctx, flags);
    else if (n == "rate-fit") cmd_rate_fit(ctx, flags);
    else if (n == "synth-rb") cmd_synth_rb(ctx, flags);
  }
  return ctx.result;
}

}  // namespace fluxcz
