#include "fluxcz/fluxcz.h"

#include <exception>
#include <new>
#include <string>

#include "fluxcz/commands.hpp"
#include "fluxcz/config.hpp"
#include "fluxcz/device_model.hpp"
#include "fluxcz/errors.hpp"
#include "fluxcz/gate_design.hpp"
#include "fluxcz/metrology.hpp"
#include "fluxcz/propagator.hpp"

struct fluxcz_device {
  fluxcz::DeviceConfig cfg;
  fluxcz::JointSystem joint;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_summary;

template <class F>
int guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return FLUXCZ_OK;
  } catch (const fluxcz::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FLUXCZ_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FLUXCZ_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return FLUXCZ_E_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw fluxcz::InvalidArgumentError(std::string(what) + " is null");
}

const fluxcz::CommandInfo& command_at(size_t index) {
  const auto& cat = fluxcz::command_catalog();
  if (index >= cat.size()) throw fluxcz::InvalidArgumentError("command index out of range");
  return cat[index];
}

int load_device(fluxcz_device** out, const fluxcz::DeviceConfig& cfg) {
  auto* d = new fluxcz_device;
  try {
    d->cfg = cfg;
    d->joint = fluxcz::build_device(cfg.device, cfg.numerics);
  } catch (...) {
    delete d;
    throw;
  }
  *out = d;
  return 0;
}

}  // namespace

extern "C" {

const char* fluxcz_version(void) { return "0.1.0"; }

const char* fluxcz_status_name(int status) {
  return fluxcz::error_code_name(static_cast<fluxcz::ErrorCode>(status));
}

const char* fluxcz_last_error(void) { return g_last_error.c_str(); }
const char* fluxcz_last_summary(void) { return g_last_summary.c_str(); }

int fluxcz_device_load(const char* path, fluxcz_device** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    load_device(out, fluxcz::load_config(path));
  });
}

int fluxcz_device_from_json(const char* text, fluxcz_device** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    load_device(out, fluxcz::parse_config(text));
  });
}

void fluxcz_device_free(fluxcz_device* device) { delete device; }

int fluxcz_device_hash(const fluxcz_device* device, uint64_t* out) {
  return guarded([&] {
    require(device, "device");
    require(out, "out");
    *out = device->cfg.hash();
  });
}

int fluxcz_device_spectrum(const fluxcz_device* device, fluxcz_spectrum* out) {
  return guarded([&] {
    require(device, "device");
    require(out, "out");
    const auto s = fluxcz::spectrum_summary(device->joint);
    out->f_a = s.f_a;
    out->f_b = s.f_b;
    out->f_10_20 = s.f_10_20;
    out->f_11_21 = s.f_11_21;
    out->delta = s.delta;
    out->delta_sign = s.delta_sign;
    out->xi_zz = s.xi_zz;
    out->gap_above_computational = fluxcz::gap_above_computational(device->joint);
  });
}

int fluxcz_device_simulate(const fluxcz_device* device, const fluxcz_pulse* pulse, double tol,
                           fluxcz_gate* out) {
  return guarded([&] {
    require(device, "device");
    require(pulse, "pulse");
    require(out, "out");
    fluxcz::PulseSpec p;
    p.eps_a = pulse->eps_a;
    p.eps_b = pulse->eps_b;
    p.f_d = pulse->f_d;
    p.t_width = pulse->t_width;
    p.t_plateau = pulse->t_plateau;
    const auto g = fluxcz::simulate_gate(device->joint, p, tol);
    out->fidelity = g.fidelity;
    out->p_leak = g.p_leak;
    out->delta_phi = g.delta_phi;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        out->u_re[4 * i + j] = g.u_comp(i, j).real();
        out->u_im[4 * i + j] = g.u_comp(i, j).imag();
      }
    }
  });
}

int fluxcz_sync_parameters(double delta, double r, double target_phase, double f_11_21,
                           fluxcz_sync* out) {
  return guarded([&] {
    require(out, "out");
    const auto s = fluxcz::sync_parameters(delta, r, target_phase, f_11_21);
    out->delta = s.delta;
    out->r = s.r;
    out->target_phase = s.target_phase;
    out->delta_detuning = s.delta_detuning;
    out->omega = s.omega;
    out->omega_10_20 = s.omega_10_20;
    out->omega_11_21 = s.omega_11_21;
    out->t_gate_ideal = s.t_gate_ideal;
    out->f_d = s.f_d;
  });
}

int fluxcz_rb_fit_curve(const double* m, const double* survival, const double* std, size_t n,
                        fluxcz_rb_fit* out) {
  return guarded([&] {
    require(m, "m");
    require(survival, "survival");
    require(out, "out");
    fluxcz::RbCurve c;
    c.m_values.assign(m, m + n);
    c.survival.assign(survival, survival + n);
    c.std = std ? std::vector<double>(std, std + n) : std::vector<double>(n, 0.0);
    const auto f = fluxcz::fit_rb(c);
    *out = fluxcz_rb_fit{f.p,  f.a,  f.b,  f.c, f.dp, f.da, f.db, f.dc, f.rms_residual,
                         f.weighted ? 1 : 0, f.p_at_bound ? 1 : 0};
  });
}

int fluxcz_readout_correct(const double* p_raw, const fluxcz_readout_cal* cal, double* p_out,
                           int* clamped) {
  return guarded([&] {
    require(p_raw, "p_raw");
    require(cal, "cal");
    require(p_out, "p_out");
    fluxcz::ReadoutCal c;
    c.a_a = cal->a_a;
    c.b_a = cal->b_a;
    c.a_b = cal->a_b;
    c.b_b = cal->b_b;
    c.swap_b = cal->swap_b;
    c.swap_c = cal->swap_c;
    const auto r =
        fluxcz::readout_correct(Eigen::Vector4d(p_raw[0], p_raw[1], p_raw[2], p_raw[3]), c);
    for (int i = 0; i < 4; ++i) p_out[i] = r.p(i);
    if (clamped) *clamped = r.clamped ? 1 : 0;
  });
}

size_t fluxcz_command_count(void) { return fluxcz::command_catalog().size(); }

const char* fluxcz_command_name(size_t index) {
  const auto& cat = fluxcz::command_catalog();
  return index < cat.size() ? cat[index].name.c_str() : nullptr;
}

const char* fluxcz_command_help(size_t index) {
  const auto& cat = fluxcz::command_catalog();
  return index < cat.size() ? cat[index].help.c_str() : nullptr;
}

int fluxcz_command_needs_config(size_t index) {
  const auto& cat = fluxcz::command_catalog();
  return index < cat.size() && cat[index].needs_config ? 1 : 0;
}

size_t fluxcz_command_flag_count(size_t index) {
  const auto& cat = fluxcz::command_catalog();
  return index < cat.size() ? cat[index].flags.size() : 0;
}

int fluxcz_command_flag(size_t index, size_t flag, const char** name, const char** default_value,
                        const char** help) {
  return guarded([&] {
    const auto& c = command_at(index);
    if (flag >= c.flags.size()) throw fluxcz::InvalidArgumentError("flag index out of range");
    if (name) *name = c.flags[flag].name.c_str();
    if (default_value) *default_value = c.flags[flag].default_value.c_str();
    if (help) *help = c.flags[flag].help.c_str();
  });
}

int fluxcz_run_command(const char* name, const char* config_path, const char* const* keys,
                       const char* const* values, size_t n_flags, const char* out_dir) {
  g_last_summary.clear();
  return guarded([&] {
    require(name, "name");
    if (n_flags > 0) {
      require(keys, "keys");
      require(values, "values");
    }
    fluxcz::CommandRequest req;
    req.name = name;
    if (config_path) req.config_path = config_path;
    if (out_dir) req.out_dir = out_dir;
    for (size_t i = 0; i < n_flags; ++i) {
      require(keys[i], "flag key");
      require(values[i], "flag value");
      req.flags[keys[i]] = values[i];
    }
    g_last_summary = fluxcz::run_command(req).summary;
  });
}

}  // extern "C"
