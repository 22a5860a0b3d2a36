#pragma once

// Adaptive eighth-order Dormand-Prince integrator (DOP853, Hairer & Wanner)
// for dense Eigen states, real or complex. Dense output is not provided; the
// caller integrates segment by segment when intermediate samples are needed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "fluxcz/errors.hpp"

namespace fluxcz::ode {

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 2'000'000;
};

struct Stats {
  long steps = 0;
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

namespace detail {

// Butcher tableau of DOP853.
inline constexpr double c2 = 0.526001519587677318785587544488E-01;
inline constexpr double c3 = 0.789002279381515978178381316732E-01;
inline constexpr double c4 = 0.118350341907227396726757197510E+00;
inline constexpr double c5 = 0.281649658092772603273242802490E+00;
inline constexpr double c6 = 0.333333333333333333333333333333E+00;
inline constexpr double c7 = 0.25E+00;
inline constexpr double c8 = 0.307692307692307692307692307692E+00;
inline constexpr double c9 = 0.651282051282051282051282051282E+00;
inline constexpr double c10 = 0.6E+00;
inline constexpr double c11 = 0.857142857142857142857142857142E+00;

inline constexpr double b1 = 5.42937341165687622380535766363E-2;
inline constexpr double b6 = 4.45031289275240888144113950566E0;
inline constexpr double b7 = 1.89151789931450038304281599044E0;
inline constexpr double b8 = -5.8012039600105847814672114227E0;
inline constexpr double b9 = 3.1116436695781989440891606237E-1;
inline constexpr double b10 = -1.52160949662516078556178806805E-1;
inline constexpr double b11 = 2.01365400804030348374776537501E-1;
inline constexpr double b12 = 4.47106157277725905176885569043E-2;

inline constexpr double bhh1 = 0.244094488188976377952755905512E+00;
inline constexpr double bhh2 = 0.733846688281611857341361741547E+00;
inline constexpr double bhh3 = 0.220588235294117647058823529412E-01;

inline constexpr double er1 = 0.1312004499419488073250102996E-01;
inline constexpr double er6 = -0.1225156446376204440720569753E+01;
inline constexpr double er7 = -0.4957589496572501915214079952E+00;
inline constexpr double er8 = 0.1664377182454986536961530415E+01;
inline constexpr double er9 = -0.3503288487499736816886487290E+00;
inline constexpr double er10 = 0.3341791187130174790297318841E+00;
inline constexpr double er11 = 0.8192320648511571246570742613E-01;
inline constexpr double er12 = -0.2235530786388629525884427845E-01;

inline constexpr double a21 = 5.26001519587677318785587544488E-2;
inline constexpr double a31 = 1.97250569845378994544595329183E-2;
inline constexpr double a32 = 5.91751709536136983633785987549E-2;
inline constexpr double a41 = 2.95875854768068491816892993775E-2;
inline constexpr double a43 = 8.87627564304205475450678981324E-2;
inline constexpr double a51 = 2.41365134159266685502369798665E-1;
inline constexpr double a53 = -8.84549479328286085344864962717E-1;
inline constexpr double a54 = 9.24834003261792003115737966543E-1;
inline constexpr double a61 = 3.7037037037037037037037037037E-2;
inline constexpr double a64 = 1.70828608729473871279604482173E-1;
inline constexpr double a65 = 1.25467687566822425016691814123E-1;
inline constexpr double a71 = 3.7109375E-2;
inline constexpr double a74 = 1.70252211019544039314978060272E-1;
inline constexpr double a75 = 6.02165389804559606850219397283E-2;
inline constexpr double a76 = -1.7578125E-2;
inline constexpr double a81 = 3.70920001185047927108779319836E-2;
inline constexpr double a84 = 1.70383925712239993810214054705E-1;
inline constexpr double a85 = 1.07262030446373284651809199168E-1;
inline constexpr double a86 = -1.53194377486244017527936158236E-2;
inline constexpr double a87 = 8.27378916381402288758473766002E-3;
inline constexpr double a91 = 6.24110958716075717114429577812E-1;
inline constexpr double a94 = -3.36089262944694129406857109825E0;
inline constexpr double a95 = -8.68219346841726006818189891453E-1;
inline constexpr double a96 = 2.75920996994467083049415600797E1;
inline constexpr double a97 = 2.01540675504778934086186788979E1;
inline constexpr double a98 = -4.34898841810699588477366255144E1;
inline constexpr double a101 = 4.77662536438264365890433908527E-1;
inline constexpr double a104 = -2.48811461997166764192642586468E0;
inline constexpr double a105 = -5.90290826836842996371446475743E-1;
inline constexpr double a106 = 2.12300514481811942347288949897E1;
inline constexpr double a107 = 1.52792336328824235832596922938E1;
inline constexpr double a108 = -3.32882109689848629194453265587E1;
inline constexpr double a109 = -2.03312017085086261358222928593E-2;
inline constexpr double a111 = -9.3714243008598732571704021658E-1;
inline constexpr double a114 = 5.18637242884406370830023853209E0;
inline constexpr double a115 = 1.09143734899672957818500254654E0;
inline constexpr double a116 = -8.14978701074692612513997267357E0;
inline constexpr double a117 = -1.85200656599969598641566180701E1;
inline constexpr double a118 = 2.27394870993505042818970056734E1;
inline constexpr double a119 = 2.49360555267965238987089396762E0;
inline constexpr double a1110 = -3.0467644718982195003823669022E0;
inline constexpr double a121 = 2.27331014751653820792359768449E0;
inline constexpr double a124 = -1.05344954667372501984066689879E1;
inline constexpr double a125 = -2.00087205822486249909675718444E0;
inline constexpr double a126 = -1.79589318631187989172765950534E1;
inline constexpr double a127 = 2.79488845294199600508499808837E1;
inline constexpr double a128 = -2.85899827713502369474065508674E0;
inline constexpr double a129 = -8.87285693353062954433549289258E0;
inline constexpr double a1210 = 1.23605671757943030647266201528E1;
inline constexpr double a1211 = 6.43392746015763530355970484046E-1;

}  // namespace detail

// Integrates dy/dt = f(t, y) from t0 to t1 in place. `f` is called as
// f(t, y, dydt) and must fully overwrite dydt.
template <class State, class Rhs>
Stats integrate(Rhs&& f, double t0, double t1, State& y, const Options& opt = {}) {
  using namespace detail;
  Stats stats;
  if (t1 == t0) return stats;
  if (!(t1 > t0)) throw InvalidArgumentError("dop853: t1 must exceed t0");

  const double n = static_cast<double>(y.size());
  const double uround = 2.3e-16;
  const double safe = 0.9, fac1 = 0.333, fac2 = 6.0;
  const double expo1 = 1.0 / 8.0;
  const double h_max = std::min(opt.h_max, t1 - t0);

  State k1(y), k2(y), k3(y), k4(y), k5(y), k6(y), k7(y), k8(y), k9(y), k10(y);
  State tmp(y);

  auto weight = [&](const State& a, const State& b) {
    return (opt.atol + opt.rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).eval();
  };

  double t = t0;
  f(t, y, k1);
  ++stats.evaluations;

  // Initial step guess (Hairer's hinit).
  double h;
  {
    auto sk = (opt.atol + opt.rtol * y.cwiseAbs().array()).eval();
    const double dnf = (k1.cwiseAbs().array() / sk).square().sum();
    const double dny = (y.cwiseAbs().array() / sk).square().sum();
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, h_max);
    tmp = y + h * k1;
    f(t + h, tmp, k2);
    ++stats.evaluations;
    const double der2 = std::sqrt(((k2 - k1).cwiseAbs().array() / sk).square().sum()) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / 8.0);
    h = std::min({100.0 * h, h1, h_max});
  }

  bool last = false;
  bool rejected_previous = false;
  while (true) {
    if (stats.steps >= opt.max_steps) {
      throw IntegrationError("dop853: step budget exhausted at t=" + std::to_string(t), t);
    }
    if (0.1 * std::abs(h) <= std::abs(t) * uround) {
      throw IntegrationError("dop853: step size underflow at t=" + std::to_string(t), t);
    }
    if (t + 1.01 * h - t1 > 0.0) {
      h = t1 - t;
      last = true;
    }
    ++stats.steps;

    tmp = y + h * a21 * k1;
    f(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a43 * k3);
    f(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a53 * k3 + a54 * k4);
    f(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a64 * k4 + a65 * k5);
    f(t + c6 * h, tmp, k6);
    tmp = y + h * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t + c7 * h, tmp, k7);
    tmp = y + h * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
    f(t + c8 * h, tmp, k8);
    tmp = y + h * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
    f(t + c9 * h, tmp, k9);
    tmp = y + h * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 +
                   a108 * k8 + a109 * k9);
    f(t + c10 * h, tmp, k10);
    tmp = y + h * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 +
                   a118 * k8 + a119 * k9 + a1110 * k10);
    f(t + c11 * h, tmp, k2);
    const double t_new = last ? t1 : t + h;
    tmp = y + h * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 +
                   a128 * k8 + a129 * k9 + a1210 * k10 + a1211 * k2);
    f(t_new, tmp, k3);
    stats.evaluations += 11;

    k4 = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k2 + b12 * k3;
    k5 = y + h * k4;

    // Combined fifth/third order error estimate.
    const auto sk = weight(y, k5);
    const double err5 =
        ((er1 * k1 + er6 * k6 + er7 * k7 + er8 * k8 + er9 * k9 + er10 * k10 + er11 * k2 +
          er12 * k3)
             .cwiseAbs()
             .array() /
         sk)
            .square()
            .sum();
    const double err3 =
        ((k4 - bhh1 * k1 - bhh2 * k9 - bhh3 * k3).cwiseAbs().array() / sk).square().sum();
    double deno = err5 + 0.01 * err3;
    if (deno <= 0.0) deno = 1.0;
    const double err = std::abs(h) * err5 * std::sqrt(1.0 / (deno * n));

    double fac = std::pow(err, expo1) / safe;
    fac = std::max(1.0 / fac2, std::min(1.0 / fac1, fac));
    double h_new = h / fac;

    if (!std::isfinite(err)) {
      throw IntegrationError("dop853: non-finite error estimate at t=" + std::to_string(t), t);
    }
    if (err <= 1.0) {
      ++stats.accepted;
      y = k5;
      t = t_new;
      if (last) break;
      f(t, y, k1);
      ++stats.evaluations;
      h_new = std::min(h_new, h_max);
      if (rejected_previous) h_new = std::min(h_new, h);
      rejected_previous = false;
      h = h_new;
    } else {
      ++stats.rejected;
      rejected_previous = true;
      last = false;
      h = h / std::min(1.0 / fac1, std::pow(err, expo1) / safe);
    }
  }
  return stats;
}

}  // namespace fluxcz::ode
