#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fluxcz/types.hpp"

namespace fluxcz {

// Circuit energies (E/h, GHz) and external flux phase of one fluxonium.
struct FluxoniumParams {
  double e_c = 0.0;
  double e_l = 0.0;
  double e_j = 0.0;
  double phi_ext = kPi;

  void validate() const;
};

struct SingleModeOptions {
  int n_basis = 80;
  int n_keep = 10;
  // Rebuild at 2*n_basis and require every retained level to agree to
  // convergence_tol * max(|E|, 1 GHz).
  bool check_convergence = true;
  double convergence_tol = 1e-7;
};

// One fluxonium reduced to its lowest eigenstates.
struct SingleMode {
  FluxoniumParams params;
  int n_basis = 0;
  VectorXd energies;  // ascending, ground state at 0
  MatrixXc phase_op;  // <i|phi|j>
  MatrixXc charge_op; // <i|n|j>

  int size() const { return static_cast<int>(energies.size()); }
  double transition(int i, int j) const { return energies(j) - energies(i); }
  double charge_element(int i, int j) const { return std::abs(charge_op(i, j)); }
};

// Bare product label |ij>, i for qubit A and j for qubit B.
struct BareLabel {
  int a = 0;
  int b = 0;
  friend bool operator==(const BareLabel&, const BareLabel&) = default;
  std::string str() const;
};

// Labels every dressed state of the coupled system must carry.
inline constexpr std::array<BareLabel, 8> kRequiredLabels = {
    BareLabel{0, 0}, BareLabel{0, 1}, BareLabel{1, 0}, BareLabel{1, 1},
    BareLabel{2, 0}, BareLabel{0, 2}, BareLabel{2, 1}, BareLabel{1, 2}};

struct JointSystem {
  SingleMode mode_a;
  SingleMode mode_b;
  double j_c = 0.0;
  int m_trunc = 0;
  VectorXd energies;  // ascending dressed energies, ground at 0, length m_trunc
  MatrixXc charge_a;  // n_A in the dressed basis, m_trunc x m_trunc
  MatrixXc charge_b;
  // label_map[k] is the bare label of dressed state k, if assigned.
  std::vector<std::optional<BareLabel>> label_map;
  // Squared overlap of each dressed state with its assigned bare state.
  std::vector<double> label_overlap;

  int dim() const { return m_trunc; }
  // Dressed index of a bare label; throws LabelingError when unassigned.
  int index_of(BareLabel label) const;
  std::optional<int> find(BareLabel label) const;
  double energy(BareLabel label) const { return energies(index_of(label)); }
  // Dressed indices of |00>, |01>, |10>, |11> in that order.
  std::array<int, 4> computational_indices() const;
};

struct SpectrumSummary {
  double f_a = 0.0;        // |00>-|10>
  double f_b = 0.0;        // |00>-|01>
  double f_10_20 = 0.0;
  double f_11_21 = 0.0;
  double delta = 0.0;      // |f_11_21 - f_10_20|
  int delta_sign = 1;      // sign of f_11_21 - f_10_20
  double xi_zz = 0.0;      // E00 + E11 - E01 - E10, signed
  double n01_a = 0.0;
  double n12_a = 0.0;
  double n01_b = 0.0;
  double n12_b = 0.0;
};

// Device description: two fluxoniums and their capacitive coupling.
struct DeviceParams {
  FluxoniumParams qubit_a;
  FluxoniumParams qubit_b;
  double j_c = 0.0;
};

struct DeviceNumerics {
  SingleModeOptions single;
  int m_trunc = 20;
};

SingleMode build_fluxonium(const FluxoniumParams& params, const SingleModeOptions& options = {});

JointSystem build_joint(const SingleMode& a, const SingleMode& b, double j_c, int m_trunc);

JointSystem build_device(const DeviceParams& device, const DeviceNumerics& numerics = {});

SpectrumSummary spectrum_summary(const JointSystem& joint);

// Energy of the lowest labeled non-computational level above |11>.
double gap_above_computational(const JointSystem& joint);

struct FluxSweepRow {
  double flux = 0.0;  // qubit A flux; qubit B sits at flux + offset
  bool ok = false;
  std::string error;
  SpectrumSummary summary;
};

std::vector<FluxSweepRow> flux_sweep(const DeviceParams& device,
                                     const std::vector<double>& flux_grid,
                                     double flux_offset,
                                     const DeviceNumerics& numerics = {});

namespace detail {
// Oscillator-basis operators for one mode, exposed for tests.
struct OscillatorBasis {
  double phi_zpf = 0.0;
  double n_zpf = 0.0;
  MatrixXd phase;          // phi, real symmetric
  MatrixXd charge_over_i;  // n / i, real antisymmetric
};
OscillatorBasis oscillator_basis(double e_c, double e_l, int n_basis);
MatrixXd fluxonium_hamiltonian(const FluxoniumParams& params, int n_basis);
}  // namespace detail

}  // namespace fluxcz
