#pragma once

// Quantities built from WT values: Green function diagonal, spectral density,
// reflection coefficient, wavefunction ratios along edges and currents.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtree/graph_model.hpp"
#include "qtree/wt_engine.hpp"

namespace qtree {

/// G(x, x; z) = -1 / (R^+ + R^-). nullopt when R^+ + R^- = 0 (a pole).
std::optional<cplx> green_diag(WtValue R_plus, WtValue R_minus);

/// G(0, 0; z) = 1 / (cot(alpha) - R^+) at the root. Dirichlet (alpha = 0)
/// gives 0.
std::optional<cplx> green_root(WtValue R_plus, double alpha);

/// r = (i w - S) / (i w + S), S = R^+ + R^-. An infinite R^- gives r = -1.
cplx reflection_coeff(WtValue R_plus, WtValue R_minus, const HalfPlanePoint& z);

/// psi(l) / psi(0) = cos(w l) + R0 sin(w l) / w.
cplx edge_psi_ratio(WtValue R0, double l, const HalfPlanePoint& z);

/// Two-sided bound on |psi(l)/psi(0)| in terms of |R(l)| and |R(0)|.
std::pair<double, double> psi_ratio_bounds(WtValue R0, WtValue R_l, double l,
                                           const HalfPlanePoint& z);

struct Current {
  double J = 0.0;
  double position = 0.0;
};

/// J = |psi|^2 Im R.
Current current(WtValue R, double psi_ratio_sq, double position = 0.0);

enum class DensityLocation { root, interior };

struct DensityOptions {
  DensityLocation location = DensityLocation::root;
  /// Interior point (location == interior).
  EdgeAddress target;
  double position = 0.0;
  /// Extrapolate rho to eta = 0 over this ladder instead of using `eta`.
  std::vector<double> ladder;
  DiskValue seed_m{};
  SolveOptions solve{};
  int threads = 1;
};

struct DensityPoint {
  double E = 0.0;
  /// eta of the evaluation, 0 for an extrapolated point.
  double eta = 0.0;
  double rho = 0.0;
  /// R^+ at the report location (at the smallest ladder eta when extrapolating).
  cplx R_plus{};
  double abs_r = 0.0;
  /// "ok", or the error message for points that failed.
  std::string status = "ok";
  bool ok() const { return status == "ok"; }
};

/// pi^-1 Im G at the root or at an interior point for every E of the grid.
/// Failures are recorded per point.
std::vector<DensityPoint> spectral_density(const TreeSpec& spec, const DisorderModel& dm,
                                           const std::vector<double>& E_grid, double eta,
                                           std::uint64_t replica,
                                           const DensityOptions& options = {});

/// psi, R and current at both ends of every edge of a solved tree, with psi = 1
/// at the root. R at the far end comes from the forward edge map, not from the
/// merge, so vertex conservation is a genuine check.
struct TreeCurrents {
  std::vector<cplx> psi_near;
  std::vector<cplx> psi_far;
  std::vector<cplx> R_near;
  std::vector<cplx> R_far;
  std::vector<double> J_near;
  std::vector<double> J_far;
};

TreeCurrents tree_currents(const TreeSolution& sol, const VertexBc& bc);

}  // namespace qtree
