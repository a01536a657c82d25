#include "qtree/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtree/error.hpp"
#include "qtree/parallel.hpp"

namespace qtree {

namespace {

constexpr cplx kI{0.0, 1.0};

double cot_exact(double angle) {
  if (angle == std::numbers::pi / 2) return 0.0;
  return std::cos(angle) / std::sin(angle);
}

struct PointValue {
  cplx G;
  cplx R_plus;
  cplx r;
};

std::optional<PointValue> evaluate_point(const TreeSpec& spec, const DisorderModel& dm,
                                         const HalfPlanePoint& z, std::uint64_t replica,
                                         const DensityOptions& options) {
  if (options.location == DensityLocation::root) {
    const WtValue Rp = solve_root_R(spec, dm, z, options.seed_m, replica, options.solve);
    const auto G = green_root(Rp, spec.alpha);
    if (!G) return std::nullopt;
    const WtValue Rm =
        spec.alpha == 0.0 ? WtValue::infinite() : WtValue{cplx{-cot_exact(spec.alpha), 0.0}};
    return PointValue{*G, Rp.R, reflection_coeff(Rp, Rm, z)};
  }
  const WtValue Rp = solve_R_plus(spec, dm, z, options.target, options.position, replica,
                                  options.seed_m, options.solve);
  const WtValue Rm = solve_R_minus(spec, dm, z, options.target, options.position, replica,
                                   options.seed_m, options.solve);
  const auto G = green_diag(Rp, Rm);
  if (!G) return std::nullopt;
  return PointValue{*G, Rp.R, reflection_coeff(Rp, Rm, z)};
}

}  // namespace

std::optional<cplx> green_diag(WtValue R_plus, WtValue R_minus) {
  if (R_plus.is_infinite() || R_minus.is_infinite()) return cplx{0.0, 0.0};
  const cplx S = R_plus.R + R_minus.R;
  if (S == cplx{0.0, 0.0}) return std::nullopt;
  return -1.0 / S;
}

std::optional<cplx> green_root(WtValue R_plus, double alpha) {
  if (alpha == 0.0 || R_plus.is_infinite()) return cplx{0.0, 0.0};
  const cplx d = cot_exact(alpha) - R_plus.R;
  if (d == cplx{0.0, 0.0}) return std::nullopt;
  return 1.0 / d;
}

cplx reflection_coeff(WtValue R_plus, WtValue R_minus, const HalfPlanePoint& z) {
  if (R_plus.is_infinite() || R_minus.is_infinite()) return {-1.0, 0.0};
  const cplx iw = kI * sqrt_upper(z).w;
  const cplx S = R_plus.R + R_minus.R;
  const cplx d = iw + S;
  if (d == cplx{0.0, 0.0}) throw SingularError("reflection coefficient: i sqrt(z) + S = 0");
  return (iw - S) / d;
}

cplx edge_psi_ratio(WtValue R0, double l, const HalfPlanePoint& z) {
  const cplx w = sqrt_upper(z).w;
  if (l == 0.0) return {1.0, 0.0};
  const cplx s = std::sin(w * l);
  const cplx s_over_w = w == cplx{0.0, 0.0} ? cplx{l, 0.0} : s / w;
  return std::cos(w * l) + R0.R * s_over_w;
}

std::pair<double, double> psi_ratio_bounds(WtValue R0, WtValue R_l, double l,
                                           const HalfPlanePoint& z) {
  const double root_abs_z = std::sqrt(std::abs(z.z()));
  const double grow = std::exp(root_abs_z * l);
  return {1.0 / (grow * (1.0 + std::abs(R_l.R) / root_abs_z)),
          grow * (1.0 + std::abs(R0.R) / root_abs_z)};
}

Current current(WtValue R, double psi_ratio_sq, double position) {
  return {psi_ratio_sq * R.R.imag(), position};
}

std::vector<DensityPoint> spectral_density(const TreeSpec& spec, const DisorderModel& dm,
                                           const std::vector<double>& E_grid, double eta,
                                           std::uint64_t replica, const DensityOptions& options) {
  spec.validate();
  dm.validate();
  const bool extrapolate = !options.ladder.empty();
  if (extrapolate) {
    if (options.ladder.size() < 2) throw ValidationError("density ladder needs two or more etas");
    for (double e : options.ladder) {
      if (!(e > 0.0)) throw ValidationError("density ladder etas must be > 0");
    }
  } else if (!(eta > 0.0)) {
    throw ValidationError("spectral_density: requires eta > 0");
  }

  std::vector<DensityPoint> out(E_grid.size());
  parallel_for(E_grid.size(), options.threads, [&](std::size_t i) {
    DensityPoint& p = out[i];
    p.E = E_grid[i];
    p.eta = extrapolate ? 0.0 : eta;
    try {
      if (!extrapolate) {
        const auto v = evaluate_point(spec, dm, {p.E, eta}, replica, options);
        if (!v) {
          p.status = "pole";
          return;
        }
        p.rho = v->G.imag() / std::numbers::pi;
        p.R_plus = v->R_plus;
        p.abs_r = std::abs(v->r);
        return;
      }
      std::vector<cplx> rhos;
      std::optional<PointValue> last;
      for (double e : options.ladder) {
        last = evaluate_point(spec, dm, {p.E, e}, replica, options);
        if (!last) {
          p.status = "pole";
          return;
        }
        rhos.push_back(cplx{last->G.imag() / std::numbers::pi, 0.0});
      }
      // A limit of nonnegative values is nonnegative; the linear fit can
      // overshoot below zero by its own error.
      p.rho = std::max(0.0, extrapolate_to_boundary(options.ladder, rhos).real());
      const std::size_t smallest = static_cast<std::size_t>(
          std::min_element(options.ladder.begin(), options.ladder.end()) - options.ladder.begin());
      const auto v = evaluate_point(spec, dm, {p.E, options.ladder[smallest]}, replica, options);
      p.R_plus = v ? v->R_plus : cplx{};
      p.abs_r = v ? std::abs(v->r) : 0.0;
    } catch (const Error& e) {
      p.status = e.what();
    }
  });
  return out;
}

TreeCurrents tree_currents(const TreeSolution& sol, const VertexBc& bc) {
  const std::size_t n = sol.size();
  TreeCurrents tc;
  tc.psi_near.resize(n);
  tc.psi_far.resize(n);
  tc.R_near.resize(n);
  tc.R_far.resize(n);
  tc.J_near.resize(n);
  tc.J_far.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tc.R_near[i] = r_from_m(sol.m_near[i], sol.z).R;
    if (i == 0) {
      tc.psi_near[i] = {1.0, 0.0};
    } else {
      const std::size_t p = sol.parent(i);
      tc.psi_near[i] = tc.psi_far[p] * vertex_psi_jump({tc.R_far[p]}, {tc.R_near[i]}, bc);
    }
    tc.R_far[i] = edge_step_R({tc.R_near[i]}, sol.length[i], sol.z).R;
    tc.psi_far[i] = tc.psi_near[i] * edge_psi_ratio({tc.R_near[i]}, sol.length[i], sol.z);
    tc.J_near[i] = current({tc.R_near[i]}, std::norm(tc.psi_near[i])).J;
    tc.J_far[i] = current({tc.R_far[i]}, std::norm(tc.psi_far[i]), sol.length[i]).J;
  }
  return tc;
}

}  // namespace qtree
