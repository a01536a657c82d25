#pragma once

// Weyl-Titchmarsh recursion on rooted metric trees.
//
// R^+(x; z) is the forward log-derivative psi'/psi of the square-integrable
// solution on the subtree beyond x. Along an edge it obeys the Riccati flow
// R' = -z - R^2; across a vertex the forward values of the child edges
// combine according to the vertex condition (their sum, for Kirchhoff).
//
// The engine propagates in the disk variable m = (R - i w)/(R + i w),
// w = sqrt(z) with Im w > 0, in which the edge step is multiplication by
// exp(2 i w l) and therefore a contraction for Im z > 0. The R form of the
// edge step (a Mobius map) is kept for cross-checks.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qtree/graph_model.hpp"

namespace qtree {

using cplx = std::complex<double>;

/// Spectral parameter z = E + i eta.
///
/// eta == 0 marks boundary mode: values there mean E + i0 limits and are only
/// reached by extrapolation over a decreasing eta ladder, never by direct
/// recursion.
struct HalfPlanePoint {
  double E = 0.0;
  double eta = 0.0;

  cplx z() const { return {E, eta}; }
  bool boundary_mode() const { return eta == 0.0; }
};

/// Throws ValidationError unless eta > 0.
void require_interior(const HalfPlanePoint& z, const char* what);

/// Branch of sqrt(z) with Im w > 0 (Im w == 0 only for boundary points E > 0).
struct SqrtZ {
  cplx w;
};

struct WtValue {
  cplx R;

  /// Distinguished value for R = infinity (psi vanishes at the point).
  static WtValue infinite();
  bool is_infinite() const;
};

struct DiskValue {
  cplx m;
};

SqrtZ sqrt_upper(const HalfPlanePoint& z);

/// m at the near end of an edge of length `length` given m at its far end.
DiskValue edge_step_m(DiskValue m_far, double length, const HalfPlanePoint& z);

/// m at the far end of a parent edge from the near-end values of its children
/// (Kirchhoff vertex): g(sum (1+m)/(1-m)) with g(x) = (x-1)/(x+1).
DiskValue vertex_merge_m(std::span<const DiskValue> children, const HalfPlanePoint& z);

DiskValue m_from_r(WtValue R, const HalfPlanePoint& z);
WtValue r_from_m(DiskValue m, const HalfPlanePoint& z);

/// Forward Mobius step R(0) -> R(l) along an edge.
WtValue edge_step_R(WtValue R0, double l, const HalfPlanePoint& z);

/// Rotation -1 / (cot(beta) + R). beta == 0 returns R unchanged (the Kirchhoff
/// configuration does not use the rotated variables).
WtValue symmetric_tilde(WtValue R, double beta_v);
/// Inverse rotation -1/R~ - cot(beta).
WtValue symmetric_untilde(WtValue R_tilde, double beta_v);

/// Given the outward log-derivatives d_n psi / psi of all but one edge at a
/// vertex (outward = pointing into the edge), returns the missing one.
cplx vertex_missing_slope(std::span<const cplx> known, const VertexBc& bc);

/// R^+ at the far end of the parent edge from the children's R^+(0).
WtValue vertex_merge_R(std::span<const WtValue> children, const VertexBc& bc);

/// psi_child(0) / psi_parent(L) across a vertex: 1 for continuous vertex
/// conditions, (cot b - R_parent(L)) / (cot b + R_child(0)) otherwise.
cplx vertex_psi_jump(WtValue parent_far, WtValue child_near, const VertexBc& bc);

/// Ratio of the rotated amplitudes psi~ = (cot b + R) psi between the common
/// vertex value at an edge's far end and the edge's own near end, divided by
/// psi(L)/psi(0): (cot b - R(L)) / (cot b + R(0)). Equals 1 for continuous
/// vertex conditions.
cplx tilde_edge_factor(WtValue R_far, WtValue R_near, const VertexBc& bc);

struct SolveOptions {
  /// Upper bound on edges visited by one solve.
  std::uint64_t visit_budget = std::uint64_t{1} << 24;
  /// At lambda == 0 all subtrees of one generation coincide; evaluate one per
  /// generation (bit-identical to the full traversal).
  bool collapse_regular = true;
  /// When set, receives the number of edges visited.
  std::uint64_t* visited = nullptr;
};

/// Number of edges in a K-ary tree with `generations` generations below the
/// top edge: sum_{g=0}^{generations} K^g, saturating at UINT64_MAX.
std::uint64_t tree_edge_count(int K, int generations);

/// R^+ at the near end of the root edge of the depth-truncated tree. Every
/// generation-depth edge is seeded with seed_m at its far end.
WtValue solve_root_R(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                     DiskValue seed_m = {}, std::uint64_t replica = 0,
                     const SolveOptions& options = {});

/// m^+ at the far end of edge `top` (merge of its children, or seed_m at the
/// truncation depth).
DiskValue solve_subtree_far_m(const TreeSpec& spec, const DisorderModel& dm,
                              const HalfPlanePoint& z, const EdgeAddress& top, DiskValue seed_m,
                              std::uint64_t replica, const SolveOptions& options = {});

/// R^+ at the near end of edge `top`.
WtValue solve_subtree_R(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                        const EdgeAddress& top, DiskValue seed_m, std::uint64_t replica,
                        const SolveOptions& options = {});

/// R^+ at `position` in [0, L_target] along edge `target`.
WtValue solve_R_plus(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                     const EdgeAddress& target, double position, std::uint64_t replica,
                     DiskValue seed_m = {}, const SolveOptions& options = {});

/// R^- = -psi'/psi of the solution on the backward part of the tree, at
/// `position` along edge `target`. At the root R^- = -cot(alpha); alpha == 0
/// at the root point returns WtValue::infinite().
WtValue solve_R_minus(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                      const EdgeAddress& target, double position, std::uint64_t replica,
                      DiskValue seed_m = {}, const SolveOptions& options = {});

/// Whole truncated tree stored in breadth-first (heap) order: edge 0 is the
/// root, the children of edge i are K*i + 1 ... K*i + K.
struct TreeSolution {
  int K = 0;
  int depth = 0;
  HalfPlanePoint z;
  std::vector<double> length;
  std::vector<DiskValue> m_near;
  std::vector<DiskValue> m_far;

  std::size_t size() const { return length.size(); }
  std::size_t child(std::size_t i, int j) const { return static_cast<std::size_t>(K) * i + 1 + j; }
  std::size_t parent(std::size_t i) const { return (i - 1) / static_cast<std::size_t>(K); }
  std::size_t first_of_generation(int g) const;
  int generation(std::size_t i) const;
  bool is_leaf(std::size_t i) const { return generation(i) == depth; }
};

TreeSolution solve_tree(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                        DiskValue seed_m = {}, std::uint64_t replica = 0,
                        std::uint64_t max_edges = std::uint64_t{1} << 21);

/// Default eta ladder for boundary extrapolation.
std::vector<double> default_eta_ladder();

/// Intercept at eta = 0 of the least-squares line through (eta_k, values_k).
cplx extrapolate_to_boundary(std::span<const double> etas, std::span<const cplx> values);

/// R^+(0; E + i0) of the root edge by extrapolation over `ladder`.
WtValue solve_root_R_boundary(const TreeSpec& spec, const DisorderModel& dm, double E,
                              std::span<const double> ladder, DiskValue seed_m = {},
                              std::uint64_t replica = 0, const SolveOptions& options = {});

}  // namespace qtree
