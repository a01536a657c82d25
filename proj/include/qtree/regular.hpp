#pragma once

// The undeformed regular tree: every edge has length L and every vertex K
// children. The subtree beyond any edge is a copy of the whole tree, so R^+
// at every edge start is the same number Phi(z), a fixed point of one
// generation of the recursion.

#include <vector>

#include "qtree/graph_model.hpp"
#include "qtree/wt_engine.hpp"

namespace qtree {

struct Band {
  double a = 0.0;
  double b = 0.0;
};

/// Absolutely continuous spectrum of the Kirchhoff regular tree:
/// [((pi n + theta)/L)^2, ((pi (n+1) - theta)/L)^2], theta = arctan((sqrt K - 1/sqrt K)/2).
struct BandList {
  double theta = 0.0;
  std::vector<Band> intervals;
};

BandList ac_bands(int K, double L, int n_max);

/// Distance in E from E >= 0 to the nearest band edge.
double distance_to_band_edge(double E, int K, double L);

struct FixedPoint {
  cplx phi;
  /// |coefficient form of the fixed-point quadratic at phi|.
  double residual = 0.0;
  /// |m(phi)|; below 1 whenever Im phi > 0, equal to 1 for real phi (gaps).
  double abs_m = 0.0;
  /// |T'(phi)| for the one-generation map T.
  double multiplier = 0.0;
  /// Boundary-mode point within 1e-9 of a band edge; evaluated at shifted E.
  bool near_band_edge = false;
  /// Energy actually used (differs from z.E only when near_band_edge).
  double E_used = 0.0;
};

/// Kirchhoff fixed point. Solves (K s/w) Phi^2 + (K-1) c Phi + w s = 0 with
/// c = cos(w L), s = sin(w L). For eta > 0 the root with |m| < 1; for eta = 0
/// the root with Im Phi > 0 in bands and the attracting root in gaps.
FixedPoint fixed_point_R(const HalfPlanePoint& z, int K, double L);

/// Fixed point for a general symmetric vertex condition (Kirchhoff reduces to
/// the overload above).
FixedPoint fixed_point_R(const HalfPlanePoint& z, int K, double L, const VertexBc& bc);

/// -log sqrt K - log |c + Phi s / w|.
double gamma_clean(const HalfPlanePoint& z, int K, double L);

/// Plain pipeline: the edge ratio psi(L)/psi(0) times the psi jump at the
/// vertex, with R(L) from the forward edge map.
double gamma_clean(const HalfPlanePoint& z, int K, double L, const VertexBc& bc);

/// Rotated pipeline: the edge ratio times the rotated-amplitude factor, with
/// the parent's rotated slope taken from the rotated vertex condition.
double gamma_clean_tilde(const HalfPlanePoint& z, int K, double L, const VertexBc& bc);

}  // namespace qtree
