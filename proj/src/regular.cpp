#include "qtree/regular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qtree/error.hpp"

namespace qtree {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEdgeShift = 1e-9;

double cot_exact(double angle) {
  if (angle == kPi / 2) return 0.0;
  return std::cos(angle) / std::sin(angle);
}

// sqrt(z) for the fixed point. On the real axis this is the limit from the
// upper half plane, which for E < 0 is i sqrt(|E|).
cplx boundary_sqrt(double E, double eta) {
  if (eta > 0.0) return sqrt_upper({E, eta}).w;
  if (E > 0.0) return {std::sqrt(E), 0.0};
  return {0.0, std::sqrt(-E)};
}

struct EdgeTrig {
  cplx w;
  cplx c;
  cplx s;
  cplx s_over_w;
};

EdgeTrig edge_trig(cplx w, double L) {
  EdgeTrig t{w, std::cos(w * L), std::sin(w * L), {}};
  t.s_over_w = w == cplx{0.0, 0.0} ? cplx{L, 0.0} : t.s / w;
  return t;
}

// Roots of a x^2 + b x + c in the cancellation-free form.
std::array<cplx, 2> quadratic_roots(cplx a, cplx b, cplx c) {
  const cplx d = std::sqrt(b * b - 4.0 * a * c);
  const cplx q = std::real(std::conj(b) * d) >= 0.0 ? -0.5 * (b + d) : -0.5 * (b - d);
  if (q == cplx{0.0, 0.0}) return {cplx{0.0, 0.0}, cplx{0.0, 0.0}};
  return {q / a, c / q};
}

cplx newton_polish(cplx a, cplx b, cplx c, cplx x) {
  const cplx f = (a * x + b) * x + c;
  const cplx df = 2.0 * a * x + b;
  if (df == cplx{0.0, 0.0}) return x;
  const cplx y = x - f / df;
  const cplx fy = (a * y + b) * y + c;
  return std::abs(fy) <= std::abs(f) ? y : x;
}

double abs_m_of(cplx phi, cplx w) {
  const cplx i{0.0, 1.0};
  return std::abs((phi - i * w) / (phi + i * w));
}

struct Candidate {
  cplx phi;
  double residual;
  double multiplier;
};

// Shared selection rule; see fixed_point_R in the header.
const Candidate& select_root(const std::vector<Candidate>& cands, bool boundary, cplx w) {
  if (cands.empty()) throw SelectionFailureError("fixed point: no candidate roots");
  if (boundary) {
    const Candidate* best = nullptr;
    for (const Candidate& c : cands) {
      const double scale = std::max(1.0, std::abs(c.phi));
      if (c.phi.imag() > 1e-14 * scale) best = &c;
    }
    if (best != nullptr) return *best;
    const auto it = std::min_element(cands.begin(), cands.end(), [](const auto& x, const auto& y) {
      return x.multiplier < y.multiplier;
    });
    if (!(it->multiplier < 1.0)) {
      throw SelectionFailureError("fixed point: no attracting real root");
    }
    return *it;
  }
  const auto it = std::min_element(cands.begin(), cands.end(), [&](const auto& x, const auto& y) {
    return abs_m_of(x.phi, w) < abs_m_of(y.phi, w);
  });
  if (!(abs_m_of(it->phi, w) < 1.0)) {
    throw SelectionFailureError("fixed point: no root inside the unit disk");
  }
  return *it;
}

double shifted_energy(const HalfPlanePoint& z, int K, double L, bool& flagged) {
  flagged = false;
  if (z.eta > 0.0) return z.E;
  const double d = distance_to_band_edge(z.E, K, L);
  if (d >= kEdgeShift) return z.E;
  flagged = true;
  // Move away from the nearest edge on the side the point already lies on.
  const double probe = z.E + 0.5 * kEdgeShift;
  return distance_to_band_edge(probe, K, L) > d ? z.E + kEdgeShift : z.E - kEdgeShift;
}

void validate_regular(int K, double L) {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (!(std::isfinite(L) && L > 0.0)) throw ValidationError("L must be positive and finite");
}

}  // namespace

BandList ac_bands(int K, double L, int n_max) {
  validate_regular(K, L);
  if (n_max < 0) throw ValidationError("n_max must be >= 0");
  const long double sk = std::sqrt(static_cast<long double>(K));
  const long double theta = std::atan((sk - 1.0L / sk) / 2.0L);
  const long double pi = std::numbers::pi_v<long double>;
  const long double len = L;
  BandList out;
  out.theta = static_cast<double>(theta);
  for (int n = 0; n <= n_max; ++n) {
    const long double lo = (pi * n + theta) / len;
    const long double hi = (pi * (n + 1) - theta) / len;
    out.intervals.push_back({static_cast<double>(lo * lo), static_cast<double>(hi * hi)});
  }
  return out;
}

double distance_to_band_edge(double E, int K, double L) {
  validate_regular(K, L);
  const double sk = std::sqrt(static_cast<double>(K));
  const double theta = std::atan((sk - 1.0 / sk) / 2.0);
  const double k = std::sqrt(std::max(E, 0.0)) * L;
  const long n = static_cast<long>(std::floor(k / kPi));
  double best = std::abs(E - (theta / L) * (theta / L));
  for (long j = std::max(0L, n - 1); j <= n + 1; ++j) {
    const double lo = (kPi * static_cast<double>(j) + theta) / L;
    const double hi = (kPi * static_cast<double>(j + 1) - theta) / L;
    best = std::min({best, std::abs(E - lo * lo), std::abs(E - hi * hi)});
  }
  return best;
}

FixedPoint fixed_point_R(const HalfPlanePoint& z, int K, double L) {
  validate_regular(K, L);
  if (!(std::isfinite(z.E) && std::isfinite(z.eta) && z.eta >= 0.0)) {
    throw ValidationError("fixed_point_R: requires finite E and eta >= 0");
  }
  FixedPoint fp;
  fp.E_used = shifted_energy(z, K, L, fp.near_band_edge);
  const bool boundary = z.eta == 0.0;
  const cplx w = boundary_sqrt(fp.E_used, z.eta);
  const EdgeTrig t = edge_trig(w, L);
  const double Kd = K;

  const cplx a = Kd * t.s_over_w;
  const cplx b = (Kd - 1.0) * t.c;
  const cplx c = w * t.s;

  std::vector<cplx> roots;
  if (K == 1) {
    const cplx i{0.0, 1.0};
    roots = {i * w, -i * w};
  } else if (a == cplx{0.0, 0.0}) {
    if (b == cplx{0.0, 0.0}) throw SelectionFailureError("fixed point: degenerate quadratic");
    roots = {-c / b};
  } else {
    const auto r = quadratic_roots(a, b, c);
    roots = {newton_polish(a, b, c, r[0]), newton_polish(a, b, c, r[1])};
  }

  std::vector<Candidate> cands;
  for (const cplx& phi : roots) {
    const cplx den = t.c - Kd * phi * t.s_over_w;
    const double mult = den == cplx{0.0, 0.0} ? INFINITY : Kd / std::norm(den);
    cands.push_back({phi, std::abs((a * phi + b) * phi + c), mult});
  }
  const Candidate& chosen = select_root(cands, boundary, w);
  fp.phi = chosen.phi;
  fp.residual = chosen.residual;
  fp.multiplier = chosen.multiplier;
  fp.abs_m = abs_m_of(fp.phi, w);
  return fp;
}

FixedPoint fixed_point_R(const HalfPlanePoint& z, int K, double L, const VertexBc& bc) {
  bc.validate();
  if (bc.is_kirchhoff()) return fixed_point_R(z, K, L);
  validate_regular(K, L);
  if (!(std::isfinite(z.E) && std::isfinite(z.eta) && z.eta >= 0.0)) {
    throw ValidationError("fixed_point_R: requires finite E and eta >= 0");
  }
  const bool boundary = z.eta == 0.0;
  const cplx w = boundary_sqrt(z.E, z.eta);
  const EdgeTrig t = edge_trig(w, L);
  const double Kd = K;

  // 2x2 matrices of the Mobius maps, composed right to left:
  // children's R(0) -> parent's R(L) -> parent's R(0).
  using Mat = std::array<cplx, 4>;  // {a, b, c, d}
  auto mul = [](const Mat& x, const Mat& y) -> Mat {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3]};
  };
  Mat vertex;
  if (bc.is_continuous()) {
    const double total = (Kd + 1.0) * cot_exact(bc.alpha_v);
    vertex = {Kd, -total, 0.0, 1.0};
  } else {
    const double cb = cot_exact(bc.beta_v);
    const double S = (Kd + 1.0) * std::sin(bc.alpha_v) /
                     (std::cos(bc.alpha_v) + cb * std::sin(bc.alpha_v));
    const Mat tilde{0.0, -1.0, 1.0, cb};
    const Mat missing{-Kd, -S, 0.0, 1.0};
    const Mat untilde{-cb, -1.0, 1.0, 0.0};
    const Mat negate{-1.0, 0.0, 0.0, 1.0};
    vertex = mul(negate, mul(untilde, mul(missing, tilde)));
  }
  const Mat back{t.c, w * t.s, -t.s_over_w, t.c};
  const Mat M = mul(back, vertex);
  const cplx det = M[0] * M[3] - M[1] * M[2];

  const cplx qa = M[2];
  const cplx qb = M[3] - M[0];
  const cplx qc = -M[1];
  std::vector<cplx> roots;
  if (qa == cplx{0.0, 0.0}) {
    if (qb == cplx{0.0, 0.0}) throw SelectionFailureError("fixed point: degenerate Mobius map");
    roots = {-qc / qb};
  } else {
    const auto r = quadratic_roots(qa, qb, qc);
    roots = {newton_polish(qa, qb, qc, r[0]), newton_polish(qa, qb, qc, r[1])};
  }
  std::vector<Candidate> cands;
  for (const cplx& phi : roots) {
    const cplx den = M[2] * phi + M[3];
    const double mult = den == cplx{0.0, 0.0} ? INFINITY : std::abs(det) / std::norm(den);
    cands.push_back({phi, std::abs((qa * phi + qb) * phi + qc), mult});
  }
  // The one-generation map is not a unit-disk map in the m variable here, so
  // the interior selection uses the attracting root as well.
  const Candidate* chosen = nullptr;
  if (boundary) {
    chosen = &select_root(cands, true, w);
  } else {
    const auto it = std::min_element(cands.begin(), cands.end(), [](const auto& x, const auto& y) {
      return x.multiplier < y.multiplier;
    });
    if (!(it->multiplier < 1.0) || !(it->phi.imag() > 0.0)) {
      throw SelectionFailureError("fixed point: no attracting root in the upper half plane");
    }
    chosen = &*it;
  }
  FixedPoint fp;
  fp.phi = chosen->phi;
  fp.residual = chosen->residual;
  fp.multiplier = chosen->multiplier;
  fp.abs_m = abs_m_of(fp.phi, w);
  fp.E_used = z.E;
  return fp;
}

double gamma_clean(const HalfPlanePoint& z, int K, double L) {
  const FixedPoint fp = fixed_point_R(z, K, L);
  const EdgeTrig t = edge_trig(boundary_sqrt(fp.E_used, z.eta), L);
  return -0.5 * std::log(static_cast<double>(K)) - std::log(std::abs(t.c + fp.phi * t.s_over_w));
}

double gamma_clean(const HalfPlanePoint& z, int K, double L, const VertexBc& bc) {
  if (bc.is_kirchhoff()) return gamma_clean(z, K, L);
  const FixedPoint fp = fixed_point_R(z, K, L, bc);
  const EdgeTrig t = edge_trig(boundary_sqrt(z.E, z.eta), L);
  const cplx ratio = t.c + fp.phi * t.s_over_w;
  const cplx R_far = (fp.phi * t.c - t.w * t.s) / ratio;
  const cplx jump = vertex_psi_jump({R_far}, {fp.phi}, bc);
  return -0.5 * std::log(static_cast<double>(K)) - std::log(std::abs(ratio)) -
         std::log(std::abs(jump));
}

double gamma_clean_tilde(const HalfPlanePoint& z, int K, double L, const VertexBc& bc) {
  if (bc.is_continuous()) return gamma_clean(z, K, L, bc);
  const FixedPoint fp = fixed_point_R(z, K, L, bc);
  const EdgeTrig t = edge_trig(boundary_sqrt(z.E, z.eta), L);
  const double Kd = K;
  const cplx ratio = t.c + fp.phi * t.s_over_w;
  const double cb = cot_exact(bc.beta_v);
  const double S =
      (Kd + 1.0) * std::sin(bc.alpha_v) / (std::cos(bc.alpha_v) + cb * std::sin(bc.alpha_v));
  const cplx r_tilde = symmetric_tilde({fp.phi}, bc.beta_v).R;
  const cplx factor = r_tilde / (-S - Kd * r_tilde);
  return -0.5 * std::log(Kd) - std::log(std::abs(ratio)) - std::log(std::abs(factor));
}

}  // namespace qtree
