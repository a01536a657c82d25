#include "qtree/wt_engine.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qtree/error.hpp"

namespace qtree {

namespace {

constexpr cplx kI{0.0, 1.0};

// cot with the exact zero at pi/2 that Kirchhoff-like parameters rely on.
double cot_exact(double angle) {
  if (angle == std::numbers::pi / 2) return 0.0;
  return std::cos(angle) / std::sin(angle);
}

bool finite(cplx x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); }

cplx edge_phase(cplx w, double length) { return std::exp(2.0 * kI * w * length); }

DiskValue merge_kirchhoff(std::span<const DiskValue> children) {
  cplx zeta{0.0, 0.0};
  for (const DiskValue& child : children) {
    const cplx denom = 1.0 - child.m;
    if (denom == cplx{0.0, 0.0}) {
      throw SingularError("singular merge: child disk value equals 1 (R at infinity)");
    }
    zeta += (1.0 + child.m) / denom;
  }
  const cplx result = (zeta - 1.0) / (zeta + 1.0);
  if (!finite(result)) throw SingularError("singular merge: non-finite merged value");
  return {result};
}

cplx r_of_m(cplx m, cplx w) {
  const cplx denom = 1.0 - m;
  if (denom == cplx{0.0, 0.0}) throw SingularError("singular transform: m = 1");
  return kI * w * (1.0 + m) / denom;
}

cplx m_of_r(cplx R, cplx w) {
  const cplx denom = R + kI * w;
  if (denom == cplx{0.0, 0.0}) throw SingularError("singular transform: R = -i sqrt(z)");
  return (R - kI * w) / denom;
}

// Merge in the disk variable for an arbitrary vertex condition.
DiskValue merge_any(std::span<const DiskValue> children, cplx w, const VertexBc& bc) {
  if (bc.is_kirchhoff()) return merge_kirchhoff(children);
  std::vector<WtValue> rs;
  rs.reserve(children.size());
  for (const DiskValue& child : children) rs.push_back({r_of_m(child.m, w)});
  return {m_of_r(vertex_merge_R(rs, bc).R, w)};
}

double length_of(const TreeSpec& spec, const DisorderModel& dm, std::uint64_t key,
                 std::uint64_t replica) {
  if (dm.lambda == 0.0) return spec.L;
  return length_from_omega(spec, dm, omega_from_key(dm, key, replica));
}

void check_address(const TreeSpec& spec, const EdgeAddress& addr) {
  if (addr.generation() > spec.depth) {
    throw OutOfRangeError("edge address generation " + std::to_string(addr.generation()) +
                          " exceeds depth " + std::to_string(spec.depth));
  }
  for (int index : addr.path()) {
    if (index < 0 || index >= spec.K) throw OutOfRangeError("edge address child index out of range");
  }
}

// m at the far end of the edge with key `top_key` in generation `top_gen`.
DiskValue far_m_impl(const TreeSpec& spec, const DisorderModel& dm, cplx w, std::uint64_t top_key,
                     int top_gen, DiskValue seed, std::uint64_t replica,
                     const SolveOptions& options, std::uint64_t& visits) {
  const int K = spec.K;
  const int depth = spec.depth;
  if (top_gen == depth) return seed;

  if (dm.lambda == 0.0 && options.collapse_regular) {
    const cplx phase = edge_phase(w, spec.L);
    std::vector<DiskValue> copies(static_cast<std::size_t>(K));
    DiskValue far = seed;
    for (int g = depth; g > top_gen; --g) {
      const DiskValue near{phase * far.m};
      for (auto& c : copies) c = near;
      far = merge_any(copies, w, spec.vertex_bc);
      ++visits;
    }
    return far;
  }

  const std::uint64_t needed = tree_edge_count(K, depth - top_gen);
  if (needed > options.visit_budget) {
    throw BudgetExceededError("tree of " + std::to_string(needed) +
                              " edges exceeds the visit budget of " +
                              std::to_string(options.visit_budget));
  }

  struct Frame {
    std::uint64_t key;
    int gen;
    int next_child;
  };
  std::vector<Frame> stack;
  stack.reserve(static_cast<std::size_t>(depth - top_gen + 1));
  // One row of K child results per generation; only one frame per generation
  // is live at a time in a depth-first walk.
  std::vector<DiskValue> slots(static_cast<std::size_t>(depth + 1) * K);
  auto slot = [&](int gen, int j) -> DiskValue& {
    return slots[static_cast<std::size_t>(gen) * K + j];
  };

  stack.push_back({top_key, top_gen, 0});
  for (;;) {
    Frame& f = stack.back();
    if (f.next_child < K) {
      const int j = f.next_child++;
      const std::uint64_t ck = child_key(f.key, j);
      const int cg = f.gen + 1;
      if (cg == depth) {
        slot(f.gen, j) = {seed.m * edge_phase(w, length_of(spec, dm, ck, replica))};
        ++visits;
      } else {
        stack.push_back({ck, cg, 0});
      }
      continue;
    }
    const DiskValue far =
        merge_any(std::span<const DiskValue>(&slot(f.gen, 0), static_cast<std::size_t>(K)), w,
                  spec.vertex_bc);
    const std::uint64_t key = f.key;
    const int gen = f.gen;
    stack.pop_back();
    if (stack.empty()) return far;
    const int j = stack.back().next_child - 1;
    slot(gen - 1, j) = {far.m * edge_phase(w, length_of(spec, dm, key, replica))};
    ++visits;
  }
}

}  // namespace

void require_interior(const HalfPlanePoint& z, const char* what) {
  if (!(std::isfinite(z.E) && std::isfinite(z.eta))) {
    throw ValidationError(std::string(what) + ": spectral parameter must be finite");
  }
  if (!(z.eta > 0.0)) {
    throw ValidationError(std::string(what) +
                          ": requires eta > 0 (boundary values only via extrapolation)");
  }
}

WtValue WtValue::infinite() {
  return {cplx{std::numeric_limits<double>::infinity(), 0.0}};
}

bool WtValue::is_infinite() const { return std::isinf(R.real()) || std::isinf(R.imag()); }

SqrtZ sqrt_upper(const HalfPlanePoint& z) {
  if (z.eta < 0.0 || !std::isfinite(z.eta) || !std::isfinite(z.E)) {
    throw ValidationError("sqrt_upper: eta must be finite and >= 0");
  }
  if (z.eta == 0.0) {
    if (!(z.E > 0.0)) {
      throw UnsupportedBoundaryPointError("sqrt_upper: boundary point E + i0 requires E > 0");
    }
    return {cplx{std::sqrt(z.E), 0.0}};
  }
  // The principal branch maps the open upper half plane into the first
  // quadrant, so Im w > 0 there.
  return {std::sqrt(z.z())};
}

DiskValue edge_step_m(DiskValue m_far, double length, const HalfPlanePoint& z) {
  const cplx w = sqrt_upper(z).w;
  return {m_far.m * edge_phase(w, length)};
}

DiskValue vertex_merge_m(std::span<const DiskValue> children, const HalfPlanePoint&) {
  return merge_kirchhoff(children);
}

DiskValue m_from_r(WtValue R, const HalfPlanePoint& z) {
  if (R.is_infinite()) return {cplx{1.0, 0.0}};
  return {m_of_r(R.R, sqrt_upper(z).w)};
}

WtValue r_from_m(DiskValue m, const HalfPlanePoint& z) { return {r_of_m(m.m, sqrt_upper(z).w)}; }

WtValue edge_step_R(WtValue R0, double l, const HalfPlanePoint& z) {
  const cplx w = sqrt_upper(z).w;
  if (l == 0.0) return R0;
  const cplx c = std::cos(w * l);
  const cplx s = std::sin(w * l);
  if (R0.is_infinite()) {
    if (s == cplx{0.0, 0.0}) throw SingularError("Mobius pole: sin(sqrt(z) l) = 0 for R = infinity");
    return {w * c / s};
  }
  const cplx denom = c + R0.R * s / w;
  const cplx numer = R0.R * c - w * s;
  if (denom == cplx{0.0, 0.0} || !finite(denom) || !finite(numer)) {
    throw SingularError("Mobius pole: vanishing or non-finite denominator in edge step");
  }
  return {numer / denom};
}

WtValue symmetric_tilde(WtValue R, double beta_v) {
  if (beta_v == 0.0 || beta_v == std::numbers::pi) return R;
  const cplx denom = cot_exact(beta_v) + R.R;
  if (denom == cplx{0.0, 0.0}) throw SingularError("singular transform: cot(beta) + R = 0");
  return {-1.0 / denom};
}

WtValue symmetric_untilde(WtValue R_tilde, double beta_v) {
  if (beta_v == 0.0 || beta_v == std::numbers::pi) return R_tilde;
  if (R_tilde.R == cplx{0.0, 0.0}) throw SingularError("singular transform: rotated value is 0");
  return {-1.0 / R_tilde.R - cot_exact(beta_v)};
}

cplx vertex_missing_slope(std::span<const cplx> known, const VertexBc& bc) {
  const double n_edges = static_cast<double>(known.size() + 1);
  if (bc.is_continuous()) {
    // psi continuous; sum of outward derivatives = n cot(alpha_v) psi.
    const double total = bc.kind == VertexBc::Kind::kirchhoff ? 0.0 : n_edges * cot_exact(bc.alpha_v);
    cplx sum{0.0, 0.0};
    for (const cplx& rho : known) sum += rho;
    return total - sum;
  }
  // Rotated values -1/(cot b + rho) sum to -S over all edges at the vertex.
  const double cb = cot_exact(bc.beta_v);
  const double S = n_edges * std::sin(bc.alpha_v) / (std::cos(bc.alpha_v) + cb * std::sin(bc.alpha_v));
  cplx tilde_sum{0.0, 0.0};
  for (const cplx& rho : known) tilde_sum += symmetric_tilde({rho}, bc.beta_v).R;
  return symmetric_untilde({-S - tilde_sum}, bc.beta_v).R;
}

WtValue vertex_merge_R(std::span<const WtValue> children, const VertexBc& bc) {
  if (bc.kind == VertexBc::Kind::kirchhoff) {
    cplx sum{0.0, 0.0};
    for (const WtValue& c : children) sum += c.R;
    return {sum};
  }
  std::vector<cplx> slopes;
  slopes.reserve(children.size());
  for (const WtValue& c : children) slopes.push_back(c.R);
  // The parent's outward slope at its far end is -R^+(L).
  return {-vertex_missing_slope(slopes, bc)};
}

cplx vertex_psi_jump(WtValue parent_far, WtValue child_near, const VertexBc& bc) {
  if (bc.is_continuous()) return {1.0, 0.0};
  const double cb = cot_exact(bc.beta_v);
  const cplx denom = cb + child_near.R;
  if (denom == cplx{0.0, 0.0}) throw SingularError("vertex jump: cot(beta) + R_child = 0");
  return (cb - parent_far.R) / denom;
}

cplx tilde_edge_factor(WtValue R_far, WtValue R_near, const VertexBc& bc) {
  if (bc.is_continuous()) return {1.0, 0.0};
  const double cb = cot_exact(bc.beta_v);
  const cplx denom = cb + R_near.R;
  if (denom == cplx{0.0, 0.0}) throw SingularError("rotated amplitude: cot(beta) + R = 0");
  return (cb - R_far.R) / denom;
}

std::uint64_t tree_edge_count(int K, int generations) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (generations < 0) return 0;
  std::uint64_t total = 0;
  std::uint64_t level = 1;
  for (int g = 0; g <= generations; ++g) {
    if (total > kMax - level) return kMax;
    total += level;
    if (g < generations) {
      if (level > kMax / static_cast<std::uint64_t>(K)) return kMax;
      level *= static_cast<std::uint64_t>(K);
    }
  }
  return total;
}

DiskValue solve_subtree_far_m(const TreeSpec& spec, const DisorderModel& dm,
                              const HalfPlanePoint& z, const EdgeAddress& top, DiskValue seed_m,
                              std::uint64_t replica, const SolveOptions& options) {
  spec.validate();
  dm.validate();
  require_interior(z, "solve");
  check_address(spec, top);
  if (std::abs(seed_m.m) > 1.0) throw ValidationError("seed_m must lie in the closed unit disk");
  const cplx w = sqrt_upper(z).w;
  std::uint64_t visits = 0;
  const DiskValue far = far_m_impl(spec, dm, w, address_key(dm.master_seed, top), top.generation(),
                                   seed_m, replica, options, visits);
  if (options.visited != nullptr) *options.visited = visits;
  return far;
}

WtValue solve_subtree_R(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                        const EdgeAddress& top, DiskValue seed_m, std::uint64_t replica,
                        const SolveOptions& options) {
  const DiskValue far = solve_subtree_far_m(spec, dm, z, top, seed_m, replica, options);
  const cplx w = sqrt_upper(z).w;
  const double length = length_of(spec, dm, address_key(dm.master_seed, top), replica);
  if (options.visited != nullptr) ++*options.visited;
  return {r_of_m(far.m * edge_phase(w, length), w)};
}

WtValue solve_root_R(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                     DiskValue seed_m, std::uint64_t replica, const SolveOptions& options) {
  return solve_subtree_R(spec, dm, z, EdgeAddress::root(), seed_m, replica, options);
}

WtValue solve_R_plus(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                     const EdgeAddress& target, double position, std::uint64_t replica,
                     DiskValue seed_m, const SolveOptions& options) {
  const DiskValue far = solve_subtree_far_m(spec, dm, z, target, seed_m, replica, options);
  const double length = length_of(spec, dm, address_key(dm.master_seed, target), replica);
  if (!(position >= 0.0 && position <= length)) {
    throw OutOfRangeError("position outside [0, L_target]");
  }
  const cplx w = sqrt_upper(z).w;
  return {r_of_m(far.m * edge_phase(w, length - position), w)};
}

WtValue solve_R_minus(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                      const EdgeAddress& target, double position, std::uint64_t replica,
                      DiskValue seed_m, const SolveOptions& options) {
  spec.validate();
  dm.validate();
  require_interior(z, "solve_R_minus");
  check_address(spec, target);
  const cplx w = sqrt_upper(z).w;

  std::uint64_t key = root_key(dm.master_seed);
  const double root_length = length_of(spec, dm, key, replica);
  if (target.is_root() && !(position >= 0.0 && position <= root_length)) {
    throw OutOfRangeError("position outside [0, L_target]");
  }
  if (target.is_root() && position == 0.0) {
    if (spec.alpha == 0.0) return WtValue::infinite();
    return {cplx{-cot_exact(spec.alpha), 0.0}};
  }

  // m^- grows as exp(2 i w l) away from the root; alpha == 0 (R^- = infinity)
  // is m^- = 1 and needs no special case after that.
  cplx m = spec.alpha == 0.0 ? cplx{1.0, 0.0} : m_of_r(cplx{-cot_exact(spec.alpha), 0.0}, w);
  EdgeAddress here = EdgeAddress::root();
  for (int j : target.path()) {
    const double length = length_of(spec, dm, key, replica);
    const cplx parent_far = r_of_m(m * edge_phase(w, length), w);
    std::vector<cplx> known{parent_far};
    for (int g = 0; g < spec.K; ++g) {
      if (g == j) continue;
      known.push_back(solve_subtree_R(spec, dm, z, here.child(g), seed_m, replica, options).R);
    }
    const cplx child_near = -vertex_missing_slope(known, spec.vertex_bc);
    m = m_of_r(child_near, w);
    key = child_key(key, j);
    here = here.child(j);
  }
  const double length = length_of(spec, dm, key, replica);
  if (!(position >= 0.0 && position <= length)) {
    throw OutOfRangeError("position outside [0, L_target]");
  }
  return {r_of_m(m * edge_phase(w, position), w)};
}

std::size_t TreeSolution::first_of_generation(int g) const {
  std::size_t first = 0;
  std::size_t level = 1;
  for (int k = 0; k < g; ++k) {
    first += level;
    level *= static_cast<std::size_t>(K);
  }
  return first;
}

int TreeSolution::generation(std::size_t i) const {
  int g = 0;
  std::size_t first = 0;
  std::size_t level = 1;
  while (i >= first + level) {
    first += level;
    level *= static_cast<std::size_t>(K);
    ++g;
  }
  return g;
}

TreeSolution solve_tree(const TreeSpec& spec, const DisorderModel& dm, const HalfPlanePoint& z,
                        DiskValue seed_m, std::uint64_t replica, std::uint64_t max_edges) {
  spec.validate();
  dm.validate();
  require_interior(z, "solve_tree");
  const std::uint64_t n = tree_edge_count(spec.K, spec.depth);
  if (n > max_edges) {
    throw BudgetExceededError("solve_tree: " + std::to_string(n) + " edges exceed the limit of " +
                              std::to_string(max_edges));
  }
  const cplx w = sqrt_upper(z).w;

  TreeSolution sol;
  sol.K = spec.K;
  sol.depth = spec.depth;
  sol.z = z;
  sol.length.resize(n);
  sol.m_near.resize(n);
  sol.m_far.resize(n);

  std::vector<std::uint64_t> keys(n);
  keys[0] = root_key(dm.master_seed);
  for (std::size_t i = 0; i < n; ++i) {
    sol.length[i] = length_of(spec, dm, keys[i], replica);
    const std::size_t first_child = sol.child(i, 0);
    if (first_child < n) {
      for (int j = 0; j < spec.K; ++j) keys[sol.child(i, j)] = child_key(keys[i], j);
    }
  }

  const std::size_t leaves_begin = sol.first_of_generation(spec.depth);
  for (std::size_t i = n; i-- > 0;) {
    if (i >= leaves_begin) {
      sol.m_far[i] = seed_m;
    } else {
      sol.m_far[i] = merge_any(
          std::span<const DiskValue>(&sol.m_near[sol.child(i, 0)], static_cast<std::size_t>(spec.K)),
          w, spec.vertex_bc);
    }
    sol.m_near[i] = {sol.m_far[i].m * edge_phase(w, sol.length[i])};
  }
  return sol;
}

std::vector<double> default_eta_ladder() { return {1e-1, 1e-2, 1e-3, 1e-4}; }

cplx extrapolate_to_boundary(std::span<const double> etas, std::span<const cplx> values) {
  if (etas.size() != values.size() || etas.size() < 2) {
    throw ValidationError("extrapolation needs at least two (eta, value) pairs");
  }
  const double n = static_cast<double>(etas.size());
  double mean_eta = 0.0;
  cplx mean_val{0.0, 0.0};
  for (std::size_t k = 0; k < etas.size(); ++k) {
    mean_eta += etas[k];
    mean_val += values[k];
  }
  mean_eta /= n;
  mean_val /= n;
  double sxx = 0.0;
  cplx sxy{0.0, 0.0};
  for (std::size_t k = 0; k < etas.size(); ++k) {
    const double dx = etas[k] - mean_eta;
    sxx += dx * dx;
    sxy += dx * (values[k] - mean_val);
  }
  if (sxx == 0.0) throw ValidationError("extrapolation ladder needs distinct eta values");
  const cplx slope = sxy / sxx;
  return mean_val - slope * mean_eta;
}

WtValue solve_root_R_boundary(const TreeSpec& spec, const DisorderModel& dm, double E,
                              std::span<const double> ladder, DiskValue seed_m,
                              std::uint64_t replica, const SolveOptions& options) {
  std::vector<cplx> values;
  values.reserve(ladder.size());
  for (double eta : ladder) {
    values.push_back(solve_root_R(spec, dm, {E, eta}, seed_m, replica, options).R);
  }
  return {extrapolate_to_boundary(ladder, values)};
}

}  // namespace qtree
