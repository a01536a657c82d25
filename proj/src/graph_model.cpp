#include "qtree/graph_model.hpp"

#include <cmath>

#include "qtree/error.hpp"

namespace qtree {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_angle_in_closed(double x) { return std::isfinite(x) && x >= 0.0 && x <= kPi; }

// Standard normal pdf/cdf for the truncated-normal moments.
double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

bool VertexBc::is_continuous() const {
  return kind == Kind::kirchhoff || beta_v == 0.0 || beta_v == kPi;
}

bool VertexBc::is_kirchhoff() const {
  return kind == Kind::kirchhoff || (is_continuous() && alpha_v == kPi / 2);
}

void VertexBc::validate() const {
  if (kind == Kind::kirchhoff) return;
  if (!is_angle_in_closed(alpha_v)) {
    throw ValidationError("vertex_bc.alpha_v must lie in [0, pi]");
  }
  if (!is_angle_in_closed(beta_v)) {
    throw ValidationError("vertex_bc.beta_v must lie in [0, pi]");
  }
  if (is_continuous() && std::sin(alpha_v) == 0.0) {
    throw ValidationError(
        "vertex_bc: beta_v in {0, pi} with alpha_v in {0, pi} decouples the tree (Dirichlet vertex)");
  }
  if (!is_continuous()) {
    const double denom = std::cos(alpha_v) + std::sin(alpha_v) / std::tan(beta_v);
    if (std::abs(denom) < 1e-14) {
      throw ValidationError("vertex_bc: cos(alpha_v) + sin(alpha_v) cot(beta_v) vanishes");
    }
  }
}

void TreeSpec::validate() const {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (!(std::isfinite(L) && L > 0.0)) throw ValidationError("L must be positive and finite");
  if (depth < 0) throw ValidationError("depth must be >= 0");
  if (!(std::isfinite(alpha) && alpha >= 0.0 && alpha < kPi)) {
    throw ValidationError("alpha must lie in [0, pi)");
  }
  vertex_bc.validate();
}

std::string to_string(OmegaDist dist) {
  switch (dist) {
    case OmegaDist::uniform:
      return "uniform";
    case OmegaDist::two_point:
      return "two_point";
    case OmegaDist::truncated_normal:
      return "truncated_normal";
  }
  return "unknown";
}

OmegaDist omega_dist_from_string(const std::string& name) {
  if (name == "uniform") return OmegaDist::uniform;
  if (name == "two_point") return OmegaDist::two_point;
  if (name == "truncated_normal") return OmegaDist::truncated_normal;
  throw ValidationError("disorder.dist: unknown distribution '" + name + "'");
}

void DisorderModel::validate() const {
  if (!(std::isfinite(lambda) && lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("disorder.lambda must lie in [0, 1]");
  }
  if (dist == OmegaDist::truncated_normal && !(std::isfinite(sigma) && sigma > 0.0)) {
    throw ValidationError("disorder.sigma must be positive");
  }
}

double omega_mean(const DisorderModel&) { return 0.0; }

double omega_variance(const DisorderModel& dm) {
  switch (dm.dist) {
    case OmegaDist::uniform:
      return 1.0 / 3.0;
    case OmegaDist::two_point:
      return 1.0;
    case OmegaDist::truncated_normal: {
      const double c = 1.0 / dm.sigma;
      const double mass = 2.0 * phi_cdf(c) - 1.0;
      return dm.sigma * dm.sigma * (1.0 - 2.0 * c * phi_pdf(c) / mass);
    }
  }
  return 0.0;
}

EdgeAddress EdgeAddress::child(int index) const {
  auto path = path_;
  path.push_back(index);
  return EdgeAddress(std::move(path));
}

EdgeAddress EdgeAddress::parent() const {
  if (path_.empty()) throw OutOfRangeError("root edge has no parent");
  return EdgeAddress(std::vector<int>(path_.begin(), path_.end() - 1));
}

std::uint64_t root_key(std::uint64_t master_seed) {
  return rng::combine(rng::mix64(master_seed), rng::kTagAddress);
}

std::uint64_t child_key(std::uint64_t parent_key, int index) {
  return rng::combine(parent_key, static_cast<std::uint64_t>(index) + 1);
}

std::uint64_t address_key(std::uint64_t master_seed, const EdgeAddress& addr) {
  std::uint64_t key = root_key(master_seed);
  for (int index : addr.path()) key = child_key(key, index);
  return key;
}

double draw_omega(const DisorderModel& dm, rng::CounterStream& stream) {
  switch (dm.dist) {
    case OmegaDist::uniform:
      return 2.0 * stream.uniform01() - 1.0;
    case OmegaDist::two_point:
      return (stream.next_u64() >> 63) != 0 ? 1.0 : -1.0;
    case OmegaDist::truncated_normal:
      // Rejection keeps the exact truncated law; the stream makes it
      // deterministic regardless of how many rejections occur.
      for (;;) {
        const double x = dm.sigma * stream.normal();
        if (std::abs(x) <= 1.0) return x;
      }
  }
  return 0.0;
}

double omega_from_key(const DisorderModel& dm, std::uint64_t edge_key, std::uint64_t replica) {
  rng::CounterStream stream(rng::combine(rng::combine(edge_key, rng::kTagReplica), replica));
  return draw_omega(dm, stream);
}

double resample_omega(const DisorderModel& dm, const EdgeAddress& addr, std::uint64_t replica) {
  return omega_from_key(dm, address_key(dm.master_seed, addr), replica);
}

double length_from_omega(const TreeSpec& spec, const DisorderModel& dm, double omega) {
  if (dm.lambda == 0.0) return spec.L;
  return spec.L * std::exp(dm.lambda * omega);
}

double edge_length(const TreeSpec& spec, const DisorderModel& dm, const EdgeAddress& addr,
                   std::uint64_t replica) {
  if (addr.generation() > spec.depth) {
    throw OutOfRangeError("edge address generation " + std::to_string(addr.generation()) +
                          " exceeds depth " + std::to_string(spec.depth));
  }
  for (int index : addr.path()) {
    if (index < 0 || index >= spec.K) throw OutOfRangeError("edge address child index out of range");
  }
  return length_from_omega(spec, dm, resample_omega(dm, addr, replica));
}

}  // namespace qtree
