#pragma once

// Tree geometry, vertex boundary conditions, and the random edge-length model.

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qtree/rng.hpp"

namespace qtree {

/// Boundary condition at internal vertices.
///
/// The symmetric family requires that cos(beta) psi + sin(beta) d_n psi is
/// common to all edges at the vertex (d_n = derivative pointing into the
/// edge) and that cos(alpha) sum psi - sin(alpha) sum d_n psi = 0.
/// Kirchhoff is the member beta = 0, alpha = pi/2.
struct VertexBc {
  enum class Kind { kirchhoff, symmetric };

  Kind kind = Kind::kirchhoff;
  double alpha_v = std::numbers::pi / 2;
  double beta_v = 0.0;

  static VertexBc kirchhoff() { return {}; }
  static VertexBc symmetric(double alpha_v, double beta_v) {
    return {Kind::symmetric, alpha_v, beta_v};
  }

  /// True for Kirchhoff and for the symmetric parameters that reproduce it.
  bool is_kirchhoff() const;
  /// beta in {0, pi}: psi is continuous through the vertex (delta-type).
  bool is_continuous() const;
  void validate() const;
};

struct TreeSpec {
  int K = 2;
  double L = 1.0;
  int depth = 10;
  double alpha = std::numbers::pi / 2;
  VertexBc vertex_bc;

  void validate() const;
};

enum class OmegaDist { uniform, two_point, truncated_normal };

std::string to_string(OmegaDist dist);
OmegaDist omega_dist_from_string(const std::string& name);

/// Law of the iid edge variables and the seed that addresses them.
/// Edge lengths are L * exp(lambda * omega_e) with |omega_e| <= 1.
struct DisorderModel {
  double lambda = 0.0;
  OmegaDist dist = OmegaDist::uniform;
  /// Width of the normal before truncation to [-1, 1] (truncated_normal only).
  double sigma = 0.5;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// Exact first two moments of the omega law, used by statistical tests.
double omega_mean(const DisorderModel& dm);
double omega_variance(const DisorderModel& dm);

/// Edge identified by the child indices taken from the root edge.
class EdgeAddress {
 public:
  EdgeAddress() = default;
  explicit EdgeAddress(std::vector<int> path) : path_(std::move(path)) {}

  static EdgeAddress root() { return {}; }

  EdgeAddress child(int index) const;
  EdgeAddress parent() const;

  int generation() const { return static_cast<int>(path_.size()); }
  std::span<const int> path() const { return path_; }
  bool is_root() const { return path_.empty(); }

  friend bool operator==(const EdgeAddress&, const EdgeAddress&) = default;

 private:
  std::vector<int> path_;
};

/// Hash key of the root edge for a given seed.
std::uint64_t root_key(std::uint64_t master_seed);
/// Key of child `index` given its parent's key. Keys of a path are the fold of
/// this function, so lazy traversals can derive them incrementally.
std::uint64_t child_key(std::uint64_t parent_key, int index);
std::uint64_t address_key(std::uint64_t master_seed, const EdgeAddress& addr);

/// One omega draw from an arbitrary stream.
double draw_omega(const DisorderModel& dm, rng::CounterStream& stream);

/// omega for an edge key; deterministic in (key, replica).
double omega_from_key(const DisorderModel& dm, std::uint64_t edge_key, std::uint64_t replica);

double resample_omega(const DisorderModel& dm, const EdgeAddress& addr, std::uint64_t replica);

/// L * exp(lambda * omega), exactly L when lambda == 0.
double length_from_omega(const TreeSpec& spec, const DisorderModel& dm, double omega);

/// Throws OutOfRangeError when addr lies below the truncation depth.
double edge_length(const TreeSpec& spec, const DisorderModel& dm, const EdgeAddress& addr,
                   std::uint64_t replica = 0);

}  // namespace qtree
