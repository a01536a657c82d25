#pragma once

// Monte-Carlo sampling of the WT distribution on random trees.
//
// Two samplers feed the statistics. Direct sampling solves an independent
// truncated tree per replica. Population dynamics keeps a pool of disk values
// and replaces each entry by the recursion applied to K random pool members
// and a fresh edge length, which approaches the stationary law of R^+ on the
// infinite tree.

#include <cstdint>
#include <vector>

#include "qtree/graph_model.hpp"
#include "qtree/wt_engine.hpp"

namespace qtree {

enum class PoolInit { fixed_point, disk_zero };

struct SamplePool {
  /// m at the near end of each pool edge.
  std::vector<DiskValue> values;
  /// m at the far end (merge of its children).
  std::vector<DiskValue> far;
  std::vector<double> lengths;
  HalfPlanePoint z;
  double lambda = 0.0;
  std::uint64_t generation = 0;
  /// Entries redrawn after a singular merge, over the pool's lifetime.
  std::uint64_t resampled = 0;

  std::size_t size() const { return values.size(); }
};

/// fixed_point: every entry is m(Phi) of the clean tree for spec's K, L and
/// vertex condition. disk_zero: every entry is 0.
SamplePool pool_init(std::size_t P, const HalfPlanePoint& z, PoolInit mode,
                     const TreeSpec& spec);

/// One generation. Deterministic in (dm.master_seed, replica_epoch, entry).
SamplePool pool_step(const SamplePool& pool, const TreeSpec& spec, const DisorderModel& dm,
                     std::uint64_t replica_epoch, int threads = 1);

struct SamplerOptions {
  enum class Kind { direct, pool };
  Kind kind = Kind::pool;
  /// Pool sampler.
  std::size_t pool_size = 10000;
  int burn_in = 2000;
  PoolInit init = PoolInit::fixed_point;
  /// After burn-in, samples come from `batches` generations spaced `thinning`
  /// generations apart. Entries of one generation share ancestors, so the
  /// standard error is taken from the spread of the batch means.
  int batches = 100;
  int thinning = 10;
  /// Offset added to the replica index (direct) or epoch (pool).
  std::uint64_t replica_offset = 0;
  DiskValue seed_m{};
  int threads = 1;
};

/// One sampled edge: R^+ at both ends and the edge length.
struct EdgeSample {
  cplx R_near;
  cplx R_far;
  double length = 0.0;
};

/// n root-edge samples. Direct mode uses spec.depth and replicas
/// replica_offset .. replica_offset + n - 1.
std::vector<EdgeSample> sample_edges(const TreeSpec& spec, const DisorderModel& dm,
                                     const HalfPlanePoint& z, std::size_t n,
                                     const SamplerOptions& options = {});

struct LyapunovEstimate {
  double gamma_hat = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

inline constexpr std::size_t kMinGammaSamples = 1000;

/// -log sqrt K minus the sample mean of log |psi~ ratio| across one edge and
/// its far vertex. Needs n >= kMinGammaSamples.
LyapunovEstimate estimate_gamma(const TreeSpec& spec, const DisorderModel& dm,
                                const HalfPlanePoint& z, std::size_t n,
                                const SamplerOptions& options = {});

/// Same estimator on samples already drawn. With batches > 1 the samples are
/// split into that many contiguous batches and the error comes from the batch
/// means.
LyapunovEstimate gamma_from_samples(const TreeSpec& spec, const HalfPlanePoint& z,
                                    const std::vector<EdgeSample>& samples, int batches = 1);

/// Number of batches sample_edges uses for n samples under `options`.
int effective_batches(const SamplerOptions& options, std::size_t n);

struct WidthStats {
  double a = 0.0;
  double xi_minus = 0.0;
  double xi_plus = 0.0;
  double delta = 0.0;
};

/// Relative a-width of the empirical law. With k the largest integer with
/// k/n <= a, xi_- is the (k+1)-th and xi_+ the (n-k)-th order statistic.
/// delta = 1 - xi_-/xi_+, clamped at 0 when the brackets cross.
WidthStats quantile_width(std::vector<double> samples, double a);

struct JensenCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double width_term = 0.0;
  double std_error = 0.0;
  bool pass = false;
};

/// E log(K^-1 sum X_j) >= E log X + (a^2/4) delta(X, a)^2, lhs by resampling
/// n_trials K-tuples. pass allows 3 combined standard errors.
JensenCheck check_jensen(const std::vector<double>& samples, int K, double a,
                         std::size_t n_trials, std::uint64_t seed = 0);

/// lhs by enumerating all n^K tuples of the empirical law.
JensenCheck jensen_exact(const std::vector<double>& samples, int K, double a);

struct FluctuationReport {
  double delta_im = 0.0;
  double delta_mod = 0.0;
  double gamma_hat = 0.0;
  double gamma_stderr = 0.0;
  double bound1_rhs = 0.0;
  double bound2_rhs = 0.0;
  bool bound1_ok = false;
  bool bound2_ok = false;
  std::size_t n = 0;
};

/// delta(Im R, a)^2 <= 8 a^-2 gamma and
/// delta(|cos(w L) + sin(w L) R / w|^2, a)^2 <= 512 (K+1)^2 a^-2 gamma, with
/// gamma replaced by gamma_hat + 3 stderr.
FluctuationReport fluctuation_report(const TreeSpec& spec, const DisorderModel& dm,
                                     const HalfPlanePoint& z, double a, std::size_t n,
                                     const SamplerOptions& options = {});

struct StabilityRow {
  double lambda = 0.0;
  double eta = 0.0;
  double eps = 0.0;
  double exceedance = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct StabilityOptions {
  /// Energies per cell, stratified over the interval.
  std::size_t n_energies = 20;
  int burn_in = 4000;
  int threads = 1;
};

/// Fraction of (E, sample) pairs with |R(E + i eta) - Phi(E + i0)| > eps, E
/// drawn stratified from [E_lo, E_hi] and R from a pool of n / n_energies
/// entries per energy. Rows are ordered by lambda as given, then eta.
std::vector<StabilityRow> stability_scan(const TreeSpec& spec, const DisorderModel& dm,
                                         const std::vector<double>& lambdas,
                                         const std::vector<double>& etas, double E_lo,
                                         double E_hi, double eps, std::size_t n,
                                         const StabilityOptions& options = {});

}  // namespace qtree
