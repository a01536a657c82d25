#include "qtree/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qtree/error.hpp"
#include "qtree/observables.hpp"
#include "qtree/parallel.hpp"
#include "qtree/regular.hpp"

namespace qtree {

namespace {

constexpr cplx kI{0.0, 1.0};
constexpr int kMaxRedraws = 64;

DiskValue merge_disk(std::span<const DiskValue> children, const HalfPlanePoint& z,
                     const VertexBc& bc) {
  if (bc.is_kirchhoff()) return vertex_merge_m(children, z);
  std::vector<WtValue> rs;
  rs.reserve(children.size());
  for (const DiskValue& c : children) rs.push_back(r_from_m(c, z));
  return m_from_r(vertex_merge_R(rs, bc), z);
}

// Mean and standard error; the mean is accumulated relative to the first
// term so identical inputs give an exact mean and a zero error.
struct MeanErr {
  double mean = 0.0;
  double se = 0.0;
};

MeanErr mean_and_error(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const double x0 = x[0];
  double s = 0.0;
  for (double v : x) s += v - x0;
  const double shift = s / static_cast<double>(n);
  const double mean = x0 + shift;
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : x) {
    const double d = (v - x0) - shift;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

std::size_t batch_size(std::size_t n, int G, int b) {
  const auto g = static_cast<std::size_t>(G);
  return n / g + (static_cast<std::size_t>(b) < n % g ? 1 : 0);
}

std::uint64_t pool_key(std::uint64_t master_seed, std::uint64_t epoch) {
  return rng::combine(rng::combine(rng::mix64(master_seed), rng::kTagPool), epoch);
}

void validate_level(double a) {
  if (!(a > 0.0 && a <= 0.5)) throw DomainError("quantile level a must lie in (0, 1/2]");
}

void validate_positive(const std::vector<double>& samples) {
  if (samples.empty()) throw InsufficientSamplesError("no samples");
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw DomainError("samples must be positive and finite");
    }
  }
}

}  // namespace

SamplePool pool_init(std::size_t P, const HalfPlanePoint& z, PoolInit mode,
                     const TreeSpec& spec) {
  spec.validate();
  require_interior(z, "pool_init");
  if (P == 0) throw InsufficientSamplesError("pool size must be positive");
  SamplePool pool;
  pool.z = z;
  DiskValue near{};
  DiskValue far{};
  if (mode == PoolInit::fixed_point) {
    const FixedPoint fp = fixed_point_R(z, spec.K, spec.L, spec.vertex_bc);
    near = m_from_r({fp.phi}, z);
    const std::vector<WtValue> kids(static_cast<std::size_t>(spec.K), WtValue{fp.phi});
    far = m_from_r(vertex_merge_R(kids, spec.vertex_bc), z);
  }
  pool.values.assign(P, near);
  pool.far.assign(P, far);
  pool.lengths.assign(P, spec.L);
  return pool;
}

SamplePool pool_step(const SamplePool& pool, const TreeSpec& spec, const DisorderModel& dm,
                     std::uint64_t replica_epoch, int threads) {
  require_interior(pool.z, "pool_step");
  const std::size_t P = pool.size();
  if (P == 0) throw InsufficientSamplesError("empty pool");
  const cplx w = sqrt_upper(pool.z).w;
  const std::uint64_t key = pool_key(dm.master_seed, replica_epoch);

  SamplePool next;
  next.z = pool.z;
  next.lambda = dm.lambda;
  next.generation = pool.generation + 1;
  next.values.resize(P);
  next.far.resize(P);
  next.lengths.resize(P);
  std::vector<std::uint32_t> redraws(P, 0);

  parallel_for(P, threads, [&](std::size_t i) {
    rng::CounterStream stream(rng::combine(key, i));
    thread_local std::vector<DiskValue> kids;
    kids.resize(static_cast<std::size_t>(spec.K));
    for (int attempt = 0;; ++attempt) {
      for (auto& k : kids) k = pool.values[stream.index(P)];
      try {
        next.far[i] = merge_disk(kids, pool.z, spec.vertex_bc);
        break;
      } catch (const SingularError&) {
        if (attempt + 1 >= kMaxRedraws) throw;
        ++redraws[i];
      }
    }
    const double length = length_from_omega(spec, dm, draw_omega(dm, stream));
    next.lengths[i] = length;
    next.values[i] = {next.far[i].m * std::exp(2.0 * kI * w * length)};
  });
  next.resampled = pool.resampled;
  for (auto r : redraws) next.resampled += r;
  return next;
}

std::vector<EdgeSample> sample_edges(const TreeSpec& spec, const DisorderModel& dm,
                                     const HalfPlanePoint& z, std::size_t n,
                                     const SamplerOptions& options) {
  spec.validate();
  dm.validate();
  require_interior(z, "sample_edges");
  std::vector<EdgeSample> out(n);
  if (n == 0) return out;

  if (options.kind == SamplerOptions::Kind::direct) {
    const cplx w = sqrt_upper(z).w;
    parallel_for(n, options.threads, [&](std::size_t r) {
      const std::uint64_t replica = options.replica_offset + r;
      const DiskValue far =
          solve_subtree_far_m(spec, dm, z, EdgeAddress::root(), options.seed_m, replica);
      const double length = edge_length(spec, dm, EdgeAddress::root(), replica);
      const DiskValue near{far.m * std::exp(2.0 * kI * w * length)};
      out[r] = {r_from_m(near, z).R, r_from_m(far, z).R, length};
    });
    return out;
  }

  const int G = effective_batches(options, n);
  if (options.thinning < 1) throw ValidationError("thinning must be >= 1");
  if ((n + G - 1) / G > options.pool_size) {
    throw ValidationError("pool sampler: n / batches exceeds the pool size");
  }
  SamplePool pool = pool_init(options.pool_size, z, options.init, spec);
  std::uint64_t epoch = options.replica_offset;
  for (int g = 0; g < options.burn_in; ++g) pool = pool_step(pool, spec, dm, epoch++, options.threads);
  std::size_t filled = 0;
  for (int b = 0; b < G; ++b) {
    const std::size_t take = batch_size(n, G, b);
    for (std::size_t i = 0; i < take; ++i, ++filled) {
      out[filled] = {r_from_m(pool.values[i], z).R, r_from_m(pool.far[i], z).R, pool.lengths[i]};
    }
    if (b + 1 == G) break;
    for (int t = 0; t < options.thinning; ++t) {
      pool = pool_step(pool, spec, dm, epoch++, options.threads);
    }
  }
  return out;
}

int effective_batches(const SamplerOptions& options, std::size_t n) {
  if (options.kind == SamplerOptions::Kind::direct) return 1;
  if (options.batches < 1) throw ValidationError("batches must be >= 1");
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.batches), n));
}

LyapunovEstimate gamma_from_samples(const TreeSpec& spec, const HalfPlanePoint& z,
                                    const std::vector<EdgeSample>& samples, int batches) {
  if (samples.size() < 2) throw InsufficientSamplesError("gamma needs at least two samples");
  if (batches < 1 || static_cast<std::size_t>(batches) > samples.size()) {
    throw ValidationError("batches must lie in [1, number of samples]");
  }
  std::vector<double> terms(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EdgeSample& s = samples[i];
    const cplx ratio = edge_psi_ratio({s.R_near}, s.length, z);
    const cplx factor = tilde_edge_factor({s.R_far}, {s.R_near}, spec.vertex_bc);
    terms[i] = std::log(std::abs(ratio)) + std::log(std::abs(factor));
  }
  const MeanErr me = mean_and_error(terms);
  double se = me.se;
  if (batches > 1) {
    std::vector<double> means;
    std::size_t pos = 0;
    for (int b = 0; b < batches; ++b) {
      const std::size_t len = batch_size(terms.size(), batches, b);
      std::vector<double> chunk(terms.begin() + static_cast<std::ptrdiff_t>(pos),
                                terms.begin() + static_cast<std::ptrdiff_t>(pos + len));
      means.push_back(mean_and_error(chunk).mean);
      pos += len;
    }
    se = mean_and_error(means).se;
  }
  return {-0.5 * std::log(static_cast<double>(spec.K)) - me.mean, se, samples.size()};
}

LyapunovEstimate estimate_gamma(const TreeSpec& spec, const DisorderModel& dm,
                                const HalfPlanePoint& z, std::size_t n,
                                const SamplerOptions& options) {
  if (n < kMinGammaSamples) {
    throw InsufficientSamplesError("estimate_gamma needs at least " +
                                   std::to_string(kMinGammaSamples) + " samples");
  }
  return gamma_from_samples(spec, z, sample_edges(spec, dm, z, n, options),
                            effective_batches(options, n));
}

WidthStats quantile_width(std::vector<double> samples, double a) {
  validate_level(a);
  validate_positive(samples);
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::floor(a * nd));
  while (k > 0 && static_cast<double>(k) / nd > a) --k;
  while (static_cast<double>(k + 1) / nd <= a) ++k;
  WidthStats ws;
  ws.a = a;
  ws.xi_minus = samples[std::min(k, n - 1)];
  ws.xi_plus = samples[n - 1 - std::min(k, n - 1)];
  ws.delta = std::max(0.0, 1.0 - ws.xi_minus / ws.xi_plus);
  return ws;
}

JensenCheck check_jensen(const std::vector<double>& samples, int K, double a,
                         std::size_t n_trials, std::uint64_t seed) {
  if (K < 1) throw ValidationError("K must be >= 1");
  if (n_trials < 2) throw InsufficientSamplesError("check_jensen needs n_trials >= 2");
  const WidthStats ws = quantile_width(samples, a);

  std::vector<double> logs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) logs[i] = std::log(samples[i]);
  const MeanErr rhs_me = mean_and_error(logs);

  rng::CounterStream stream(rng::combine(rng::mix64(seed), rng::kTagJensen));
  std::vector<double> trials(n_trials);
  for (auto& t : trials) {
    double sum = 0.0;
    for (int j = 0; j < K; ++j) sum += samples[stream.index(samples.size())];
    t = std::log(sum / K);
  }
  const MeanErr lhs_me = mean_and_error(trials);

  JensenCheck out;
  out.width_term = a * a / 4.0 * ws.delta * ws.delta;
  out.lhs = lhs_me.mean;
  out.rhs = rhs_me.mean + out.width_term;
  out.std_error = std::hypot(lhs_me.se, rhs_me.se);
  out.pass = out.lhs >= out.rhs - 3.0 * out.std_error;
  return out;
}

JensenCheck jensen_exact(const std::vector<double>& samples, int K, double a) {
  if (K < 1) throw ValidationError("K must be >= 1");
  const WidthStats ws = quantile_width(samples, a);
  const std::size_t n = samples.size();
  double tuples = 1.0;
  for (int j = 0; j < K; ++j) tuples *= static_cast<double>(n);
  if (tuples > 5e7) throw OutOfRangeError("jensen_exact: too many tuples to enumerate");

  double log_sum = 0.0;
  for (double x : samples) log_sum += std::log(x);
  std::vector<std::size_t> idx(static_cast<std::size_t>(K), 0);
  double lhs_sum = 0.0;
  for (;;) {
    double s = 0.0;
    for (std::size_t i : idx) s += samples[i];
    lhs_sum += std::log(s / K);
    int pos = 0;
    while (pos < K && ++idx[static_cast<std::size_t>(pos)] == n) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == K) break;
  }
  JensenCheck out;
  out.width_term = a * a / 4.0 * ws.delta * ws.delta;
  out.lhs = lhs_sum / tuples;
  out.rhs = log_sum / static_cast<double>(n) + out.width_term;
  out.pass = out.lhs >= out.rhs - 1e-12 * std::max(1.0, std::abs(out.rhs));
  return out;
}

FluctuationReport fluctuation_report(const TreeSpec& spec, const DisorderModel& dm,
                                     const HalfPlanePoint& z, double a, std::size_t n,
                                     const SamplerOptions& options) {
  validate_level(a);
  if (n < kMinGammaSamples) {
    throw InsufficientSamplesError("fluctuation_report needs at least " +
                                   std::to_string(kMinGammaSamples) + " samples");
  }
  const std::vector<EdgeSample> samples = sample_edges(spec, dm, z, n, options);
  std::vector<double> im(n);
  std::vector<double> mod(n);
  for (std::size_t i = 0; i < n; ++i) {
    im[i] = samples[i].R_near.imag();
    mod[i] = std::norm(edge_psi_ratio({samples[i].R_near}, samples[i].length, z));
  }
  const LyapunovEstimate g =
      gamma_from_samples(spec, z, samples, effective_batches(options, n));
  FluctuationReport rep;
  rep.n = n;
  rep.gamma_hat = g.gamma_hat;
  rep.gamma_stderr = g.std_error;
  rep.delta_im = quantile_width(im, a).delta;
  rep.delta_mod = quantile_width(mod, a).delta;
  const double gamma_upper = g.gamma_hat + 3.0 * g.std_error;
  const double K1 = spec.K + 1.0;
  rep.bound1_rhs = 8.0 / (a * a) * gamma_upper;
  rep.bound2_rhs = 512.0 * K1 * K1 / (a * a) * gamma_upper;
  rep.bound1_ok = rep.delta_im * rep.delta_im <= rep.bound1_rhs;
  rep.bound2_ok = rep.delta_mod * rep.delta_mod <= rep.bound2_rhs;
  return rep;
}

std::vector<StabilityRow> stability_scan(const TreeSpec& spec, const DisorderModel& dm,
                                         const std::vector<double>& lambdas,
                                         const std::vector<double>& etas, double E_lo,
                                         double E_hi, double eps, std::size_t n,
                                         const StabilityOptions& options) {
  spec.validate();
  dm.validate();
  if (!(E_lo < E_hi)) throw ValidationError("stability: energy interval must satisfy E_lo < E_hi");
  if (!(eps > 0.0)) throw ValidationError("stability: eps must be > 0");
  if (options.n_energies == 0 || n < options.n_energies) {
    throw InsufficientSamplesError("stability: n must be at least n_energies");
  }
  for (double eta : etas) {
    if (!(eta > 0.0)) throw ValidationError("stability: eta entries must be > 0");
  }
  const std::size_t nE = options.n_energies;

  // Energies and their clean boundary fixed points are shared by all cells.
  std::vector<double> energies(nE);
  std::vector<cplx> phis(nE);
  const std::uint64_t ekey = rng::combine(rng::mix64(dm.master_seed), rng::kTagEnergy);
  for (std::size_t j = 0; j < nE; ++j) {
    rng::CounterStream s(rng::combine(ekey, j));
    energies[j] = E_lo + (static_cast<double>(j) + s.uniform01()) * (E_hi - E_lo) /
                             static_cast<double>(nE);
    phis[j] = fixed_point_R({energies[j], 0.0}, spec.K, spec.L, spec.vertex_bc).phi;
  }

  std::vector<StabilityRow> rows;
  for (double lambda : lambdas) {
    for (double eta : etas) {
      DisorderModel cell = dm;
      cell.lambda = lambda;
      cell.validate();
      std::vector<std::size_t> exceed(nE, 0);
      std::vector<std::size_t> counts(nE, 0);
      parallel_for(nE, options.threads, [&](std::size_t j) {
        DisorderModel dj = cell;
        dj.master_seed = rng::combine(dm.master_seed, j);
        const HalfPlanePoint z{energies[j], eta};
        const std::size_t P = n / nE + (j < n % nE ? 1 : 0);
        SamplePool pool = pool_init(P, z, PoolInit::fixed_point, spec);
        for (int g = 0; g < options.burn_in; ++g) {
          pool = pool_step(pool, spec, dj, static_cast<std::uint64_t>(g));
        }
        for (const DiskValue& m : pool.values) {
          if (std::abs(r_from_m(m, z).R - phis[j]) > eps) ++exceed[j];
        }
        counts[j] = P;
      });
      std::size_t total = 0;
      std::size_t hits = 0;
      for (std::size_t j = 0; j < nE; ++j) {
        total += counts[j];
        hits += exceed[j];
      }
      StabilityRow row;
      row.lambda = lambda;
      row.eta = eta;
      row.eps = eps;
      row.n = total;
      row.exceedance = static_cast<double>(hits) / static_cast<double>(total);
      row.std_error =
          std::sqrt(row.exceedance * (1.0 - row.exceedance) / static_cast<double>(total));
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace qtree
