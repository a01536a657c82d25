// Acceptance runner: `acceptance N` checks one criterion, no argument runs all.
// Prints one line per criterion and exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qtree/cli.hpp"
#include "qtree/ensemble.hpp"
#include "qtree/observables.hpp"
#include "qtree/regular.hpp"
#include "qtree/wt_engine.hpp"

using namespace qtree;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

big band_edge(int K, double L, int n, bool upper) {
  const big sk = boost::multiprecision::sqrt(big(K));
  const big theta = boost::multiprecision::atan((sk - 1 / sk) / 2);
  const big pi = boost::math::constants::pi<big>();
  const big k = upper ? (pi * (n + 1) - theta) / big(L) : (pi * n + theta) / big(L);
  return k * k;
}

Outcome criterion1() {
  double worst = 0.0;
  for (int K : {2, 3, 4}) {
    for (double L : {0.5, 1.0, 2.0}) {
      const std::string Ks = std::to_string(K);
      std::ostringstream Ls;
      Ls << L;
      const RunConfig rc = load_config(std::nullopt, {"K=" + Ks, "L=" + Ls.str(), "bands.n_max=3"});
      std::istringstream csv(to_csv(compute_command("bands", rc, 1)));
      std::string line;
      std::getline(csv, line);
      int rows = 0;
      while (std::getline(csv, line)) {
        int n = 0;
        double a = 0, b = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &n, &a, &b) != 3) return {false, "bad row"};
        worst = std::max(worst, std::abs(a - static_cast<double>(band_edge(K, L, n, false))));
        worst = std::max(worst, std::abs(b - static_cast<double>(band_edge(K, L, n, true))));
        ++rows;
      }
      if (rows != 4) return {false, "expected 4 bands"};
    }
  }
  return {worst < 1e-9, fmt("max |error| %.3g (tol 1e-9)", worst)};
}

// m -> e^{2 i w L} g(K (1+m)/(1-m)) iterated from 0 until |dm| < tol.
cplx iterate_fixed_point(cplx z, int K, double L, double tol) {
  const cplx w = std::sqrt(z);
  const cplx phase = std::exp(2.0 * I * w * L);
  cplx m{0.0, 0.0};
  for (long it = 0; it < 100'000'000; ++it) {
    const cplx x = static_cast<double>(K) * (1.0 + m) / (1.0 - m);
    const cplx next = phase * (x - 1.0) / (x + 1.0);
    const double d = std::abs(next - m);
    m = next;
    if (d < tol) break;
  }
  return I * w * (1.0 + m) / (1.0 - m);
}

Outcome criterion2() {
  const Band b0 = ac_bands(2, 1.0, 0).intervals[0];
  double res = 0.0, diff = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double E = b0.a + (b0.b - b0.a) * (k + 0.5) / 200.0;
    const HalfPlanePoint z{E, 1e-3};
    const FixedPoint fp = fixed_point_R(z, 2, 1.0);
    res = std::max(res, fp.residual);
    diff = std::max(diff, std::abs(fp.phi - iterate_fixed_point(z.z(), 2, 1.0, 1e-13)));
  }
  return {res < 1e-12 && diff < 1e-8,
          fmt("max residual %.3g (tol 1e-12), max |quadratic - iterated| %.3g (tol 1e-8)", res,
              diff)};
}

Outcome criterion3() {
  const Band b0 = ac_bands(2, 1.0, 0).intervals[0];
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> E(b0.a, b0.b), lg(-3.0, 0.0), lam(0.0, 0.2);
  int fails = 0;
  for (int k = 0; k < 1000; ++k) {
    TreeSpec spec;
    spec.depth = static_cast<int>(gen() % 11);
    DisorderModel dm;
    dm.lambda = lam(gen);
    dm.master_seed = gen();
    const HalfPlanePoint z{E(gen), std::pow(10.0, lg(gen))};
    const cplx R = solve_root_R(spec, dm, z).R;
    const double l = edge_length(spec, dm, EdgeAddress::root());
    const double bound =
        2.0 * std::sqrt(std::abs(z.z())) / (1.0 - std::exp(-2.0 * l * sqrt_upper(z).w.imag()));
    if (!(R.imag() > 0.0) || !(std::abs(R) <= bound)) ++fails;
  }
  return {fails == 0, fmt("%g of 1000 solves violate Im R > 0 or the WT bound", fails)};
}

Outcome criterion4() {
  TreeSpec spec;
  DisorderModel dm;
  dm.lambda = 0.1;
  const HalfPlanePoint z{2.0, 0.05};
  double prev = INFINITY;
  bool monotone = true;
  std::string seq;
  for (int N = 4; N <= 10; ++N) {
    spec.depth = N;
    const double d =
        std::abs(solve_root_R(spec, dm, z, {0.0}).R - solve_root_R(spec, dm, z, {0.5}).R);
    if (!(d < prev)) monotone = false;
    prev = d;
    seq += fmt(" %.3g", d);
  }
  return {monotone && prev < 1e-6,
          "discrepancy N=4..10:" + seq + (monotone ? " (monotone)" : " (not monotone)") +
              ", tol 1e-6 at N=10"};
}

Outcome criterion5() {
  long conservation = 0, monotonicity = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TreeSpec spec;
    spec.depth = 6;
    DisorderModel dm;
    dm.lambda = 0.1;
    dm.master_seed = seed;
    const HalfPlanePoint z{2.0, 0.05};
    const TreeSolution sol = solve_tree(spec, dm, z);
    const TreeCurrents tc = tree_currents(sol, spec.vertex_bc);
    for (std::size_t i = 0; i < sol.size(); ++i) {
      if (!sol.is_leaf(i)) {
        double out = 0.0;
        for (int j = 0; j < sol.K; ++j) out += tc.J_near[sol.child(i, j)];
        const double r = std::abs(tc.J_far[i] - out) / tc.J_far[i];
        worst = std::max(worst, r);
        if (!(r <= 1e-12)) ++conservation;
      }
      double prev = tc.J_near[i];
      for (int k = 1; k <= 10; ++k) {
        const double x = sol.length[i] * k / 11.0;
        const cplx psi = tc.psi_near[i] * edge_psi_ratio({tc.R_near[i]}, x, z);
        const double J = current(edge_step_R({tc.R_near[i]}, x, z), std::norm(psi), x).J;
        if (!(J <= prev)) ++monotonicity;
        prev = J;
      }
      if (!(tc.J_far[i] <= prev)) ++monotonicity;
    }
  }
  return {conservation == 0 && monotonicity == 0,
          fmt("conservation violations %g (max rel %.3g, tol 1e-12), monotonicity violations %g",
              static_cast<double>(conservation), worst, static_cast<double>(monotonicity))};
}

Outcome criterion6() {
  double prev = INFINITY;
  bool decreasing = true;
  std::string seq;
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double g = gamma_clean({2.0, eta}, 2, 1.0);
    if (!(g < prev)) decreasing = false;
    prev = g;
    seq += fmt(" %.3g", g);
  }
  return {decreasing && prev < 5e-3, "gamma0 over eta 1e-1..1e-4:" + seq + ", tol 5e-3"};
}

std::vector<double> lognormal(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::lognormal_distribution<double> d(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = d(gen);
  return x;
}

Outcome criterion7() {
  int fails = 0, total = 0;
  double min_margin = INFINITY;
  for (int K : {2, 3}) {
    for (double a : {0.125, 0.25, 0.5}) {
      const JensenCheck e = jensen_exact({1.0, 2.0}, K, a);
      const JensenCheck l = check_jensen(lognormal(100000, 0.5, 100 + K), K, a, 100000, 7);
      for (const auto& c : {e, l}) {
        ++total;
        if (!c.pass) ++fails;
        min_margin = std::min(min_margin, c.lhs - c.rhs);
      }
    }
  }
  return {fails == 0, fmt("%g of %g cases fail, min lhs - rhs %.3g", fails, total, min_margin)};
}

Outcome criterion8() {
  const TreeSpec spec;
  std::string detail;
  bool ok = true;
  for (double lambda : {0.05, 0.1}) {
    DisorderModel dm;
    dm.lambda = lambda;
    const FluctuationReport r = fluctuation_report(spec, dm, {2.0, 0.01}, 0.25, 10000);
    ok = ok && r.bound1_ok && r.bound2_ok;
    detail += fmt(" lambda=%g: delta_im^2 %.3g <= %.3g,", lambda, r.delta_im * r.delta_im,
                  r.bound1_rhs);
    detail += fmt(" delta_mod^2 %.3g <= %.3g;", r.delta_mod * r.delta_mod, r.bound2_rhs);
  }
  return {ok, detail.substr(1)};
}

Outcome criterion9() {
  const TreeSpec spec;
  const std::vector<double> lambdas{0.2, 0.1, 0.05, 0.02};
  const auto rows = stability_scan(spec, DisorderModel{}, lambdas, {1e-3}, 1.5, 2.5, 0.1, 2000);
  bool ok = rows.size() == lambdas.size();
  std::string seq;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    seq += fmt(" %.3g(%.2g)", rows[i].exceedance, rows[i].std_error);
    if (i > 0) {
      const double slack = 3.0 * std::hypot(rows[i].std_error, rows[i - 1].std_error);
      if (!(rows[i].exceedance <= rows[i - 1].exceedance + slack)) ok = false;
    }
  }
  const bool last = !rows.empty() && rows.back().exceedance < 0.1;
  return {ok && last, "exceedance(se) for lambda 0.2..0.02:" + seq + ", last cell tol 0.1"};
}

Outcome criterion10() {
  TreeSpec spec;
  spec.depth = 200000;
  const double eta = 1e-4;
  std::vector<double> grid;
  for (int k = 0; k <= 900; ++k) grid.push_back(0.01 * k);
  const auto pts = spectral_density(spec, DisorderModel{}, grid, eta, 0);
  // Band: first contiguous run with rho above sqrt(eta).
  double a = NAN, b = NAN;
  for (const auto& p : pts) {
    if (p.ok() && p.rho > std::sqrt(eta)) {
      if (std::isnan(a)) a = p.E;
      b = p.E;
    } else if (!std::isnan(a)) {
      break;
    }
  }
  const Band b0 = ac_bands(2, 1.0, 0).intervals[0];
  const double da = std::abs(a - b0.a), db = std::abs(b - b0.b);
  return {da <= 0.02 && db <= 0.02,
          fmt("band 0 found [%.4g, %.4g], edge errors %.3g", a, b, std::max(da, db)) +
              " (tol 0.02)"};
}

Outcome criterion11() {
  const VertexBc bc = VertexBc::symmetric(kPi / 2, kPi / 4);
  const HalfPlanePoint z{2.0, 1e-2};
  const double plain = gamma_clean(z, 2, 1.0, bc);
  const double tilde = gamma_clean_tilde(z, 2, 1.0, bc);
  TreeSpec spec;
  spec.vertex_bc = bc;
  SamplerOptions o;
  o.pool_size = 1000;
  o.burn_in = 5;
  o.batches = 10;
  const double sampled = estimate_gamma(spec, DisorderModel{}, z, 1000, o).gamma_hat;
  const double d = std::max(std::abs(plain - tilde), std::abs(plain - sampled));
  return {d < 1e-8, fmt("plain %.12g, tilde %.12g, max diff %.3g (tol 1e-8)", plain, tilde, d)};
}

struct Criterion {
  std::function<Outcome()> check;
  double limit_s;
};

const std::vector<Criterion> kCriteria = {
    {criterion1, 1},  {criterion2, 5},   {criterion3, 30},  {criterion4, 60},
    {criterion5, 30}, {criterion6, 1},   {criterion7, 30},  {criterion8, 300},
    {criterion9, 600}, {criterion10, 30}, {criterion11, 1}};

bool run_one(int n) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = kCriteria[n - 1].check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double limit = kCriteria[n - 1].limit_s;
  const bool pass = o.pass && secs < limit;
  std::printf("criterion %d: %s  %s  [%.2f s, limit %g s]\n", n, pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs, limit);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  const int count = static_cast<int>(kCriteria.size());
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > count) {
      std::fprintf(stderr, "usage: acceptance [1..%d]\n", count);
      return 2;
    }
    return run_one(n) ? 0 : 1;
  }
  bool all = true;
  for (int n = 1; n <= count; ++n) all = run_one(n) && all;
  return all ? 0 : 1;
}
