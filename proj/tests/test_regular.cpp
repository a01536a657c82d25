#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "doctest.h"
#include "qtree/error.hpp"
#include "qtree/regular.hpp"

using namespace qtree;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx I{0.0, 1.0};

// One generation of the clean recursion on R, written out directly:
// K copies of R summed at the vertex, then pulled back along an edge.
cplx one_generation(cplx R, cplx z, int K, double L) {
  const cplx w = std::sqrt(z);
  const cplx c = std::cos(w * L), s = std::sin(w * L);
  const cplx far = static_cast<double>(K) * R;
  return (far * c + w * s) / (c - far * s / w);
}

// Iterates the disk map m -> e^{2 i w L} g(K (1+m)/(1-m)) from m = 0.
cplx iterate_fixed_point(cplx z, int K, double L, double tol, long max_iter = 50'000'000) {
  const cplx w = std::sqrt(z);
  const cplx phase = std::exp(2.0 * I * w * L);
  cplx m{0.0, 0.0};
  for (long it = 0; it < max_iter; ++it) {
    const cplx x = static_cast<double>(K) * (1.0 + m) / (1.0 - m);
    const cplx next = phase * (x - 1.0) / (x + 1.0);
    const double d = std::abs(next - m);
    m = next;
    if (d < tol) break;
  }
  return I * w * (1.0 + m) / (1.0 - m);
}

big band_edge(int K, double L, int n, bool upper) {
  const big sk = boost::multiprecision::sqrt(big(K));
  const big theta = boost::multiprecision::atan((sk - 1 / sk) / 2);
  const big pi = boost::math::constants::pi<big>();
  const big k = upper ? (pi * (n + 1) - theta) / big(L) : (pi * n + theta) / big(L);
  return k * k;
}

}  // namespace

TEST_CASE("band examples") {
  const BandList b1 = ac_bands(1, 1.0, 2);
  CHECK(b1.theta == 0.0);
  CHECK(b1.intervals[0].a == 0.0);
  CHECK(std::abs(b1.intervals[0].b - kPi * kPi) < 1e-12);
  CHECK(b1.intervals[0].b == b1.intervals[1].a);

  const BandList b2 = ac_bands(2, 1.0, 0);
  CHECK(std::abs(b2.theta - 0.339837) < 1e-6);
  CHECK(std::abs(b2.intervals[0].a - 0.115488) < 1e-5);
  CHECK(std::abs(b2.intervals[0].b - 7.849829) < 1e-5);

  const BandList b4 = ac_bands(4, 1.0, 0);
  CHECK(std::abs(b4.theta - std::atan(0.75)) < 1e-15);
  CHECK(std::abs(b4.intervals[0].a - 0.414093) < 1e-5);
  CHECK(std::abs(b4.intervals[0].b - 6.240464) < 1e-5);
}

TEST_CASE("band edges against extended precision") {
  for (int K : {1, 2, 3, 4, 7}) {
    for (double L : {0.5, 1.0, 2.0, 3.3}) {
      const BandList bl = ac_bands(K, L, 3);
      REQUIRE(bl.intervals.size() == 4);
      for (int n = 0; n <= 3; ++n) {
        CHECK(std::abs(bl.intervals[n].a - static_cast<double>(band_edge(K, L, n, false))) < 1e-9);
        CHECK(std::abs(bl.intervals[n].b - static_cast<double>(band_edge(K, L, n, true))) < 1e-9);
        CHECK(bl.intervals[n].a < bl.intervals[n].b);
        if (n > 0) CHECK(bl.intervals[n - 1].b <= bl.intervals[n].a);
      }
    }
  }
  CHECK_THROWS_AS(ac_bands(0, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(ac_bands(2, -1.0, 1), ValidationError);
}

TEST_CASE("mid-band fixed point at the real axis") {
  const FixedPoint fp = fixed_point_R({2.0, 0.0}, 2, 1.0);
  CHECK(fp.phi.imag() > 0.0);
  CHECK(fp.residual < 1e-12);
  CHECK_FALSE(fp.near_band_edge);
  CHECK(fp.abs_m < 1.0);
  // Iterating at eta = 1e-6 to 1e-13 takes ~1e9 steps; the oracle runs at
  // eta = 1e-4 instead, where Phi differs from its boundary value by O(eta).
  const cplx iterated = iterate_fixed_point({2.0, 1e-4}, 2, 1.0, 1e-13);
  CHECK(std::abs(fp.phi - iterated) < 1e-3);
}

TEST_CASE("quadratic and iterated fixed points agree inside the half plane") {
  for (double E : {0.5, 2.0, 5.0, 7.5}) {
    for (double eta : {1e-1, 1e-2, 1e-3}) {
      const FixedPoint fp = fixed_point_R({E, eta}, 2, 1.0);
      CHECK(fp.residual < 1e-12);
      CHECK(fp.abs_m < 1.0);
      const cplx iterated = iterate_fixed_point({E, eta}, 2, 1.0, 1e-13);
      CHECK(std::abs(fp.phi - iterated) < 1e-8);
      CHECK(std::abs(one_generation(fp.phi, {E, eta}, 2, 1.0) - fp.phi) < 1e-10);
    }
  }
}

TEST_CASE("gap point E = 9 has a real fixed point") {
  // Discriminant of (K s/w) x^2 + (K-1) c x + w s at w = 3, K = 2, L = 1.
  const big c = boost::multiprecision::cos(big(3)), s = boost::multiprecision::sin(big(3));
  const big disc = c * c - 4 * 2 * s * s;
  CHECK(disc > 0);
  const FixedPoint fp = fixed_point_R({9.0, 0.0}, 2, 1.0);
  CHECK(fp.phi.imag() == 0.0);
  CHECK(fp.residual < 1e-12);
  CHECK(fp.multiplier < 1.0);
  CHECK(ac_bands(2, 1.0, 1).intervals[0].b < 9.0);
  CHECK(ac_bands(2, 1.0, 1).intervals[1].a > 9.0);
}

TEST_CASE("clean Lyapunov exponent") {
  double prev = INFINITY;
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double g = gamma_clean({2.0, eta}, 2, 1.0);
    CHECK(g < prev);
    CHECK(g > 0.0);
    prev = g;
  }
  CHECK(prev < 5e-3);
  for (double E : {0.5, 2.0, 7.0}) CHECK(std::abs(gamma_clean({E, 0.0}, 1, 1.0)) < 1e-12);
  for (double E : {-3.0, 0.05, 2.0, 9.0, 30.0}) CHECK(gamma_clean({E, 0.5}, 2, 1.0) > 0.0);
}

TEST_CASE("band and gap points at the real axis") {
  const BandList bl = ac_bands(2, 1.0, 3);
  const double margin = 1e-3;
  for (int n = 0; n <= 2; ++n) {
    const Band b = bl.intervals[n];
    for (int k = 0; k < 200; ++k) {
      const double E = b.a + margin + (b.b - b.a - 2 * margin) * (k + 0.5) / 200.0;
      CHECK_MESSAGE(fixed_point_R({E, 0.0}, 2, 1.0).phi.imag() > 0.0, "E=", E);
    }
    const double lo = n == 0 ? margin : bl.intervals[n - 1].b;
    const double hi = b.a;
    for (int k = 0; k < 50; ++k) {
      const double E = lo + margin + (hi - lo - 2 * margin) * (k + 0.5) / 50.0;
      const FixedPoint fp = fixed_point_R({E, 0.0}, 2, 1.0);
      CHECK_MESSAGE(fp.phi.imag() == 0.0, "E=", E);
      CHECK(fp.multiplier < 1.0);
      CHECK(std::abs(fp.abs_m - 1.0) < 1e-12);
    }
  }
  // The gap above band 2.
  for (int k = 0; k < 50; ++k) {
    const double lo = bl.intervals[2].b, hi = bl.intervals[3].a;
    const double E = lo + margin + (hi - lo - 2 * margin) * (k + 0.5) / 50.0;
    CHECK(fixed_point_R({E, 0.0}, 2, 1.0).phi.imag() == 0.0);
  }
}

TEST_CASE("fixed point is Herglotz in z") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> E(-10.0, 60.0), lg(-6.0, 1.0);
  for (int k = 0; k < 3000; ++k) {
    const HalfPlanePoint z{E(gen), std::pow(10.0, lg(gen))};
    const int K = 1 + k % 4;
    const FixedPoint fp = fixed_point_R(z, K, 1.0);
    CHECK(fp.phi.imag() > 0.0);
    CHECK(fp.abs_m < 1.0);
  }
}

TEST_CASE("boundary values are periodic under sqrt(E) L -> sqrt(E) L + pi") {
  const int K = 2;
  const double L = 1.0;
  const BandList bl = ac_bands(K, L, 2);
  const double theta = bl.theta;
  // Gap 0 is sqrt(E) in (pi - theta, pi + theta); band 0 is (theta, pi - theta).
  // The gap center sqrt(E) L = pi is a pole of Phi and is not sampled.
  for (int k = 0; k < 20; ++k) {
    for (bool in_gap : {true, false}) {
      const double x = in_gap ? kPi - theta + 2 * theta * (k + 0.25) / 20.0
                              : theta + (kPi - 2 * theta) * (k + 0.25) / 20.0;
      const double E0 = x * x, E1 = (x + kPi) * (x + kPi);
      const FixedPoint f0 = fixed_point_R({E0, 0.0}, K, L);
      const FixedPoint f1 = fixed_point_R({E1, 0.0}, K, L);
      CHECK(std::abs(f0.phi / std::sqrt(E0) - f1.phi / std::sqrt(E1)) < 1e-8);
      const double g0 = gamma_clean({E0, 0.0}, K, L), g1 = gamma_clean({E1, 0.0}, K, L);
      CHECK(std::abs(g0 - g1) < 1e-8);
      if (in_gap) CHECK(g0 > 0.0);
      if (!in_gap) CHECK(std::abs(g0) < 1e-10);
    }
  }
}

TEST_CASE("symmetric-condition fixed point matches a deep regular tree") {
  for (auto bc : {VertexBc::kirchhoff(), VertexBc::symmetric(1.0, 0.0),
                  VertexBc::symmetric(kPi / 2, kPi / 4), VertexBc::symmetric(1.2, 0.7)}) {
    for (double E : {0.7, 2.0, 5.0}) {
      TreeSpec spec;
      spec.depth = 2000;
      spec.vertex_bc = bc;
      const HalfPlanePoint z{E, 0.05};
      const cplx deep = solve_root_R(spec, DisorderModel{}, z).R;
      const FixedPoint fp = fixed_point_R(z, 2, 1.0, bc);
      CHECK(fp.phi.imag() > 0.0);
      CHECK(fp.multiplier < 1.0);
      CHECK(std::abs(fp.phi - deep) < 1e-10 * std::max(1.0, std::abs(deep)));
    }
  }
}

TEST_CASE("plain and rotated Lyapunov pipelines agree") {
  for (auto bc : {VertexBc::symmetric(kPi / 2, kPi / 4), VertexBc::symmetric(1.2, 0.7),
                  VertexBc::symmetric(2.0, 2.2)}) {
    for (double eta : {1e-1, 1e-2}) {
      for (double E : {1.0, 2.0, 4.0}) {
        const HalfPlanePoint z{E, eta};
        const double a = gamma_clean(z, 2, 1.0, bc);
        const double b = gamma_clean_tilde(z, 2, 1.0, bc);
        CHECK(std::abs(a - b) < 1e-10);
        CHECK(a > 0.0);
      }
    }
  }
  // Kirchhoff through the general entry points.
  const HalfPlanePoint z{2.0, 0.01};
  CHECK(gamma_clean(z, 2, 1.0, VertexBc::symmetric(kPi / 2, 0.0)) == gamma_clean(z, 2, 1.0));
}

TEST_CASE("boundary points next to a band edge are shifted and flagged") {
  const Band b0 = ac_bands(2, 1.0, 0).intervals[0];
  for (double E : {b0.a, b0.b}) {
    const FixedPoint fp = fixed_point_R({E, 0.0}, 2, 1.0);
    CHECK(fp.near_band_edge);
    CHECK(std::abs(fp.E_used - E) == doctest::Approx(1e-9).epsilon(1e-3));
  }
  CHECK_FALSE(fixed_point_R({2.0, 0.0}, 2, 1.0).near_band_edge);
  CHECK_FALSE(fixed_point_R({b0.a, 1e-3}, 2, 1.0).near_band_edge);
  CHECK(distance_to_band_edge(b0.b, 2, 1.0) < 1e-12);
}

TEST_CASE("multiplier is the derivative of one generation") {
  for (double E : {0.5, 2.0, 6.0, 9.0}) {
    for (double eta : {0.05, 0.5}) {
      const cplx z{E, eta};
      const FixedPoint fp = fixed_point_R({E, eta}, 2, 1.0);
      const double h = 1e-6;
      const cplx d = (one_generation(fp.phi + h, z, 2, 1.0) - one_generation(fp.phi - h, z, 2, 1.0)) /
                     (2.0 * h);
      CHECK(std::abs(std::abs(d) - fp.multiplier) < 1e-6 * fp.multiplier);
    }
  }
}

TEST_CASE("line (K = 1) fixed point is the outgoing wave") {
  const HalfPlanePoint z{3.0, 0.2};
  CHECK(std::abs(fixed_point_R(z, 1, 1.0).phi - I * sqrt_upper(z).w) < 1e-14);
}
