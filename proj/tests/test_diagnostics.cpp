#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "phasekit/diagnostics.hpp"
#include "phasekit/forward.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace phasekit;

TEST_CASE("recovery_error_E basic identities") {
  auto gen = oracles::rng(5);
  Signal z = Signal::from1d(oracles::random_complex(9, gen));
  CHECK(recovery_error_E(z, z) == 0.0);
  CHECK(recovery_error_E(Signal::zeros(z.shape()), z) == doctest::Approx(1.0));
  CHECK_THROWS_AS(recovery_error_E(z, Signal::zeros(z.shape())), std::invalid_argument);
}

TEST_CASE("recovery_error_E single-sample perturbation") {
  RVector base = RVector::Ones(10);
  Signal z = Signal::from1d_real(base);
  RVector bumped = base;
  const double delta = 0.37;
  bumped(4) += delta;
  double got = recovery_error_E(Signal::from1d_real(bumped), z);
  CHECK(got == doctest::Approx(delta / 10.0).epsilon(1e-12));
}

TEST_CASE("r_factor identities and scale fitting") {
  auto gen = oracles::rng(7);
  RVector mag = oracles::random_real(32, gen).cwiseAbs();
  auto [r0, z0] = r_factor(mag, mag);
  CHECK(r0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z0 == doctest::Approx(1.0));

  auto [r1, z1] = r_factor(mag, RVector(2.0 * mag));
  CHECK(r1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z1 == doctest::Approx(0.5));

  CHECK_THROWS_AS(r_factor(RVector::Zero(4), mag.head(4)), std::invalid_argument);
}

TEST_CASE("r_factor beats coarse grid scales and is scale-equivariant") {
  auto gen = oracles::rng(90);
  for (int t = 0; t < 10; ++t) {
    RVector me = oracles::random_real(64, gen).cwiseAbs();
    RVector re = oracles::random_real(64, gen).cwiseAbs();
    auto [rf, zeta] = r_factor(me, re);
    for (double z : {0.5, 1.0, 2.0}) {
      double num = 0.0;
      for (Index k = 0; k < 64; ++k) num += std::abs(me(k) - z * re(k));
      CHECK(rf <= num / me.sum() + 1e-12);
    }
    const double c = 3.7;
    auto [rf2, zeta2] = r_factor(me, RVector(c * re));
    CHECK(rf2 == doctest::Approx(rf).epsilon(1e-9));
    CHECK(zeta2 == doctest::Approx(zeta / c).epsilon(1e-9));
  }
}

TEST_CASE("prtf: identical copies give unity on the measured support") {
  auto gen = oracles::rng(12);
  Signal x = Signal::from1d(oracles::random_complex(8, gen));
  Shape grid = Shape::of1d(15);
  Signal spec = oversampled_dft(x, grid);
  CVector mags(15);
  for (Index k = 0; k < 15; ++k) mags(k) = Complex(std::abs(spec[k]), 0.0);
  Signal measured(grid, mags);
  RVector p = prtf({x, x, x}, measured);
  for (Index k = 0; k < 15; ++k) {
    if (std::abs(spec[k]) > 0) CHECK(p(k) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p(k) <= 1.0 + 1e-9);
  }
}

TEST_CASE("prtf: negated copy cancels exactly") {
  auto gen = oracles::rng(13);
  Signal x = Signal::from1d(oracles::random_complex(8, gen));
  Signal neg = Signal::from1d(CVector(-x.flat()));
  Shape grid = Shape::of1d(15);
  Signal spec = oversampled_dft(x, grid);
  CVector mags(15);
  for (Index k = 0; k < 15; ++k) mags(k) = Complex(std::abs(spec[k]), 0.0);
  RVector p = prtf({x, neg}, Signal(grid, mags));
  CHECK(p.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("iid random phases shrink the ensemble-average magnitude like 1/sqrt(count)") {
  auto gen = oracles::rng(1000);
  const Index m = 31;
  RVector mags = oracles::random_real(m, gen).cwiseAbs().array() + 0.5;
  const int count = 1000;
  std::uniform_real_distribution<double> uni(0.0, 2 * 3.14159265358979);
  CVector mean = CVector::Zero(m);
  for (int i = 0; i < count; ++i)
    for (Index k = 0; k < m; ++k) mean(k) += std::polar(mags(k), uni(gen)) / double(count);
  RVector ratios(m);
  for (Index k = 0; k < m; ++k) ratios(k) = std::abs(mean(k)) / mags(k);
  std::sort(ratios.data(), ratios.data() + m);
  double median = ratios(m / 2);
  CHECK(median < 0.1);  // ~0.03 expected at 1000 members
  CHECK(median > 0.001);
}

TEST_CASE("prtf refuses unrelated ensembles and tiny ensembles") {
  auto gen = oracles::rng(14);
  Signal a = Signal::from1d(oracles::random_complex(8, gen));
  Signal b = Signal::from1d(oracles::random_complex(8, gen));
  Shape grid = Shape::of1d(15);
  Signal spec = oversampled_dft(a, grid);
  CVector mags(15);
  for (Index k = 0; k < 15; ++k) mags(k) = Complex(std::abs(spec[k]), 0.0);
  Signal measured(grid, mags);
  CHECK_THROWS_AS(prtf({a}, measured), std::invalid_argument);
  CHECK_THROWS_AS(prtf({a, b}, measured), std::invalid_argument);
}

TEST_CASE("coherence: identity and duplicate columns") {
  CHECK(coherence_mu(RMatrix(RMatrix::Identity(6, 6))) == 0.0);
  RMatrix dup(4, 3);
  dup.setRandom();
  dup.col(2) = dup.col(0);
  CHECK(coherence_mu(dup) == doctest::Approx(1.0));
  RMatrix zero = RMatrix::Zero(3, 2);
  CHECK_THROWS_AS(coherence_mu(zero), std::invalid_argument);
}

TEST_CASE("coherence matches the exhaustive pairwise oracle") {
  auto gen = oracles::rng(2025);
  for (int t = 0; t < 20; ++t) {
    RMatrix a(16, 32);
    for (Index r = 0; r < 16; ++r) a.row(r) = oracles::random_real(32, gen).transpose();
    double mu = coherence_mu(a);
    long double best = 0.0L;
    for (Index i = 0; i < 32; ++i)
      for (Index j = i + 1; j < 32; ++j) {
        long double dot = 0, ni = 0, nj = 0;
        for (Index r = 0; r < 16; ++r) {
          dot += static_cast<long double>(a(r, i)) * a(r, j);
          ni += static_cast<long double>(a(r, i)) * a(r, i);
          nj += static_cast<long double>(a(r, j)) * a(r, j);
        }
        best = std::max(best, fabsl(dot) / sqrtl(ni * nj));
      }
    CHECK(mu == doctest::Approx(static_cast<double>(best)).epsilon(1e-12));
  }
}

TEST_CASE("rip_delta: orthonormal columns and duplicates") {
  CHECK(rip_delta(RMatrix(RMatrix::Identity(8, 8)), 3) == doctest::Approx(0.0).epsilon(1e-12));
  RMatrix dup(6, 4);
  dup.setRandom();
  dup.col(3) = 2.0 * dup.col(1);  // same direction after normalization
  CHECK(rip_delta(dup, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rip_delta k=2 equals the closed-form pairwise value") {
  auto gen = oracles::rng(33);
  for (int t = 0; t < 20; ++t) {
    RMatrix a(8, 16);
    for (Index r = 0; r < 8; ++r) a.row(r) = oracles::random_real(16, gen).transpose();
    a /= std::sqrt(8.0);
    RMatrix unit = a;
    for (Index j = 0; j < 16; ++j) unit.col(j).normalize();
    double expect = 0.0;
    for (Index i = 0; i < 16; ++i)
      for (Index j = i + 1; j < 16; ++j)
        expect = std::max(expect, std::abs(unit.col(i).dot(unit.col(j))));
    CHECK(rip_delta(a, 2) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("rip_delta is monotone in k") {
  auto gen = oracles::rng(71);
  RMatrix a(10, 12);
  for (Index r = 0; r < 10; ++r) a.row(r) = oracles::random_real(12, gen).transpose();
  double d2 = rip_delta(a, 2), d3 = rip_delta(a, 3), d4 = rip_delta(a, 4);
  CHECK(d2 <= d3 + 1e-12);
  CHECK(d3 <= d4 + 1e-12);
}

TEST_CASE("rip_delta enforces the combinatorial guard") {
  RMatrix a = RMatrix::Random(8, 40);
  CHECK_THROWS_AS(rip_delta(a, 13), std::invalid_argument);
}

TEST_CASE("complement property: known positive and negative cases") {
  // full-spark 2N-1 family: any N of the vectors span
  RMatrix good(3, 2);
  good << 1, 0, 0, 1, 1, 1;
  CHECK(complement_property_check(good).holds);

  // repeated basis vector breaks full spark: S = {e2} leaves {e1, e1}
  RMatrix repeated(3, 2);
  repeated << 1, 0, 0, 1, 1, 0;
  ComplementCheck rep = complement_property_check(repeated);
  CHECK(!rep.holds);

  RMatrix bad(3, 2);
  bad << 1, 1, 1, 1, 1, 1;
  ComplementCheck res = complement_property_check(bad);
  CHECK(!res.holds);
  CHECK(!res.witness.empty());

  // M = 2N-2 always fails: a balanced split leaves both sides short
  auto gen = oracles::rng(3);
  for (int t = 0; t < 10; ++t) {
    const Index n = 4;
    RMatrix v(2 * n - 2, n);
    for (Index r = 0; r < v.rows(); ++r) v.row(r) = oracles::random_real(n, gen).transpose();
    CHECK(!complement_property_check(v).holds);
  }
}

TEST_CASE("complement witness is genuine") {
  auto gen = oracles::rng(44);
  RMatrix v(6, 5);
  for (Index r = 0; r < 6; ++r) v.row(r) = oracles::random_real(5, gen).transpose();
  ComplementCheck res = complement_property_check(v);
  REQUIRE(!res.holds);  // 6 < 2*5-1 vectors can never satisfy it
  std::set<Index> inSet(res.witness.begin(), res.witness.end());
  RMatrix s(static_cast<Index>(res.witness.size()), 5), sc(6 - static_cast<Index>(res.witness.size()), 5);
  Index a = 0, b = 0;
  for (Index r = 0; r < 6; ++r) {
    if (inSet.count(r))
      s.row(a++) = v.row(r);
    else
      sc.row(b++) = v.row(r);
  }
  CHECK(Eigen::ColPivHouseholderQR<RMatrix>(s).rank() < 5);
  CHECK(Eigen::ColPivHouseholderQR<RMatrix>(sc).rank() < 5);
}

TEST_CASE("collision-free: spec fixtures") {
  RVector a = RVector::Zero(8);
  a(0) = 1;
  a(1) = -2;
  a(3) = 3;
  CHECK(collision_free_check(Signal::from1d_real(a)).collisionFree);

  RVector b = RVector::Zero(8);
  b(0) = 1;
  b(1) = 1;
  b(2) = 2;
  b(3) = -1;
  CollisionCheck res = collision_free_check(Signal::from1d_real(b));
  CHECK(!res.collisionFree);
  auto [i, j, k, l] = res.witness;
  CHECK(i - j == k - l);
  CHECK((i != k || j != l));

  RVector single = RVector::Zero(5);
  single(2) = 4;
  CHECK(collision_free_check(Signal::from1d_real(single)).collisionFree);
}

TEST_CASE("collision-free matches a difference-multiset oracle") {
  auto gen = oracles::rng(555);
  std::uniform_int_distribution<Index> kd(1, 5);
  for (int t = 0; t < 30; ++t) {
    const Index n = 24;
    RVector x = RVector::Zero(n);
    Index k = kd(gen);
    std::set<Index> locs;
    std::uniform_int_distribution<Index> pos(0, n - 1);
    while (static_cast<Index>(locs.size()) < k) locs.insert(pos(gen));
    for (Index p : locs) x(p) = 1.0;
    bool impl = collision_free_check(Signal::from1d_real(x)).collisionFree;
    std::vector<Index> ls(locs.begin(), locs.end());
    std::vector<Index> diffs;
    for (size_t p = 0; p < ls.size(); ++p)
      for (size_t q = 0; q < ls.size(); ++q)
        if (p != q && ls[p] > ls[q]) diffs.push_back(ls[p] - ls[q]);
    std::sort(diffs.begin(), diffs.end());
    bool oracle = std::adjacent_find(diffs.begin(), diffs.end()) == diffs.end();
    CHECK(impl == oracle);
  }
}

TEST_CASE("u/v fixture: identical autocorrelation yet not trivially equivalent") {
  Signal u = counterexample_u();
  Signal v = counterexample_v();
  CVector gu = autocorrelation(u), gv = autocorrelation(v);
  CHECK((gu - gv).cwiseAbs().maxCoeff() <= 1e-12);
  Signal su = oversampled_dft(u, 9), sv = oversampled_dft(v, 9);
  for (Index k = 0; k < 9; ++k)
    CHECK(std::abs(su[k]) == doctest::Approx(std::abs(sv[k])).epsilon(1e-10));
  CHECK(align_to_reference(u, v).residual > 0.1);
}

TEST_CASE("metric report serializes as a flat JSON object") {
  MetricReport r;
  r.E = 0.25;
  r.R_F = 0.0625;
  r.zeta = 1.5;
  r.alignedResidual = 1e-6;
  std::string s = r.to_json();
  CHECK(s.find("\"E\": 0.25") != std::string::npos);
  CHECK(s.find("\"zeta\": 1.5") != std::string::npos);
  CHECK(s.front() == '{');
  CHECK(s.back() == '}');
}
