#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "alfven/diagnostics.hpp"
#include "alfven/errors.hpp"
#include "helpers.hpp"

using namespace alfven;
using namespace testing;
using std::numbers::pi;

namespace {

StepperConfig to(double t_end, double dt) {
  StepperConfig c;
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

// Weighted energy on a grid refined 4x along x3, with the weight evaluated
// directly from its definition.
double oversampled_energy(const ElsasserState& s, Species sp) {
  const GridPtr& g = s.grid();
  const DomainSpec& d = g->domain();
  const GridPtr fine = box(d.n[0], d.n[1], 4 * d.n[2], d.L[0], d.L[1], d.L[2]);
  const SpectralVectorField& f = s.z(sp);
  SpectralVectorField padded(fine);
  for (int i = 0; i < d.n[0]; ++i)
    for (int j = 0; j < d.n[1]; ++j)
      for (int m = 0; m < d.n[2] / 2; ++m)
        for (int a = 0; a < 3; ++a) padded.c[a][fine->spectral_index(i, j, m)] = f.c[a][g->spectral_index(i, j, m)];
  const RealVectorField r = inverse(padded);
  const DomainSpec& fd = fine->domain();
  const double c = s.guard.window_center(sp, s.t);
  double total = 0.0;
  for (int k = 0; k < fd.n[2]; ++k) {
    double x3 = fd.coord(2, k);
    while (x3 < c - 0.5 * d.L[2]) x3 += d.L[2];
    while (x3 >= c + 0.5 * d.L[2]) x3 -= d.L[2];
    const double u = sp == Species::plus ? x3 + s.t + s.weights.a : x3 - s.t - s.weights.a;
    const double w = std::pow(1.0 + u * u, s.weights.omega);
    for (int i = 0; i < fd.n[0]; ++i)
      for (int j = 0; j < fd.n[1]; ++j) {
        const std::size_t idx = fd.index(i, j, k);
        total += w * (r.c[0][idx] * r.c[0][idx] + r.c[1][idx] * r.c[1][idx] + r.c[2][idx] * r.c[2][idx]);
      }
  }
  return total * fd.cell_volume();
}

struct FluxHistory : Observer {
  FluxAccumulator* flux;
  std::vector<std::vector<double>> values;
  explicit FluxHistory(FluxAccumulator* f) : flux(f) {}
  void observe(const RecordPoint& r) override {
    flux->add_sample(r.state);
    values.push_back(flux->values());
  }
};

} // namespace

TEST_CASE("multi-indices") {
  CHECK(multi_indices(0).size() == 1);
  CHECK(multi_indices(1).size() == 3);
  CHECK(multi_indices(2).size() == 6);
  CHECK(multi_indices(3).size() == 10);
  CHECK(multi_indices(2).front() == std::array<int, 3>{2, 0, 0});
  CHECK(multinomial({2, 0, 0}) == 1.0);
  CHECK(multinomial({1, 1, 0}) == 2.0);
  CHECK(multinomial({1, 1, 1}) == 6.0);
  CHECK(multinomial({2, 1, 0}) == 3.0);
  double sum = 0.0;
  for (const auto& a : multi_indices(4)) sum += multinomial(a);
  CHECK(sum == 81.0);
  CHECK_THROWS_AS(multi_indices(-1), RangeError);
}

TEST_CASE("weighted energy") {
  ElsasserState s = small_collision(0.1, 0.07);
  SUBCASE("agrees with a refined quadrature") {
    for (Species sp : {Species::plus, Species::minus}) {
      const double e = energy_norm(s, sp);
      CHECK(e == doctest::Approx(oversampled_energy(s, sp)).epsilon(1e-10));
    }
    s.weights = WeightParams(1.5, 0.3);
    CHECK(energy_norm(s, Species::plus) == doctest::Approx(oversampled_energy(s, Species::plus)).epsilon(1e-10));
  }
  SUBCASE("unit weight away from the weight centre is not unit") {
    // The z+ packet sits at x3 = 8, where <u-> is about 8.
    CHECK(energy_norm(s, Species::plus) > 50.0 * parseval_norm_squared(s.z_plus));
  }
  SUBCASE("moving the packet is the same as moving the weight centre") {
    ElsasserState a(s.grid()), b(s.grid(), WeightParams(2.0, 0.1));
    PacketSpec p;
    p.widths = {2.5, 2.5, 1.6};
    p.center = {0.0, 0.0, 3.0};
    add_packet(a, p);
    p.center = {0.0, 0.0, 1.0};
    add_packet(b, p);
    CHECK(energy_norm(a, Species::plus) == doctest::Approx(energy_norm(b, Species::plus)).epsilon(1e-12));
  }
  SUBCASE("constant along free transport") {
    ElsasserState one = small_collision(0.1, 0.0);
    const double e0 = energy_norm(one, Species::plus);
    CHECK(energy_norm(propagate_linear(one, 5.0), Species::plus) == doctest::Approx(e0).epsilon(1e-12));
    ElsasserState other = small_collision(0.0, 0.1);
    const double m0 = energy_norm(other, Species::minus);
    CHECK(energy_norm(propagate_linear(other, 5.0), Species::minus) == doctest::Approx(m0).epsilon(1e-12));
  }
  SUBCASE("data norm") {
    CHECK(data_norm(s, Species::plus, 0) == doctest::Approx(energy_norm(s, Species::plus)).epsilon(1e-14));
    const DivCurlParts dc = divcurl_check(s.z_plus, x3_weights(s, Species::plus, 2.0 * s.weights.omega));
    CHECK(data_norm(s, Species::plus, 1) - data_norm(s, Species::plus, 0) ==
          doctest::Approx(dc.gradient).epsilon(1e-12));
    CHECK(higher_energy_norm(s, Species::plus, 0) == doctest::Approx(dc.curl).epsilon(1e-14));
  }
}

TEST_CASE("flux") {
  SUBCASE("a single packet crossing the surfaces") {
    ElsasserState s = small_collision(0.1, 0.0);
    FluxAccumulator plus = FluxAccumulator::covering(s, Species::plus, 8.0, 0.0);
    FluxAccumulator minus = FluxAccumulator::covering(s, Species::minus, 8.0, 0.0);
    FluxHistory hist(&plus);
    std::vector<Observer*> obs{&hist, &minus};
    advance(s, to(8.0, 0.2), obs);
    for (std::size_t n = 1; n < hist.values.size(); ++n)
      for (std::size_t j = 0; j < plus.values().size(); ++j) REQUIRE(hist.values[n][j] >= hist.values[n - 1][j]);
    CHECK(plus.sup() == doctest::Approx(energy_norm(s, Species::plus) / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(minus.sup() == 0.0);
    CHECK(plus.last_time() == doctest::Approx(8.0));
  }
  SUBCASE("zero state") {
    ElsasserState s(box(16, 16, 32, 4.0, 4.0, 8.0));
    FluxAccumulator f = FluxAccumulator::covering(s, Species::plus, 1.0, 0.5);
    std::vector<Observer*> obs{&f};
    advance(s, to(1.0, 0.1), obs);
    CHECK(f.sup() == 0.0);
    CHECK(f.u().front() <= -0.5 * 8.0 - 0.5);
  }
  SUBCASE("lattice spacing must match the grid") {
    ElsasserState s = small_collision(0.1, 0.0);
    FluxAccumulator f(Species::plus, -10.0, 0.3, 40);
    CHECK_THROWS_AS(f.add_sample(s), ShapeMismatch);
    CHECK_THROWS_AS(FluxAccumulator(Species::plus, 0.0, 0.5, 0), RangeError);
  }
}

TEST_CASE("separation and pressure ratios") {
  const GridPtr g = box(16, 16, 8, 2.0 * pi, 2.0 * pi, 2.0 * pi);
  ElsasserState s(g);
  s.z_plus = transform(sample(g, [](double x1, double, double) { return Vec3(0.0, 0.0, 0.5 * std::sin(x1)); }));
  CHECK(separation_ratio(s) == 0.0);
  CHECK(pressure_decay_ratio(s).l1 == 0.0);
  s.z_minus = transform(sample(g, [](double x1, double, double) { return Vec3(0.0, 0.0, 0.3 * std::cos(x1)); }));
  CHECK(separation_ratio(s) == doctest::Approx(0.075).epsilon(1e-14));
  s.t = 2.0;
  CHECK(separation_ratio(s) == doctest::Approx(0.075 * std::pow(3.0, 1.1)).epsilon(1e-14));

  ElsasserState q(g);
  q.z_plus = transform(sample(g, [](double x1, double x2, double) { return Vec3(std::sin(x2), std::sin(x1), 0.0); }));
  q.z_minus = q.z_plus;
  const PressureRatios r = pressure_decay_ratio(q);
  CHECK(r.max_grad == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.max_hessian == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
  CHECK(r.l1 == r.max_grad);
  q.t = -1.0;
  q.weights = WeightParams(3.0, 0.1);
  CHECK(pressure_decay_ratio(q).l2 == doctest::Approx(std::sqrt(2.0) * std::pow(3.0, 1.1)).epsilon(1e-13));

  // Packets far apart: no overlap, no pressure.
  const ElsasserState apart = small_collision();
  CHECK(separation_ratio(apart) < 1e-10);
  CHECK(pressure_decay_ratio(apart).max_grad < 1e-10);
}

TEST_CASE("conserved quantities") {
  const GridPtr g = box(16, 8, 8, 2.0 * pi, 3.0, 5.0);
  ElsasserState s(g);
  const double A = 0.4;
  s.z_plus = transform(sample(g, [A](double x1, double, double) { return Vec3(0.0, 0.0, A * std::sin(x1)); }));
  const double V = g->domain().volume();
  Conserved c = conserved_quantities(s);
  CHECK(c.energy == doctest::Approx(A * A * V / 2.0).epsilon(1e-14));
  CHECK(c.cross_helicity == doctest::Approx(A * A * V / 2.0).epsilon(1e-14));
  std::swap(s.z_plus, s.z_minus);
  c = conserved_quantities(s);
  CHECK(c.energy == doctest::Approx(A * A * V / 2.0).epsilon(1e-14));
  CHECK(c.cross_helicity == doctest::Approx(-A * A * V / 2.0).epsilon(1e-14));
}

TEST_CASE("div-curl") {
  const GridPtr g = box(16, 16, 16, 2.0 * pi, 2.0 * pi, 2.0 * pi);
  const RealArray one = RealArray::Ones(16);
  const DivCurlParts k = divcurl_check(transform(sample(g, [](double, double, double) { return Vec3(1.0, 2.0, 2.0); })), one);
  CHECK(k.gradient == 0.0);
  CHECK(k.curl == 0.0);
  CHECK(k.mass == doctest::Approx(9.0 * std::pow(2.0 * pi, 3)).epsilon(1e-14));

  const DivCurlParts m =
      divcurl_check(transform(sample(g, [](double x1, double, double) { return Vec3(0.0, 0.0, std::sin(x1)); })), one);
  CHECK(m.gradient == doctest::Approx(m.curl).epsilon(1e-14));
  CHECK(m.gradient == doctest::Approx(0.5 * std::pow(2.0 * pi, 3)).epsilon(1e-14));

  // With the packet weights the gradient stays controlled by curl plus mass.
  ElsasserState s(box(16, 16, 64, 16.0, 16.0, 32.0));
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    s.z_plus = make_random_solenoidal(s.grid(), -2.0, seed, Species::plus);
    const DivCurlParts p = divcurl_check(s.z_plus, x3_weights(s, Species::plus, 2.0 * s.weights.omega));
    worst = std::max(worst, p.lhs() / p.rhs());
  }
  CHECK(worst > 0.0);
  CHECK(worst <= 2.0);
}

TEST_CASE("weighted Sobolev ratio") {
  ElsasserState s = small_collision(0.1, 0.1);
  CHECK(sobolev_check(ElsasserState(s.grid()), Species::plus) == 0.0);
  const double r = sobolev_check(s, Species::plus);
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
  s.z_plus *= 7.0;
  CHECK(sobolev_check(s, Species::plus) == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("norm observer") {
  const ElsasserState s = small_collision(0.05, 0.05, 4.0);
  NormObserver obs(s, 1.0, 2, 3);
  std::vector<Observer*> list{&obs};
  advance(s, to(1.0, 0.1), list);
  const NormSeries& n = obs.series();
  CHECK(n.samples.size() == 5);  // record points 0, 3, 6, 9 and the final one
  CHECK(n.samples.back().t == doctest::Approx(1.0));
  CHECK(n.samples.front().Ek.size() == 3);
  CHECK(n.samples.front().F[0] == 0.0);
  CHECK(n.samples.back().F[0] > 0.0);
  CHECK(obs.max_divergence() <= 1e-12);
  CHECK(main_estimate_constant(n, Species::plus) >= 1.0);

  const NormSample snap = snapshot_norms(s, 1);
  CHECK(std::isnan(snap.F[0]));
  CHECK(snap.E[0] == doctest::Approx(n.samples.front().E[0]).epsilon(1e-14));
  CHECK(snap.Ek.size() == 2);
  CHECK_THROWS_AS(NormObserver(s, 1.0, -1), RangeError);
}

TEST_CASE("main estimate constant") {
  NormSeries n;
  n.k_max = 0;
  NormSample a;
  a.E = {1.0, 2.0};
  a.F = {0.0, 0.0};
  a.Ek = {{1.0, 2.0}};
  NormSample b = a;
  b.E = {1.5, 2.0};
  b.F = {0.5, 0.0};
  n.samples = {a, b, a};
  CHECK(main_estimate_constant(n, Species::plus) == 1.5);
  CHECK(main_estimate_constant(n, Species::minus) == 1.0);
  CHECK(main_estimate_constant(NormSeries{}, Species::plus) == 0.0);
}
