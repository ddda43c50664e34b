#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mvpmcmc/error.hpp"
#include "mvpmcmc/law.hpp"
#include "mvpmcmc/models.hpp"

using namespace mvpmcmc;
using fixtures::ToyDynamics;

namespace {

std::shared_ptr<ToyDynamics> frozen() {
  auto d = std::make_shared<ToyDynamics>();
  d->b = [](std::span<const double>, double, std::span<double> out) { out[0] = 0.0; };
  return d;
}

}  // namespace

TEST_CASE("euler_step examples") {
  ToyDynamics pure;  // a = 0, b = I
  const auto x = EmpiricalMeasure::from_states({{1.0}, {-2.0}});
  const std::vector<double> dw{0.3, -0.1};
  const auto y = euler_step(pure, x, x, 0.25, dw);
  CHECK(y.particle(0)[0] == 1.0 + 0.3);
  CHECK(y.particle(1)[0] == -2.0 - 0.1);

  auto c = frozen();
  c->a = [](std::span<const double>, double, std::span<double> out) { out[0] = 2.0; };
  const std::vector<double> zero{0.0, 0.0};
  const auto z = euler_step(*c, x, x, 0.25, zero);
  CHECK(z.particle(0)[0] == 1.5);
  CHECK(z.particle(1)[0] == -1.5);

  // a(x, zeta) = -zeta with zeta(x, z) = x - z, self-driven two-atom cloud.
  auto two = frozen();
  two->zeta = [](Interaction, std::span<const double> xx, std::span<const double> zz) { return xx[0] - zz[0]; };
  two->a = [](std::span<const double>, double zeta, std::span<double> out) { out[0] = -zeta; };
  const auto p = EmpiricalMeasure::from_states({{0.0}, {2.0}});
  const auto q = euler_step(*two, p, p, 0.5, zero);
  CHECK(q.particle(0)[0] == 0.5);
  CHECK(q.particle(1)[0] == 1.5);
}

TEST_CASE("euler_step reports blow-up with the particle index") {
  auto c = frozen();
  c->a = [](std::span<const double> x, double, std::span<double> out) { out[0] = x[0] > 5 ? 1e14 : 0.0; };
  const auto x = EmpiricalMeasure::from_states({{0.0}, {1.0}, {6.0}, {7.0}});
  const std::vector<double> zero(4, 0.0);
  try {
    euler_step(*c, x, x, 1.0, zero);
    FAIL("expected a blow-up");
  } catch (const Error& e) {
    CHECK(e.code() == "numeric blow-up");
    CHECK(e.kind() == ErrorKind::Numeric);
    CHECK(e.index() == 2);
  }
  try {
    kernels::serial::euler_step(*c, x, x, 1.0, zero);
    FAIL("expected a blow-up");
  } catch (const Error& e) {
    CHECK(e.index() == 2);
  }
  c->a = [](std::span<const double>, double, std::span<double> out) { out[0] = NAN; };
  CHECK_THROWS_WITH_AS(euler_step(*c, x, x, 1.0, zero), doctest::Contains("numeric blow-up"), Error);
}

TEST_CASE("propagate_law_block basics") {
  ToyDynamics pure;
  const RandStream s{StreamKey(4)};
  const auto init = EmpiricalMeasure::from_states({{0.0}, {1.0}, {2.0}});
  const auto l0 = propagate_law_block(pure, init, Level{0}, s);
  CHECK(l0.measures.size() == 1);
  CHECK(l0.measures[0] == init);
  const auto l3 = propagate_law_block(pure, init, Level{3}, s);
  CHECK(l3.measures.size() == 8);
  CHECK(l3.measures[0] == init);

  auto still = frozen();
  CHECK(propagate_law_block(*still, init, Level{4}, s).end == init);
  CHECK_THROWS_AS(propagate_law_block(pure, EmpiricalMeasure(0, 1), Level{1}, s), Error);
}

TEST_CASE("mean-field OU cloud keeps its mean") {
  // The cloud mean moves only by sigma times the averaged Brownian motion.
  OUMeanFieldParams p;
  p.m0 = 0.7;
  p.sigma = 1.0;
  const auto dyn = make_ou_dynamics(p);
  const std::size_t N = 2000;
  const RandStream s{StreamKey(5)};
  const auto init = initial_cloud(*dyn, N, s.child("init", 0));
  const auto path = propagate_law_block(*dyn, init, Level{6}, s.child("block", 1));
  CHECK(std::abs(path.end.mean()[0] - p.m0) < 3 * p.sigma / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("coupled law block: increment identity and degenerate coupling") {
  const auto dyn = make_ou_dynamics({});
  const RandStream s{StreamKey(6)};
  const auto init = initial_cloud(*dyn, 16, s);
  const auto c = propagate_coupled_law_block(*dyn, init, init, Level{4}, s, true);
  REQUIRE(c.fine_noise);
  REQUIRE(c.coarse_noise);
  CHECK(c.fine.measures.size() == 16);
  CHECK(c.coarse.measures.size() == 8);
  bool exact = true;
  for (std::size_t j = 0; j < 8; ++j) {
    for (std::size_t i = 0; i < 16; ++i) {
      exact = exact && c.coarse_noise->at(j, i)[0] == c.fine_noise->at(2 * j, i)[0] + c.fine_noise->at(2 * j + 1, i)[0];
    }
  }
  CHECK(exact);

  auto still = frozen();
  const auto d = propagate_coupled_law_block(*still, init, init, Level{3}, s);
  CHECK(d.fine.end == d.coarse.end);
  CHECK_THROWS_WITH_AS(propagate_coupled_law_block(*dyn, init, init, Level{0}, s), doctest::Contains("no coarser level"), Error);

  // Without recording, the clouds are the same as with it.
  const auto c2 = propagate_coupled_law_block(*dyn, init, init, Level{4}, s);
  CHECK(c2.fine.end == c.fine.end);
  CHECK(c2.coarse.end == c.coarse.end);
  CHECK_FALSE(c2.fine_noise);
}

TEST_CASE("sample_transition_path") {
  ToyDynamics pure;
  const auto init = EmpiricalMeasure::from_states({{0.0}});
  const RandStream s{StreamKey(7)};
  const auto law0 = propagate_law_block(pure, init, Level{0}, s);
  RandStream a = s.child("p", 0), b = s.child("p", 0);
  const std::vector<double> start{1.25};
  const auto out = sample_transition_path(pure, start, law0, a);
  std::vector<double> dw(1);
  b.fill_gaussian(dw, 1.0);
  CHECK(out.end[0] == 1.25 + dw[0]);

  // Deterministic Euler polygon through frozen laws.
  auto lin = frozen();
  lin->a = [](std::span<const double> x, double, std::span<double> o) { o[0] = 1.0 - x[0]; };
  const auto law3 = propagate_law_block(*lin, init, Level{3}, s);
  RandStream c = s.child("q", 0);
  const auto poly = sample_transition_path(*lin, start, law3, c, true);
  REQUIRE(poly.path.size() == 8);
  double x = 1.25;
  for (int j = 0; j < 8; ++j) {
    x = x + (1.0 - x) * 0.125;
    CHECK(poly.path[static_cast<std::size_t>(j)][0] == x);
  }
  CHECK(poly.end[0] == x);
}

TEST_CASE("linear-Gaussian transition moments match the discrete system") {
  LinearGaussianParams p{0.8, 1.5, 0.6, 0.0, 0.5};
  const auto dyn = make_linear_gaussian_dynamics(p);
  const Level lv{4};
  const RandStream s{StreamKey(8)};
  const auto laws = propagate_law_block(*dyn, initial_cloud(*dyn, 4, s), lv, s.child("b", 0));
  const std::vector<double> start{-0.5};
  const int n = 100000;
  double m = 0.0, q = 0.0;
  std::vector<double> ends(n);
  for (int i = 0; i < n; ++i) {
    RandStream r = s.child("rep", static_cast<std::uint64_t>(i));
    ends[static_cast<std::size_t>(i)] = sample_transition_path(*dyn, start, laws, r).end[0];
    m += ends[static_cast<std::size_t>(i)];
  }
  m /= n;
  for (double e : ends) q += (e - m) * (e - m);
  q /= n - 1;
  const auto tr = linear_transition(p.kappa, p.sigma, lv.l);
  const double mean = tr.A * start[0] + (1 - tr.A) * p.mu;
  CHECK(std::abs(m - mean) < 3 * std::sqrt(tr.Q / n));
  // Sample variance: sd approx Q sqrt(2/(n-1)).
  CHECK(std::abs(q - tr.Q) < 3 * tr.Q * std::sqrt(2.0 / (n - 1)));
}

TEST_CASE("coupled transition paths") {
  auto still = frozen();
  const auto init = EmpiricalMeasure::from_states({{0.0}, {1.0}});
  const RandStream s{StreamKey(9)};
  const auto laws = propagate_coupled_law_block(*still, init, init, Level{3}, s);
  RandStream r = s.child("t", 0);
  const std::vector<double> x0{0.4};
  const auto out = sample_coupled_transition_path(*still, x0, x0, laws, r, true);
  CHECK(out.fine.end == out.coarse.end);
  CHECK(out.fine.path.size() == 8);
  CHECK(out.coarse.path.size() == 4);

  // With pure noise the coarse endpoint is the fine endpoint (same Brownian path).
  ToyDynamics pure;
  const auto plaws = propagate_coupled_law_block(pure, init, init, Level{5}, s);
  RandStream r2 = s.child("t", 1);
  const auto pn = sample_coupled_transition_path(pure, x0, x0, plaws, r2, true);
  CHECK(pn.fine.end[0] == doctest::Approx(pn.coarse.end[0]).epsilon(1e-13));
  for (std::size_t j = 0; j < 16; ++j) {
    CHECK(pn.coarse.path[j][0] == doctest::Approx(pn.fine.path[2 * j + 1][0]).epsilon(1e-13));
  }
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  for (bool neuron : {false, true}) {
    const auto dyn = neuron ? make_neuron_dynamics({}) : make_ou_dynamics({});
    const RandStream s{StreamKey(10)};
    const auto cloud = initial_cloud(*dyn, 97, s.child("init", 0));
    RandStream ns = s.child("n", 0);
    const auto noise = gaussian_vector(ns, 97 * dyn->dim(), 0.01);
    CHECK(kernels::serial::euler_step(*dyn, cloud, cloud, 0.1, noise) ==
          kernels::omp::euler_step(*dyn, cloud, cloud, 0.1, noise));
    const auto bs = kernels::serial::draw_brownian_block(s, Level{3}, 97, dyn->dim());
    const auto bo = kernels::omp::draw_brownian_block(s, Level{3}, 97, dyn->dim());
    CHECK(bs.increments == bo.increments);

    const auto laws = propagate_law_block(*dyn, cloud, Level{3}, s.child("b", 0));
    const auto ts = kernels::serial::transition_batch(*dyn, cloud, laws, s.child("m", 0), true);
    const auto to = kernels::omp::transition_batch(*dyn, cloud, laws, s.child("m", 0), true);
    bool same = ts.size() == to.size();
    for (std::size_t i = 0; same && i < ts.size(); ++i) same = ts[i].end == to[i].end && ts[i].path == to[i].path;
    CHECK(same);

    const auto claws = propagate_coupled_law_block(*dyn, cloud, cloud, Level{3}, s.child("c", 0));
    const auto cs = kernels::serial::coupled_transition_batch(*dyn, cloud, cloud, claws, s.child("m", 1), false);
    const auto co = kernels::omp::coupled_transition_batch(*dyn, cloud, cloud, claws, s.child("m", 1), false);
    same = cs.size() == co.size();
    for (std::size_t i = 0; same && i < cs.size(); ++i) {
      same = cs[i].fine.end == co[i].fine.end && cs[i].coarse.end == co[i].coarse.end;
    }
    CHECK(same);
  }
}

TEST_CASE("law propagation is deterministic under a fixed key") {
  const auto dyn = make_neuron_dynamics({});
  const RandStream s{StreamKey(12)};
  const auto a = propagate_laws(*dyn, 20, 3, Level{2}, s);
  const auto b = propagate_laws(*dyn, 20, 3, Level{2}, s);
  REQUIRE(a.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(a[t].end == b[t].end);
  CHECK(a[1].measures[0] == a[0].end);
  const auto c = propagate_coupled_laws(*dyn, 20, 3, Level{2}, s);
  CHECK(c[0].fine.measures[0] == c[0].coarse.measures[0]);
  CHECK(c[2].fine.measures[0] == c[1].fine.end);
  CHECK(c[2].coarse.measures[0] == c[1].coarse.end);
}
