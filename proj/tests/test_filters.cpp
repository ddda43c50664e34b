#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "mvpmcmc/error.hpp"
#include "mvpmcmc/filters.hpp"
#include "mvpmcmc/models.hpp"

using namespace mvpmcmc;
using fixtures::normal_logpdf;
using fixtures::ToyDynamics;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

std::shared_ptr<ToyDynamics> constant_drift(double c) {
  auto d = std::make_shared<ToyDynamics>();
  d->a = [c](std::span<const double>, double, std::span<double> out) { out[0] = c; };
  d->b = [](std::span<const double>, double, std::span<double> out) { out[0] = 0.0; };
  return d;
}

Dataset series(std::initializer_list<double> ys) {
  Dataset d;
  for (double y : ys) d.observations.push_back({y});
  return d;
}

}  // namespace

TEST_CASE("normalize_log_weights") {
  const std::vector<double> a{0, 0, 0, 0};
  const auto wa = normalize_log_weights(a);
  for (double v : wa.normalized) CHECK(v == 0.25);
  CHECK(wa.log_mean == 0.0);
  const std::vector<double> b{std::log(1.0), std::log(3.0)};
  const auto wb = normalize_log_weights(b);
  CHECK(wb.normalized[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(wb.normalized[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(wb.log_mean == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const std::vector<double> c{-1000, -1000};
  const auto wc = normalize_log_weights(c);
  CHECK(wc.normalized[0] == 0.5);
  CHECK(wc.log_mean == -1000.0);
  const std::vector<double> d{NAN, 0.0};
  CHECK(normalize_log_weights(d).normalized[1] == 1.0);
  const std::vector<double> e{-INFINITY, -INFINITY};
  CHECK_THROWS_WITH_AS(normalize_log_weights(e), doctest::Contains("total weight collapse"), Error);
  const std::vector<double> f{INFINITY, 0.0};
  CHECK_THROWS_AS(normalize_log_weights(f), Error);

  RandStream s{StreamKey(1)};
  std::vector<double> r(1000);
  for (double& v : r) v = 50 * s.normal();
  const auto wr = normalize_log_weights(r);
  double sum = 0.0;
  for (double v : wr.normalized) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("multinomial resampling frequencies") {
  RandStream s{StreamKey(2)};
  const std::vector<double> point{0.0, -INFINITY, -INFINITY};
  for (auto a : multinomial_resample(normalize_log_weights(point), 3, s)) CHECK(a == 0);

  const std::vector<double> uni(4, 0.0);
  const auto wu = normalize_log_weights(uni);
  std::vector<double> counts(4, 0.0);
  const int reps = 25000;
  for (int r = 0; r < reps; ++r) {
    for (auto a : multinomial_resample(wu, 4, s)) counts[a] += 1;
  }
  const double n = 4.0 * reps;
  for (double c : counts) CHECK(std::abs(c / n - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));

  const std::vector<double> two{std::log(0.25), std::log(0.75)};
  const auto wt = normalize_log_weights(two);
  const auto draws = multinomial_resample(wt, 100000, s);
  double ones = 0;
  for (auto a : draws) {
    CHECK(a < 2);
    ones += static_cast<double>(a);
  }
  CHECK(std::abs(ones / 1e5 - 0.75) < 3 * std::sqrt(0.25 * 0.75 / 1e5));
}

TEST_CASE("systematic resampling keeps counts within one of M w") {
  RandStream s{StreamKey(3)};
  std::vector<double> lw(7);
  for (double& v : lw) v = s.normal();
  const auto w = normalize_log_weights(lw);
  for (int r = 0; r < 50; ++r) {
    const auto a = systematic_resample(w, 20, s);
    std::vector<double> c(7, 0);
    for (auto i : a) c[i] += 1;
    for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(c[i] - 20 * w.normalized[i]) < 1.0 + 1e-9);
  }
}

TEST_CASE("coupled weights H and Hcheck") {
  ToyDynamics g;  // standard normal observation density
  const std::vector<double> x0{0.0}, x2{2.0}, y{0.0};
  CHECK(coupled_weight_H(g, x0, x0, y) == g.log_obs(x0, y));
  CHECK(coupled_weight_H(g, x0, x2, y) == coupled_weight_H(g, x2, x0, y));
  CHECK(coupled_weight_H(g, x0, x2, y) == doctest::Approx(std::log(0.5 * (phi(0) + phi(2)))).epsilon(1e-14));
  CHECK(correction_weight_Hcheck(g, x2, x2, y) == 0.0);
  const double h1 = std::exp(correction_weight_Hcheck(g, x0, x2, y));
  const double h2 = std::exp(correction_weight_Hcheck(g, x2, x0, y));
  CHECK(h1 == doctest::Approx(2 * phi(0) / (phi(0) + phi(2))).epsilon(1e-14));
  CHECK(std::abs(h1 + h2 - 2.0) < 1e-12);
  // Far in the tails the identity still holds in log space.
  const std::vector<double> far{40.0};
  CHECK(std::abs(std::exp(correction_weight_Hcheck(g, x0, far, y)) + std::exp(correction_weight_Hcheck(g, far, x0, y)) - 2.0) < 1e-12);
  CHECK(log_hcheck(-INFINITY, -INFINITY) == 0.0);
}

TEST_CASE("bootstrap filter degenerate cases") {
  auto dyn = std::make_shared<ToyDynamics>();
  dyn->g = [](std::span<const double>, std::span<const double>) { return std::log(0.3); };
  const RandStream s{StreamKey(4)};
  const auto laws = propagate_laws(*dyn, 10, 1, Level{2}, s.child("laws", 0));
  for (std::size_t M : {1u, 7u, 100u}) {
    CHECK(bootstrap_pf(*dyn, laws, series({0.5}), M, s).log_likelihood == doctest::Approx(std::log(0.3)).epsilon(1e-15));
  }

  ToyDynamics gauss;
  const auto data = series({0.3, -0.2, 1.1, 0.4});
  const auto laws4 = propagate_laws(gauss, 10, 4, Level{3}, s.child("laws", 1));
  const auto one = bootstrap_pf(gauss, laws4, data, 1, s.child("pf", 0));
  double sum = 0.0;
  for (std::size_t t = 0; t < 4; ++t) sum += gauss.log_obs(one.trajectory[t], data.observations[t]);
  CHECK(one.log_likelihood == doctest::Approx(sum).epsilon(1e-14));

  CHECK_THROWS_AS(bootstrap_pf(gauss, laws4, series({1.0}), 5, s), Error);
  CHECK_THROWS_AS(bootstrap_pf(gauss, laws4, data, 0, s), Error);
}

TEST_CASE("filter collapse is reported with its time step") {
  auto dyn = std::make_shared<ToyDynamics>();
  dyn->g = [](std::span<const double>, std::span<const double> y) { return y[0] > 5 ? -INFINITY : 0.0; };
  const RandStream s{StreamKey(5)};
  const auto data = series({0.0, 0.0, 9.0});
  const auto laws = propagate_laws(*dyn, 5, 3, Level{1}, s);
  try {
    bootstrap_pf(*dyn, laws, data, 10, s);
    FAIL("expected collapse");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degeneracy);
    CHECK(e.code() == "total weight collapse");
    CHECK(e.index() == 3);
  }
}

TEST_CASE("bootstrap filter is close to the Kalman likelihood") {
  LinearGaussianParams p{0.7, 0.5, 0.8, 0.2, 0.4};
  const auto dyn = make_linear_gaussian_dynamics(p);
  const Dataset data = series({0.1, 0.6, 0.2, 0.9, 0.4});
  const int level = 4;
  const double exact = kalman_loglik(p, data, level);
  const RandStream s{StreamKey(6)};
  const auto laws = propagate_laws(*dyn, 4, 5, Level{level}, s.child("laws", 0));
  double mean = 0.0;
  for (std::uint64_t k = 0; k < 3; ++k) mean += bootstrap_pf(*dyn, laws, data, 2000, s.child("pf", k)).log_likelihood / 3;
  CHECK(std::abs(mean - exact) / std::abs(exact) < 0.02);
}

TEST_CASE("filter outputs: traced trajectory and serial agreement") {
  const auto dyn = make_neuron_dynamics({});
  const RandStream s{StreamKey(7)};
  const Dataset data{{{0.1, 0.5, 0.3}, {0.3, 0.6, 0.35}, {0.0, 0.55, 0.3}}};
  const auto laws = propagate_laws(*dyn, 30, 3, Level{3}, s.child("laws", 0));
  FilterOptions so;
  so.serial = true;
  so.keep_paths = true;
  FilterOptions oo = so;
  oo.serial = false;
  const auto a = bootstrap_pf(*dyn, laws, data, 40, s.child("pf", 0), so);
  const auto b = bootstrap_pf(*dyn, laws, data, 40, s.child("pf", 0), oo);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK(a.trajectory == b.trajectory);
  REQUIRE(a.paths.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(a.paths[t].size() == 8);
    CHECK(a.paths[t].back() == a.trajectory[t]);
  }
  CHECK(std::isfinite(a.log_likelihood));

  const auto claws = propagate_coupled_laws(*dyn, 30, 3, Level{3}, s.child("claws", 0));
  const auto ca = delta_pf(*dyn, claws, data, 40, s.child("dpf", 0), so);
  const auto cb = delta_pf(*dyn, claws, data, 40, s.child("dpf", 0), oo);
  CHECK(ca.log_likelihood == cb.log_likelihood);
  CHECK(ca.fine_trajectory == cb.fine_trajectory);
  CHECK(ca.coarse_trajectory == cb.coarse_trajectory);
  REQUIRE(ca.coarse_paths.size() == 3);
  CHECK(ca.coarse_paths[0].size() == 4);
  CHECK(ca.fine_paths[2].back() == ca.fine_trajectory[2]);
}

TEST_CASE("delta filter with degenerate coupling equals the bootstrap filter") {
  const auto dyn = constant_drift(0.75);
  const RandStream s{StreamKey(8)};
  const auto data = series({0.5, 1.2, 2.9});
  const auto claws = propagate_coupled_laws(*dyn, 8, 3, Level{3}, s.child("c", 0));
  const auto laws = propagate_laws(*dyn, 8, 3, Level{3}, s.child("l", 0));
  const auto d = delta_pf(*dyn, claws, data, 16, s.child("f", 0));
  const auto b = bootstrap_pf(*dyn, laws, data, 16, s.child("f", 1));
  CHECK(d.fine_trajectory == d.coarse_trajectory);
  CHECK(d.log_likelihood == doctest::Approx(b.log_likelihood).epsilon(1e-14));
  double direct = 0.0;
  for (int t = 1; t <= 3; ++t) direct += normal_logpdf(data.observations[static_cast<std::size_t>(t - 1)][0], 0.75 * t, 1.0);
  CHECK(b.log_likelihood == doctest::Approx(direct).epsilon(1e-14));

  auto c = std::make_shared<ToyDynamics>();
  c->g = [](std::span<const double>, std::span<const double>) { return std::log(0.2); };
  const auto cl = propagate_coupled_laws(*c, 5, 1, Level{2}, s);
  CHECK(delta_pf(*c, cl, series({0.0}), 9, s).log_likelihood == doctest::Approx(std::log(0.2)).epsilon(1e-15));
}

TEST_CASE("delta filter in fine-only mode is unbiased for the level likelihood") {
  OUMeanFieldParams p;
  p.sigma_obs = 0.5;
  const auto dyn = make_ou_dynamics(p);
  const auto data = series({0.2, -0.4, 0.1, 0.6, 0.3});
  const std::size_t N = 40, M = 40;
  const int seeds = 50;
  FilterOptions fo;
  fo.weighting = CoupledWeighting::FineOnly;
  std::vector<double> zb, zd;
  for (int k = 0; k < seeds; ++k) {
    const RandStream s{StreamKey(100 + static_cast<std::uint64_t>(k))};
    const auto laws = propagate_laws(*dyn, N, 5, Level{4}, s.child("laws", 0));
    zb.push_back(std::exp(bootstrap_pf(*dyn, laws, data, M, s.child("pf", 0)).log_likelihood));
    const auto claws = propagate_coupled_laws(*dyn, N, 5, Level{4}, s.child("claws", 0));
    zd.push_back(std::exp(delta_pf(*dyn, claws, data, M, s.child("dpf", 0), fo).log_likelihood));
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0, q = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) q += (x - m) * (x - m);
    return std::pair{m, q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())};
  };
  const auto [mb, vb] = moments(zb);
  const auto [md, vd] = moments(zd);
  CHECK(std::abs(mb - md) < 3 * std::sqrt(vb + vd));
}
