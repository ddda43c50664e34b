#include "mvpmcmc/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

double mean(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorKind::Domain, "domain", "mean of an empty series");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

std::vector<double> running_mean(std::span<const double> series) {
  if (series.empty()) throw Error(ErrorKind::Domain, "domain", "running mean of an empty series");
  std::vector<double> out(series.size());
  double s = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    s += series[k];
    out[k] = s / static_cast<double>(k + 1);
  }
  return out;
}

LogLogFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Domain, "domain", "cost and mse lists differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::Domain, "domain", "log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  if (lx.size() < 2 || std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
    throw Error(ErrorKind::Domain, "insufficient points", "need at least two distinct costs");
  }
  const double mx = mean(lx), my = mean(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

double integrated_autocorr_time(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double m = mean(x);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 1.0;
  // Geyer: sum pairs Gamma_k = rho_{2k} + rho_{2k+1} while positive.
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::max(tau, 1.0);
}

double effective_sample_size(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return static_cast<double>(x.size()) / integrated_autocorr_time(x);
}

double batch_means_stderr(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return std::sqrt(variance(x) / static_cast<double>(std::max<std::size_t>(n, 1)));
  const auto b = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t len = n / b;
  std::vector<double> means;
  for (std::size_t i = 0; i < b; ++i) means.push_back(mean(x.subspan(i * len, len)));
  return std::sqrt(variance(means) / static_cast<double>(b));
}

}  // namespace mvpmcmc
