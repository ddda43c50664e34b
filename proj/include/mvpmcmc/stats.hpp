#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvpmcmc {

double mean(std::span<const double> x);
/// Unbiased sample variance (n - 1 denominator); 0 for fewer than two values.
double variance(std::span<const double> x);

/// out[k] = mean(series[0..k]).
std::vector<double> running_mean(std::span<const double> series);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of log(y) on log(x). Throws when fewer than two
/// distinct abscissae are given or any value is not positive.
LogLogFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Integrated autocorrelation time via Geyer's initial positive sequence.
double integrated_autocorr_time(std::span<const double> x);
/// n / IACT.
double effective_sample_size(std::span<const double> x);
/// Monte Carlo standard error of the mean using non-overlapping batch means
/// (batch count ~ sqrt(n)).
double batch_means_stderr(std::span<const double> x);

}  // namespace mvpmcmc
