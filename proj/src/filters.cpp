#include "mvpmcmc/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvpmcmc/error.hpp"

namespace mvpmcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t categorical(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cdf[i] = (acc += w[i]);
  return cdf;
}

void check_filter_args(std::size_t horizon, const Dataset& data, std::size_t M, std::size_t obs_dim) {
  if (M == 0) throw Error(ErrorKind::Domain, "domain", "filter needs M >= 1");
  data.validate(obs_dim);
  if (horizon != data.horizon()) {
    throw Error(ErrorKind::Domain, "domain",
                "have " + std::to_string(horizon) + " law intervals for " + std::to_string(data.horizon()) +
                    " observations");
  }
}

WeightVector normalize_at(std::span<const double> log_w, std::size_t s) {
  try {
    return normalize_log_weights(log_w);
  } catch (const Error& e) {
    throw Error(e.kind(), e.code(), "all filter weights vanished at time step " + std::to_string(s),
                static_cast<long>(s));
  }
}

EmpiricalMeasure start_cloud(const Dynamics& dyn, std::size_t M, const RandStream& stream) {
  EmpiricalMeasure x0(M, dyn.dim());
  for (std::size_t m = 0; m < M; ++m) {
    RandStream s = stream.child("particle", m);
    dyn.initial_state(s, x0.particle(m));
  }
  return x0;
}

EmpiricalMeasure gather(const EmpiricalMeasure& from, const std::vector<std::size_t>& idx) {
  EmpiricalMeasure out(idx.size(), from.dim());
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const auto src = from.particle(idx[m]);
    std::copy(src.begin(), src.end(), out.particle(m).begin());
  }
  return out;
}

// Ancestral trace: b_T drawn from the final weights, b_s = A_s[b_{s+1}].
std::vector<std::size_t> trace_indices(const std::vector<std::vector<std::size_t>>& ancestors, std::size_t last) {
  const std::size_t T = ancestors.size();
  std::vector<std::size_t> b(T);
  b[T - 1] = last;
  for (std::size_t s = T - 1; s-- > 0;) b[s] = ancestors[s][b[s + 1]];
  return b;
}

StateVec to_state(std::span<const double> x) { return {x.begin(), x.end()}; }

}  // namespace

WeightVector normalize_log_weights(std::span<const double> log_w) {
  if (log_w.empty()) throw Error(ErrorKind::Degeneracy, "total weight collapse", "no weights");
  WeightVector w;
  w.log_weights.assign(log_w.begin(), log_w.end());
  double mx = kNegInf;
  for (double& v : w.log_weights) {
    if (std::isnan(v)) v = kNegInf;
    mx = std::max(mx, v);
  }
  if (mx == kNegInf) throw Error(ErrorKind::Degeneracy, "total weight collapse", "every weight is zero");
  if (std::isinf(mx)) throw Error(ErrorKind::Numeric, "numeric overflow", "infinite log weight");
  w.normalized.resize(log_w.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) sum += (w.normalized[i] = std::exp(w.log_weights[i] - mx));
  for (double& v : w.normalized) v /= sum;
  w.log_mean = mx + std::log(sum / static_cast<double>(log_w.size()));
  return w;
}

std::vector<std::size_t> multinomial_resample(const WeightVector& w, std::size_t M, RandStream& stream) {
  const auto cdf = cumulative(w.normalized);
  std::vector<std::size_t> a(M);
  for (auto& v : a) v = categorical(cdf, stream.uniform());
  return a;
}

std::vector<std::size_t> systematic_resample(const WeightVector& w, std::size_t M, RandStream& stream) {
  const auto cdf = cumulative(w.normalized);
  const double total = cdf.back();
  const double u0 = stream.uniform();
  std::vector<std::size_t> a(M);
  std::size_t j = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const double u = (static_cast<double>(m) + u0) / static_cast<double>(M) * total;
    while (j + 1 < cdf.size() && cdf[j] <= u) ++j;
    a[m] = j;
  }
  return a;
}

std::vector<std::size_t> resample(Resampling scheme, const WeightVector& w, std::size_t M, RandStream& stream) {
  return scheme == Resampling::Systematic ? systematic_resample(w, M, stream) : multinomial_resample(w, M, stream);
}

std::size_t sample_index(const WeightVector& w, RandStream& stream) {
  return categorical(cumulative(w.normalized), stream.uniform());
}

double log_average_pair(double a, double b) {
  const double mx = std::max(a, b);
  if (mx == kNegInf) return kNegInf;
  return mx + std::log(0.5 * (std::exp(a - mx) + std::exp(b - mx)));
}

// g1 / H = 2 / (1 + g2/g1), written through d = log g2 - log g1 so that swapping
// the arguments negates d exactly and the two corrections sum to 2 to rounding.
double log_hcheck(double log_g_first, double log_g_second) {
  if (log_g_first == kNegInf) return log_g_second == kNegInf ? 0.0 : kNegInf;  // 0/0 counts as equal arguments
  const double d = log_g_second - log_g_first;
  if (d > 0) return std::numbers::ln2 - d - std::log1p(std::exp(-d));
  return std::numbers::ln2 - std::log1p(std::exp(d));
}

double coupled_weight_H(const Dynamics& dyn, std::span<const double> x_fine, std::span<const double> x_coarse,
                        std::span<const double> y) {
  return log_average_pair(dyn.log_obs(x_fine, y), dyn.log_obs(x_coarse, y));
}

double correction_weight_Hcheck(const Dynamics& dyn, std::span<const double> x_first,
                                std::span<const double> x_second, std::span<const double> y) {
  return log_hcheck(dyn.log_obs(x_first, y), dyn.log_obs(x_second, y));
}

FilterOutput bootstrap_pf(const Dynamics& dyn, const std::vector<LawPath>& laws, const Dataset& data, std::size_t M,
                          const RandStream& stream, const FilterOptions& opts) {
  check_filter_args(laws.size(), data, M, dyn.obs_dim());
  const std::size_t T = data.horizon();
  const auto batch = opts.serial ? &kernels::serial::transition_batch : &kernels::omp::transition_batch;

  std::vector<EmpiricalMeasure> states(T);
  std::vector<std::vector<std::size_t>> ancestors(T);
  std::vector<std::vector<TransitionSample>> moves(opts.keep_paths ? T : 0);
  std::vector<double> log_w(M);
  FilterOutput out;

  EmpiricalMeasure cur = start_cloud(dyn, M, stream.child("x0", 0));
  WeightVector w;
  for (std::size_t s = 1; s <= T; ++s) {
    auto moved = batch(dyn, cur, laws[s - 1], stream.child("move", s), opts.keep_paths);
    EmpiricalMeasure xs(M, dyn.dim());
    for (std::size_t m = 0; m < M; ++m) std::copy(moved[m].end.begin(), moved[m].end.end(), xs.particle(m).begin());
    if (opts.keep_paths) moves[s - 1] = std::move(moved);

    const auto& y = data.observations[s - 1];
    for (std::size_t m = 0; m < M; ++m) log_w[m] = dyn.log_obs(xs.particle(m), y);
    w = normalize_at(log_w, s);
    out.log_likelihood += w.log_mean;

    RandStream rs = stream.child("resample", s);
    ancestors[s - 1] = resample(opts.resampling, w, M, rs);
    if (s < T) cur = gather(xs, ancestors[s - 1]);
    states[s - 1] = std::move(xs);
  }

  RandStream pick = stream.child("select", 0);
  const auto b = trace_indices(ancestors, sample_index(w, pick));
  out.trajectory.reserve(T);
  for (std::size_t s = 0; s < T; ++s) out.trajectory.push_back(to_state(states[s].particle(b[s])));
  if (opts.keep_paths) {
    for (std::size_t s = 0; s < T; ++s) out.paths.push_back(moves[s][b[s]].path);
  }
  return out;
}

CoupledFilterOutput delta_pf(const Dynamics& dyn, const std::vector<CoupledLawPath>& laws, const Dataset& data,
                             std::size_t M, const RandStream& stream, const FilterOptions& opts) {
  check_filter_args(laws.size(), data, M, dyn.obs_dim());
  const std::size_t T = data.horizon();
  const auto batch =
      opts.serial ? &kernels::serial::coupled_transition_batch : &kernels::omp::coupled_transition_batch;

  std::vector<EmpiricalMeasure> fine_states(T), coarse_states(T);
  std::vector<std::vector<std::size_t>> ancestors(T);
  std::vector<std::vector<CoupledTransitionSample>> moves(opts.keep_paths ? T : 0);
  std::vector<double> log_w(M);
  CoupledFilterOutput out;

  EmpiricalMeasure fine = start_cloud(dyn, M, stream.child("x0", 0));
  EmpiricalMeasure coarse = fine;
  WeightVector w;
  for (std::size_t s = 1; s <= T; ++s) {
    auto moved = batch(dyn, fine, coarse, laws[s - 1], stream.child("move", s), opts.keep_paths);
    EmpiricalMeasure xf(M, dyn.dim()), xc(M, dyn.dim());
    for (std::size_t m = 0; m < M; ++m) {
      std::copy(moved[m].fine.end.begin(), moved[m].fine.end.end(), xf.particle(m).begin());
      std::copy(moved[m].coarse.end.begin(), moved[m].coarse.end.end(), xc.particle(m).begin());
    }
    if (opts.keep_paths) moves[s - 1] = std::move(moved);

    const auto& y = data.observations[s - 1];
    for (std::size_t m = 0; m < M; ++m) {
      const double gf = dyn.log_obs(xf.particle(m), y);
      log_w[m] = opts.weighting == CoupledWeighting::FineOnly ? gf
                                                               : log_average_pair(gf, dyn.log_obs(xc.particle(m), y));
    }
    w = normalize_at(log_w, s);
    out.log_likelihood += w.log_mean;

    RandStream rs = stream.child("resample", s);
    ancestors[s - 1] = resample(opts.resampling, w, M, rs);
    if (s < T) {
      fine = gather(xf, ancestors[s - 1]);
      coarse = gather(xc, ancestors[s - 1]);
    }
    fine_states[s - 1] = std::move(xf);
    coarse_states[s - 1] = std::move(xc);
  }

  RandStream pick = stream.child("select", 0);
  const auto b = trace_indices(ancestors, sample_index(w, pick));
  for (std::size_t s = 0; s < T; ++s) {
    out.fine_trajectory.push_back(to_state(fine_states[s].particle(b[s])));
    out.coarse_trajectory.push_back(to_state(coarse_states[s].particle(b[s])));
  }
  if (opts.keep_paths) {
    for (std::size_t s = 0; s < T; ++s) {
      out.fine_paths.push_back(moves[s][b[s]].fine.path);
      out.coarse_paths.push_back(moves[s][b[s]].coarse.path);
    }
  }
  return out;
}

}  // namespace mvpmcmc
