#include "spheremetrics/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

namespace spheremetrics {

namespace {

constexpr double kPi = 3.14159265358979323846;

double pos_pow(double x, int alpha) {
  if (x <= 0.0) return 0.0;
  return alpha == 0 ? 1.0 : ipow(x, alpha);
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// fn(i) for i in [0, n); any worker count gives identical results because
// outputs are written per index and reduced by the caller in index order.
template <class Fn>
void parallel_indices(Eigen::Index n, int workers, Fn&& fn) {
  const int nw = static_cast<int>(std::min<Eigen::Index>(
      resolve_workers(workers), std::max<Eigen::Index>(n, 1)));
  if (nw <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const Eigen::Index i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void check_pair(const SampleSet& mu, const SampleSet& nu) {
  if (mu.domain != nu.domain)
    throw std::invalid_argument("sample sets live on different domains");
  if (mu.point_dim() != nu.point_dim())
    throw std::invalid_argument("sample sets have different dimensions");
  if (mu.n() == 0 || nu.n() == 0)
    throw std::invalid_argument("empty sample set");
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

MeanVar mean_var(const double* vals, Eigen::Index n) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += vals[i];
  MeanVar mv;
  mv.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = vals[i] - mv.mean;
      sq += c * c;
    }
    mv.var = sq / static_cast<double>(n - 1);
  }
  return mv;
}

// Projections <x_l, theta> in the feature view (trailing lift coordinate
// becomes an additive bias).
Eigen::VectorXd project(const SampleSet& set, const Eigen::VectorXd& theta) {
  const int d = set.point_dim();
  Eigen::VectorXd z = set.points * theta.head(d);
  if (set.feature_dim() == d + 1) z.array() += theta[d];
  return z;
}

MeanVar activated_stats(const SampleSet& set, const ActivationSpec& act,
                        const Eigen::VectorXd& theta) {
  Eigen::VectorXd z = project(set, theta);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = act(z[i]);
  return mean_var(z.data(), z.size());
}

// Squared-moment statistics over features: value = sqrt(mean_j v_j^2) with a
// delta-method standard error for the square-rooted value.
IpmEstimate feature_moment_estimate(const SampleSet& mu, const SampleSet& nu,
                                    const ActivationSpec& act,
                                    const MatrixRM& features, IpmVariant variant,
                                    RngSeed seed) {
  Eigen::MatrixXd smu, snu;
  sigma_feature_sums(mu, features, act, nullptr, smu);
  sigma_feature_sums(nu, features, act, nullptr, snu);
  const double inv_n = 1.0 / static_cast<double>(mu.n());
  const double inv_m = 1.0 / static_cast<double>(nu.n());
  const Eigen::Index F = features.rows();
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index j = 0; j < F; ++j) {
    const double v = smu(0, j) * inv_n - snu(0, j) * inv_m;
    const double u = v * v;
    sum += u;
    sumsq += u * u;
  }
  const double fd = static_cast<double>(F);
  const double sq_mean = sum / fd;
  const double sq_var =
      F > 1 ? std::max(0.0, (sumsq - sum * sum / fd) / (fd - 1.0)) : 0.0;
  const double sq_se = std::sqrt(sq_var / fd);
  IpmEstimate est;
  est.value = std::sqrt(std::max(sq_mean, 0.0));
  est.se = est.value > 0.0 ? sq_se / (2.0 * est.value) : std::sqrt(sq_se);
  est.variant = variant;
  est.n_samples = mu.n();
  est.n_features = F;
  est.seed = seed;
  return est;
}

double arccos_kernel_core(double dot, double na, double nb, int alpha,
                          int ambient_dim) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot / (na * nb);
  c = std::min(1.0, std::max(-1.0, c));
  const double phi = std::acos(c);
  if (alpha == 0) return (kPi - phi) / (2.0 * kPi);
  const double j1 = std::sin(phi) + (kPi - phi) * c;
  return na * nb * j1 / (2.0 * kPi) / static_cast<double>(ambient_dim);
}

// Appends the lift column when needed so kernels see the feature view.
MatrixRM feature_view(const SampleSet& set) {
  if (set.domain == Domain::Sphere) return set.points;
  MatrixRM out(set.n(), set.point_dim() + 1);
  out.leftCols(set.point_dim()) = set.points;
  out.col(set.point_dim()).setOnes();
  return out;
}

// Maximizes f on [lo, hi] by golden-section (f unimodal near the optimum).
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-12) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

// Max of f over a uniform grid on [-1,1] (endpoints exact), refined by
// golden-section around the best cell.
double grid_max(const std::function<double(double)>& f, long long grid_size) {
  double best = -std::numeric_limits<double>::infinity();
  long long best_i = 0;
  const double step = 2.0 / static_cast<double>(grid_size - 1);
  for (long long i = 0; i < grid_size; ++i) {
    const double t = i == grid_size - 1 ? 1.0 : -1.0 + step * static_cast<double>(i);
    const double v = f(t);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const double lo = std::max(-1.0, -1.0 + step * static_cast<double>(best_i - 1));
  const double hi = std::min(1.0, -1.0 + step * static_cast<double>(best_i + 1));
  return std::max(best, golden_max(f, lo, hi));
}

struct SdClosedForm {
  double prefactor = 0.0;  // |a+(-1)^{k+1}b| |gamma| (k/(alpha+1)) |lambda|
  double coef_grad = 0.0;  // (d+alpha-2)(k+d-2)/(d-1)
  double coef_level = 0.0; // d+k-3
};

SdClosedForm sd_closed_form(const GibbsSpec& spec, const ActivationSpec& act) {
  if (spec.k < 1) throw std::invalid_argument("stein discrepancy requires k >= 1");
  if (spec.d < 2) throw std::invalid_argument("stein discrepancy requires d >= 2");
  const int k = spec.k, d = spec.d, alpha = act.alpha;
  const double cf = act.a + (k % 2 == 1 ? act.b : -act.b);
  const double lam = lambda_coefficient({k, d}, alpha + 1);
  SdClosedForm cfm;
  cfm.prefactor = std::abs(cf) * std::abs(spec.gamma) * k / (alpha + 1.0) *
                  std::abs(lam);
  cfm.coef_grad = (d + alpha - 2.0) * (k + d - 2.0) / (d - 1.0);
  cfm.coef_level = d + k - 3.0;
  return cfm;
}

}  // namespace

void sigma_feature_sums(const SampleSet& xs, const MatrixRM& features,
                        const ActivationSpec& act, const MatrixRM* row_weights,
                        Eigen::MatrixXd& out) {
  const Eigen::Index n = xs.n();
  const int d = xs.point_dim();
  const int fdim = xs.feature_dim();
  const bool lifted = fdim == d + 1;
  if (features.cols() != fdim)
    throw std::invalid_argument("feature dimension mismatch");
  if (row_weights && row_weights->rows() != n)
    throw std::invalid_argument("row weight count mismatch");
  const Eigen::Index F = features.rows();
  const Eigen::Index nw = row_weights ? row_weights->cols() : 1;
  out.setZero(nw, F);
  if (n == 0 || F == 0) return;

  constexpr Eigen::Index kFB = 64;   // feature block
  constexpr Eigen::Index kNB = 8192; // row block
  std::vector<double> acc(static_cast<std::size_t>(nw * F), 0.0);
  std::vector<double> tblock(static_cast<std::size_t>(kFB * fdim));
  double s[kFB];

  for (Eigen::Index r0 = 0; r0 < n; r0 += kNB) {
    const Eigen::Index rows = std::min(kNB, n - r0);
    for (Eigen::Index f0 = 0; f0 < F; f0 += kFB) {
      const Eigen::Index fb = std::min(kFB, F - f0);
      // Transposed feature block: contiguous runs per coordinate.
      for (int c = 0; c < fdim; ++c)
        for (Eigen::Index j = 0; j < fb; ++j)
          tblock[c * fb + j] = features(f0 + j, c);
      const double* bias = lifted ? &tblock[static_cast<std::size_t>(d) * fb] : nullptr;
      for (Eigen::Index l = r0; l < r0 + rows; ++l) {
        const double* x = xs.points.data() + l * d;
        if (bias) {
          for (Eigen::Index j = 0; j < fb; ++j) s[j] = bias[j];
        } else {
          for (Eigen::Index j = 0; j < fb; ++j) s[j] = 0.0;
        }
        for (int c = 0; c < d; ++c) {
          const double xc = x[c];
          const double* tc = &tblock[static_cast<std::size_t>(c) * fb];
          for (Eigen::Index j = 0; j < fb; ++j) s[j] += xc * tc[j];
        }
        if (act.alpha == 1) {
          for (Eigen::Index j = 0; j < fb; ++j) {
            const double v = s[j];
            s[j] = v > 0.0 ? act.a * v : -act.b * v;
          }
        } else if (act.alpha == 0) {
          for (Eigen::Index j = 0; j < fb; ++j) {
            const double v = s[j];
            s[j] = v > 0.0 ? act.a : (v < 0.0 ? act.b : 0.0);
          }
        } else {
          for (Eigen::Index j = 0; j < fb; ++j) {
            const double v = s[j];
            s[j] = act.a * pos_pow(v, act.alpha) + act.b * pos_pow(-v, act.alpha);
          }
        }
        for (Eigen::Index w = 0; w < nw; ++w) {
          double* aw = &acc[static_cast<std::size_t>(w * F + f0)];
          if (row_weights) {
            const double wl = (*row_weights)(l, w);
            for (Eigen::Index j = 0; j < fb; ++j) aw[j] += wl * s[j];
          } else {
            for (Eigen::Index j = 0; j < fb; ++j) aw[j] += s[j];
          }
        }
      }
    }
  }
  for (Eigen::Index w = 0; w < nw; ++w)
    for (Eigen::Index j = 0; j < F; ++j)
      out(w, j) = acc[static_cast<std::size_t>(w * F + j)];
}

IpmEstimate ipm_f1_known_direction(const SampleSet& mu, const SampleSet& nu,
                                   const ActivationSpec& act,
                                   const Eigen::VectorXd& theta) {
  check_pair(mu, nu);
  if (theta.size() != mu.feature_dim())
    throw std::invalid_argument("direction dimension mismatch");
  const MeanVar a = activated_stats(mu, act, theta);
  const MeanVar b = activated_stats(nu, act, theta);
  IpmEstimate est;
  est.value = std::abs(a.mean - b.mean);
  est.se = std::sqrt(a.var / static_cast<double>(mu.n()) +
                     b.var / static_cast<double>(nu.n()));
  est.variant = IpmVariant::F1KnownDirection;
  est.n_samples = mu.n();
  return est;
}

DirectionResult ipm_f1_optimize(const SampleSet& mu, const SampleSet& nu,
                                const ActivationSpec& act, int restarts,
                                int steps, RngSeed seed,
                                const std::vector<Eigen::VectorXd>& extra_candidates,
                                int workers) {
  check_pair(mu, nu);
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  const int dim = mu.feature_dim();

  auto signed_diff = [&](const Eigen::VectorXd& th, Eigen::VectorXd* grad) {
    double means[2];
    Eigen::VectorXd grads[2];
    const SampleSet* sets[2] = {&mu, &nu};
    for (int s = 0; s < 2; ++s) {
      const SampleSet& set = *sets[s];
      const Eigen::Index n = set.n();
      Eigen::VectorXd z = project(set, th);
      double sum = 0.0;
      if (grad) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          sum += act(z[i]);
          w[i] = act.right_derivative(z[i]);
        }
        Eigen::VectorXd g(dim);
        g.head(set.point_dim()) = set.points.transpose() * w / static_cast<double>(n);
        if (dim == set.point_dim() + 1)
          g[dim - 1] = w.sum() / static_cast<double>(n);
        grads[s] = std::move(g);
      } else {
        for (Eigen::Index i = 0; i < n; ++i) sum += act(z[i]);
      }
      means[s] = sum / static_cast<double>(n);
    }
    if (grad) *grad = grads[0] - grads[1];
    return means[0] - means[1];
  };

  auto objective = [&](const Eigen::VectorXd& th) {
    return std::abs(signed_diff(th, nullptr));
  };

  // Candidate directions (evaluated, not refined): canonical axes and extras.
  std::vector<Eigen::VectorXd> candidates;
  for (int i = 0; i < dim; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[i] = 1.0;
    candidates.push_back(e);
    candidates.push_back(-e);
  }
  for (const auto& extra : extra_candidates) {
    if (extra.size() != dim)
      throw std::invalid_argument("extra candidate dimension mismatch");
    const double norm = extra.norm();
    if (norm > 1e-12) candidates.push_back(extra / norm);
  }

  std::vector<double> cand_obj(candidates.size());
  parallel_indices(static_cast<Eigen::Index>(candidates.size()), workers,
                   [&](Eigen::Index i) { cand_obj[i] = objective(candidates[i]); });
  std::size_t best_cand = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (cand_obj[i] > cand_obj[best_cand]) best_cand = i;

  // Starts: random restarts plus the best candidate, each hill-climbed with
  // projected gradient ascent and an adaptive step.
  std::vector<Eigen::VectorXd> starts;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed.value, 1000 + static_cast<std::uint64_t>(r)));
    Eigen::VectorXd th(dim);
    fill_unit_vector(rng, th.data(), dim);
    starts.push_back(std::move(th));
  }
  starts.push_back(candidates[best_cand]);

  std::vector<DirectionResult> results(starts.size());
  parallel_indices(static_cast<Eigen::Index>(starts.size()), workers,
                   [&](Eigen::Index si) {
    Eigen::VectorXd th = starts[si];
    double cur = objective(th);
    double eta = 0.3;
    for (int it = 0; it < steps && eta > 1e-10; ++it) {
      Eigen::VectorXd grad(dim);
      const double m = signed_diff(th, &grad);
      if (m < 0.0) grad = -grad;
      Eigen::VectorXd tangent = grad - grad.dot(th) * th;
      const double tn = tangent.norm();
      if (tn < 1e-14) break;
      Eigen::VectorXd proposal = (th + (eta / tn) * tangent).normalized();
      const double val = objective(proposal);
      if (val > cur) {
        th = std::move(proposal);
        cur = val;
        eta *= 1.25;
      } else {
        eta *= 0.5;
      }
    }
    results[si] = DirectionResult{std::move(th), cur};
  });

  DirectionResult best = results[0];
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].objective > best.objective) best = results[i];
  if (cand_obj[best_cand] > best.objective)
    best = DirectionResult{candidates[best_cand], cand_obj[best_cand]};
  return best;
}

IpmEstimate ipm_f2_features(const SampleSet& mu, const SampleSet& nu,
                            const ActivationSpec& act, long long n_features,
                            RngSeed seed, int workers) {
  check_pair(mu, nu);
  if (n_features < 1) throw std::invalid_argument("n_features must be >= 1");
  const SampleSet th = sample_uniform_sphere(mu.feature_dim(), n_features,
                                             derive_seed(seed, 101), workers);
  return feature_moment_estimate(mu, nu, act, th.points, IpmVariant::F2Features,
                                 seed);
}

IpmEstimate ipm_f2_tilde(const SampleSet& mu, const SampleSet& nu,
                         const ActivationSpec& act, long long n_features,
                         RngSeed seed, TildeTMode mode, int workers) {
  check_pair(mu, nu);
  if (mu.domain != Domain::BallLift)
    throw std::invalid_argument("tilde F2 requires BallLift inputs");
  if (n_features < 1) throw std::invalid_argument("n_features must be >= 1");
  const int d = mu.point_dim();
  auto fill_arcsine = [d](Rng& rng, double* row) {
    fill_unit_vector(rng, row, d);
    const double g = rng.uniform(-kPi / 2.0, kPi / 2.0);
    const double c = std::cos(g);
    for (int j = 0; j < d; ++j) row[j] *= c;
    row[d] = std::sin(g);
  };
  auto fill_uniform = [d](Rng& rng, double* row) {
    fill_unit_vector(rng, row, d);
    const double t = rng.uniform(-1.0, 1.0);
    const double c = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int j = 0; j < d; ++j) row[j] *= c;
    row[d] = t;
  };
  const MatrixRM features = sample_chunked_rows(
      n_features, d + 1, derive_seed(seed, 101), workers,
      mode == TildeTMode::Arcsine
          ? std::function<void(Rng&, double*)>(fill_arcsine)
          : std::function<void(Rng&, double*)>(fill_uniform));
  return feature_moment_estimate(mu, nu, act, features, IpmVariant::F2Tilde,
                                 seed);
}

IpmEstimate ipm_f2_kernel(const SampleSet& mu, const SampleSet& nu, int alpha,
                          KernelEstimator estimator) {
  check_pair(mu, nu);
  if (alpha != 0 && alpha != 1)
    throw std::invalid_argument(
        "closed-form kernel covers alpha in {0,1}; use the feature estimator");
  const int ambient = mu.feature_dim();
  const MatrixRM xs = feature_view(mu);
  const MatrixRM ys = feature_view(nu);
  const Eigen::Index n = xs.rows(), m = ys.rows();
  const Eigen::VectorXd xn = xs.rowwise().norm();
  const Eigen::VectorXd yn = ys.rowwise().norm();

  double sxx = 0.0, dxx = 0.0, syy = 0.0, dyy = 0.0, sxy = 0.0;
  Eigen::VectorXd dots;
  for (Eigen::Index i = 0; i < n; ++i) {
    dots = xs * xs.row(i).transpose();
    for (Eigen::Index j = 0; j < n; ++j)
      sxx += arccos_kernel_core(dots[j], xn[i], xn[j], alpha, ambient);
    dxx += arccos_kernel_core(dots[i], xn[i], xn[i], alpha, ambient);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    dots = ys * ys.row(i).transpose();
    for (Eigen::Index j = 0; j < m; ++j)
      syy += arccos_kernel_core(dots[j], yn[i], yn[j], alpha, ambient);
    dyy += arccos_kernel_core(dots[i], yn[i], yn[i], alpha, ambient);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    dots = ys * xs.row(i).transpose();
    for (Eigen::Index j = 0; j < m; ++j)
      sxy += arccos_kernel_core(dots[j], xn[i], yn[j], alpha, ambient);
  }

  IpmEstimate est;
  est.n_samples = n;
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  if (estimator == KernelEstimator::Plugin) {
    const double mmd2 = sxx / (nd * nd) + syy / (md * md) - 2.0 * sxy / (nd * md);
    est.value = std::sqrt(std::max(0.0, mmd2));
    est.variant = IpmVariant::F2KernelPlugin;
  } else {
    if (n < 2 || m < 2)
      throw std::invalid_argument("U-statistic needs at least 2 points per set");
    est.value = (sxx - dxx) / (nd * (nd - 1.0)) + (syy - dyy) / (md * (md - 1.0)) -
                2.0 * sxy / (nd * md);
    est.variant = IpmVariant::F2KernelUStat;
  }
  return est;
}

double theoretical_f1_ipm(LegendreIndex idx, const ActivationSpec& act) {
  return theoretical_f1_ipm(idx, act, cached_weighted_rule(idx.d));
}

double theoretical_f1_ipm(LegendreIndex idx, const ActivationSpec& act,
                          const QuadratureRule& rule) {
  const double num = 2.0 * std::abs(weighted_integral(
                               [&](double t) {
                                 return legendre_eval(idx, t) * act(t);
                               },
                               idx.d, rule));
  const double den = legendre_abs_integral(idx);
  if (!(den > 1e-280))
    throw std::runtime_error("legendre pair is numerically degenerate");
  return num / den;
}

double theoretical_ratio(LegendreIndex idx) {
  return std::exp(0.5 * log_harmonic_dimension(idx));
}

SteinEstimate sd_f1_brute_force(const GibbsSpec& spec, const ActivationSpec& act,
                                long long grid_size) {
  if (grid_size < 100)
    throw std::invalid_argument("grid_size below the accuracy floor of 100");
  const SdClosedForm cf = sd_closed_form(spec, act);
  const int k = spec.k, d = spec.d;
  const LegendreIndex idx{k, d};
  const LegendreIndex shifted{k - 1, d + 2};
  auto off_axis = [&](double t) {
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    return std::abs(s * (-cf.coef_grad * t * legendre_eval(shifted, t) +
                         cf.coef_level * legendre_eval(idx, t)));
  };
  auto on_axis = [&](double t) {
    return std::abs(cf.coef_grad * (1.0 - t * t) * legendre_eval(shifted, t) +
                    cf.coef_level * t * legendre_eval(idx, t));
  };
  const double sup_off = grid_max(off_axis, grid_size);
  const double sup_ax = grid_max(on_axis, grid_size);
  SteinEstimate est;
  est.value = cf.prefactor *
              std::sqrt((d - 1.0) * sup_off * sup_off + sup_ax * sup_ax);
  est.variant = SteinVariant::F1BruteForce;
  est.grid_size = grid_size;
  return est;
}

double sd_f1_lower_bound(const GibbsSpec& spec, const ActivationSpec& act) {
  const SdClosedForm cf = sd_closed_form(spec, act);
  return cf.prefactor * cf.coef_level;
}

SteinEstimate sd_f2_features(const GibbsSpec& spec, const ActivationSpec& act,
                             long long n_features, long long n_samples,
                             RngSeed seed, int workers) {
  if (spec.k < 1 || spec.d < 2)
    throw std::invalid_argument("stein discrepancy requires k >= 1, d >= 2");
  if (n_features < 1 || n_samples < 1)
    throw std::invalid_argument("feature and sample counts must be >= 1");
  const int k = spec.k, d = spec.d;
  const SampleSet xs =
      sample_uniform_sphere(d, n_samples, derive_seed(seed, 1), workers);
  // Riemannian gradient rows of the solid harmonic at each sample.
  const LegendreIndex shifted{k - 1, d + 2};
  const double lead = k * (k + d - 2.0) / (d - 1.0);
  MatrixRM grads(n_samples, d);
  for (Eigen::Index l = 0; l < n_samples; ++l) {
    const double t = xs.points(l, d - 1);
    const double slope = lead * legendre_eval(shifted, t);
    grads.row(l) = -slope * t * xs.points.row(l);
    grads(l, d - 1) += slope;
  }
  const SampleSet th =
      sample_uniform_sphere(d, n_features, derive_seed(seed, 2), workers);
  Eigen::MatrixXd sums;
  sigma_feature_sums(xs, th.points, act, &grads, sums);
  sums /= static_cast<double>(n_samples);
  const Eigen::Index F = n_features;
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index j = 0; j < F; ++j) {
    double u = 0.0;
    for (int i = 0; i < d; ++i) u += sums(i, j) * sums(i, j);
    sum += u;
    sumsq += u * u;
  }
  const double fd = static_cast<double>(F);
  const double sq_mean = sum / fd;
  const double sq_var =
      F > 1 ? std::max(0.0, (sumsq - sum * sum / fd) / (fd - 1.0)) : 0.0;
  const double sq_se = std::sqrt(sq_var / fd);
  const double g = std::abs(spec.gamma);
  SteinEstimate est;
  est.value = g * std::sqrt(std::max(sq_mean, 0.0));
  est.se = est.value > 0.0 ? g * g * sq_se / (2.0 * est.value) : std::sqrt(sq_se);
  est.variant = SteinVariant::F2Features;
  est.n_features = n_features;
  est.n_samples = n_samples;
  return est;
}

double sd_f2_upper_bound(const GibbsSpec& spec, const ActivationSpec& act) {
  if (spec.k < 1 || spec.d < 2)
    throw std::invalid_argument("stein discrepancy requires k >= 1, d >= 2");
  const int k = spec.k, d = spec.d, alpha = act.alpha;
  const double cf = act.a + (k % 2 == 1 ? act.b : -act.b);
  const double lam = lambda_coefficient({k, d}, alpha + 1);
  const double ga = (d + alpha - 2.0) / (alpha + 1.0);
  const double gb = k * (d + k - 3.0) / (alpha + 1.0);
  const double inner = k * (k + d - 2.0) * ga * ga + gb * gb;
  const double logv = 0.5 * (std::log(2.0) - log_harmonic_dimension({k, d}) +
                             std::log(inner));
  return std::abs(cf) * std::abs(spec.gamma) * std::abs(lam) * std::exp(logv);
}

double sd_ratio_bound(LegendreIndex idx, int alpha) {
  const int k = idx.k, d = idx.d;
  if (k < 1 || d < 2) throw std::invalid_argument("ratio bound requires k >= 1, d >= 2");
  const double ga = (d + alpha - 2.0) / (alpha + 1.0);
  const double gb = k * (d + k - 3.0) / (alpha + 1.0);
  const double inner = k * (k + d - 2.0) * ga * ga + gb * gb;
  return std::exp(std::log(gb) - 0.5 * (std::log(2.0) -
                                        log_harmonic_dimension(idx) +
                                        std::log(inner)));
}

double wasserstein_1d(const Eigen::VectorXd& xs_sorted,
                      const Eigen::VectorXd& ys_sorted) {
  const Eigen::Index n = xs_sorted.size();
  if (n != ys_sorted.size())
    throw std::invalid_argument("wasserstein_1d requires equal lengths");
  if (n == 0) throw std::invalid_argument("wasserstein_1d requires n >= 1");
  if (!std::is_sorted(xs_sorted.data(), xs_sorted.data() + n) ||
      !std::is_sorted(ys_sorted.data(), ys_sorted.data() + n))
    throw std::invalid_argument("wasserstein_1d requires sorted inputs");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    sum += std::abs(xs_sorted[i] - ys_sorted[i]);
  return sum / static_cast<double>(n);
}

namespace {

double projected_w1(const SampleSet& mu, const SampleSet& nu,
                    const Eigen::VectorXd& direction) {
  Eigen::VectorXd p = mu.points * direction;
  Eigen::VectorXd q = nu.points * direction;
  std::sort(p.data(), p.data() + p.size());
  std::sort(q.data(), q.data() + q.size());
  return wasserstein_1d(p, q);
}

}  // namespace

SlicedResult sliced_w1(const SampleSet& mu, const SampleSet& nu,
                       int n_directions, RngSeed seed, int workers) {
  check_pair(mu, nu);
  if (mu.n() != nu.n())
    throw std::invalid_argument("sliced distance requires equal sample counts");
  if (n_directions < 1) throw std::invalid_argument("n_directions must be >= 1");
  const SampleSet dirs = sample_uniform_sphere(mu.point_dim(), n_directions,
                                               derive_seed(seed, 1), workers);
  std::vector<double> vals(n_directions);
  parallel_indices(n_directions, workers, [&](Eigen::Index i) {
    vals[i] = projected_w1(mu, nu, dirs.points.row(i).transpose());
  });
  const MeanVar mv = mean_var(vals.data(), n_directions);
  SlicedResult res;
  res.value = mv.mean;
  res.se = std::sqrt(mv.var / static_cast<double>(n_directions));
  res.n_directions = n_directions;
  return res;
}

DirectionResult max_sliced_w1_known_axis(const SampleSet& mu,
                                         const SampleSet& nu,
                                         const Eigen::VectorXd& axis) {
  check_pair(mu, nu);
  if (mu.n() != nu.n())
    throw std::invalid_argument("max-sliced distance requires equal sample counts");
  if (axis.size() != mu.point_dim())
    throw std::invalid_argument("axis dimension mismatch");
  const double norm = axis.norm();
  if (norm < 1e-12) throw std::invalid_argument("axis is zero");
  Eigen::VectorXd unit = axis / norm;
  const double value = projected_w1(mu, nu, unit);
  return DirectionResult{std::move(unit), value};
}

DirectionResult max_sliced_w1_grid(const SampleSet& mu, const SampleSet& nu,
                                   int n_candidates, RngSeed seed,
                                   const std::vector<Eigen::VectorXd>& extra_candidates,
                                   int workers) {
  check_pair(mu, nu);
  if (mu.n() != nu.n())
    throw std::invalid_argument("max-sliced distance requires equal sample counts");
  if (n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
  const int d = mu.point_dim();
  const SampleSet dirs =
      sample_uniform_sphere(d, n_candidates, derive_seed(seed, 1), workers);
  std::vector<Eigen::VectorXd> candidates;
  candidates.reserve(dirs.n() + 2 * d + extra_candidates.size());
  for (Eigen::Index i = 0; i < dirs.n(); ++i)
    candidates.push_back(dirs.points.row(i).transpose());
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    candidates.push_back(e);
    candidates.push_back(-e);
  }
  for (const auto& extra : extra_candidates) {
    if (extra.size() != d)
      throw std::invalid_argument("extra candidate dimension mismatch");
    const double norm = extra.norm();
    if (norm > 1e-12) candidates.push_back(extra / norm);
  }
  std::vector<double> vals(candidates.size());
  parallel_indices(static_cast<Eigen::Index>(candidates.size()), workers,
                   [&](Eigen::Index i) {
    vals[i] = projected_w1(mu, nu, candidates[i]);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (vals[i] > vals[best]) best = i;
  return DirectionResult{candidates[best], vals[best]};
}

double arccos_kernel_uniform(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                             int alpha, int ambient_dim) {
  if (x.size() != y.size()) throw std::invalid_argument("dimension mismatch");
  if (alpha != 0 && alpha != 1)
    throw std::invalid_argument("closed-form kernel covers alpha in {0,1}");
  if (ambient_dim < 1) throw std::invalid_argument("ambient_dim must be >= 1");
  return arccos_kernel_core(x.dot(y), x.norm(), y.norm(), alpha, ambient_dim);
}

}  // namespace spheremetrics
