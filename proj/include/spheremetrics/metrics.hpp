#pragma once

#include <Eigen/Core>
#include <vector>

#include "spheremetrics/harmonics.hpp"
#include "spheremetrics/measures.hpp"
#include "spheremetrics/rng.hpp"

namespace spheremetrics {

enum class IpmVariant {
  F1KnownDirection,
  F1Optimized,
  F2Features,
  F2KernelPlugin,
  F2KernelUStat,
  F2Tilde,
};

struct IpmEstimate {
  double value = 0.0;
  double se = 0.0;  // Monte Carlo standard error of `value`; 0 if exact
  IpmVariant variant = IpmVariant::F1KnownDirection;
  long long n_samples = 0;
  long long n_features = 0;
  RngSeed seed{};
};

enum class SteinVariant { F1BruteForce, F1LowerBound, F2Features, F2UpperBound };

struct SteinEstimate {
  double value = 0.0;
  double se = 0.0;
  SteinVariant variant = SteinVariant::F1BruteForce;
  long long grid_size = 0;
  long long n_features = 0;
  long long n_samples = 0;
};

struct DirectionResult {
  Eigen::VectorXd direction;
  double objective = 0.0;
};

enum class KernelEstimator { Plugin, UStat };
enum class TildeTMode { Arcsine, Uniform };

// out(w, j) = sum_l weight(l, w) * act(<x_l, theta_j>), where x_l is the
// feature view of row l (raw row, plus a trailing 1 for BallLift) and
// theta_j is row j of `features` (cols = xs.feature_dim()). A null weight
// matrix means a single all-ones weight column. Accumulation order is fixed,
// so results do not depend on blocking.
void sigma_feature_sums(const SampleSet& xs, const MatrixRM& features,
                        const ActivationSpec& act, const MatrixRM* row_weights,
                        Eigen::MatrixXd& out);

// |mean act(<x,theta>) - mean act(<y,theta>)|; exact F1 value when theta is
// the maximizing direction, otherwise a lower bound.
IpmEstimate ipm_f1_known_direction(const SampleSet& mu, const SampleSet& nu,
                                   const ActivationSpec& act,
                                   const Eigen::VectorXd& theta);

// Best direction over random restarts refined by projected gradient ascent
// (right derivative at activation kinks), the canonical axes +-e_i, and any
// extra candidates. The objective is always a lower bound on the F1 IPM.
DirectionResult ipm_f1_optimize(const SampleSet& mu, const SampleSet& nu,
                                const ActivationSpec& act, int restarts,
                                int steps, RngSeed seed,
                                const std::vector<Eigen::VectorXd>& extra_candidates = {},
                                int workers = 0);

// sqrt of the mean squared feature-moment difference over n_features uniform
// random features; se is for the reported (square-rooted) value.
IpmEstimate ipm_f2_features(const SampleSet& mu, const SampleSet& nu,
                            const ActivationSpec& act, long long n_features,
                            RngSeed seed, int workers = 0);

// Exact-kernel F2 MMD for activations (t)_+^alpha, alpha in {0,1} (a=1, b=0).
// Plugin returns sqrt(max(0, MMD^2)); UStat returns the signed MMD^2.
IpmEstimate ipm_f2_kernel(const SampleSet& mu, const SampleSet& nu, int alpha,
                          KernelEstimator estimator);

// F2 IPM over features theta = (cos(g) xi, sin(g)) on the lifted sphere,
// xi uniform on S^{d-1}; Arcsine draws g uniform on [-pi/2, pi/2] (the exact
// construction), Uniform draws the last coordinate uniform on [-1, 1].
// BallLift inputs only.
IpmEstimate ipm_f2_tilde(const SampleSet& mu, const SampleSet& nu,
                         const ActivationSpec& act, long long n_features,
                         RngSeed seed, TildeTMode mode = TildeTMode::Arcsine,
                         int workers = 0);

// Closed-form F1 IPM of the Legendre pair:
//   2 |\int P_{k,d}(t) act(t) dweight| / \int |P_{k,d}| dweight.
double theoretical_f1_ipm(LegendreIndex idx, const ActivationSpec& act);
double theoretical_f1_ipm(LegendreIndex idx, const ActivationSpec& act,
                          const QuadratureRule& rule);

// F1/F2 separation ratio sqrt(N_{k,d}) for the Legendre pair.
double theoretical_ratio(LegendreIndex idx);

// Stein discrepancy of the uniform-vs-Gibbs pair over the F1 ball:
// prefactor |a+(-1)^{k+1}b| |gamma| (k/(alpha+1)) |lambda^{(alpha+1)}_{k,d}|
// times sqrt((d-1) sup_off^2 + sup_axis^2), the two one-dimensional suprema
// taken over a uniform grid (endpoints included) with golden-section
// refinement around the best cell.
SteinEstimate sd_f1_brute_force(const GibbsSpec& spec, const ActivationSpec& act,
                                long long grid_size = 100000);

// Closed form: prefactor * (d+k-3).
double sd_f1_lower_bound(const GibbsSpec& spec, const ActivationSpec& act);

// Nested Monte Carlo estimate of the F2 Stein discrepancy:
// |gamma| sqrt( (1/F) sum_j sum_i ( mean_l grad_i L(x_l) act(<x_l,theta_j>) )^2 ),
// x uniform (n_samples), theta uniform (n_features), grad Riemannian.
SteinEstimate sd_f2_features(const GibbsSpec& spec, const ActivationSpec& act,
                             long long n_features, long long n_samples,
                             RngSeed seed, int workers = 0);

// Closed form: |a+(-1)^{k+1}b| |gamma| |lambda^{(alpha+1)}_{k,d}| *
// sqrt((2/N_{k,d}) (k(k+d-2)((d+alpha-2)/(alpha+1))^2 + (k(d+k-3)/(alpha+1))^2)).
double sd_f2_upper_bound(const GibbsSpec& spec, const ActivationSpec& act);

// sd_f1_lower_bound / sd_f2_upper_bound with the common prefactor cancelled.
double sd_ratio_bound(LegendreIndex idx, int alpha);

// (1/n) sum |x_(i) - y_(i)| for two sorted equal-length vectors.
double wasserstein_1d(const Eigen::VectorXd& xs_sorted,
                      const Eigen::VectorXd& ys_sorted);

struct SlicedResult {
  double value = 0.0;
  double se = 0.0;  // over the direction sample
  int n_directions = 0;
};

// Mean over uniform random directions of the projected 1-D W1 distance;
// operates on the raw rows (no lift).
SlicedResult sliced_w1(const SampleSet& mu, const SampleSet& nu,
                       int n_directions, RngSeed seed, int workers = 0);

// Projected W1 along one given direction (normalized internally).
DirectionResult max_sliced_w1_known_axis(const SampleSet& mu,
                                         const SampleSet& nu,
                                         const Eigen::VectorXd& axis);

// Best projected W1 over n_candidates uniform directions, the canonical axes
// +-e_i, and any extras; a lower bound on the true max-sliced distance.
DirectionResult max_sliced_w1_grid(const SampleSet& mu, const SampleSet& nu,
                                   int n_candidates, RngSeed seed,
                                   const std::vector<Eigen::VectorXd>& extra_candidates = {},
                                   int workers = 0);

// E_theta[act(<x,theta>) act(<y,theta>)] for theta uniform on the sphere in
// R^ambient_dim and act = (t)_+^alpha, alpha in {0,1}: the Gaussian arc-cosine
// kernel rescaled by the chi^2(ambient_dim) moment E r^{2 alpha}.
double arccos_kernel_uniform(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                             int alpha, int ambient_dim);

}  // namespace spheremetrics
