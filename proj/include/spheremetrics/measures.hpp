#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <utility>

#include "spheremetrics/harmonics.hpp"
#include "spheremetrics/rng.hpp"

namespace spheremetrics {

using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sphere: rows are unit vectors in R^d, features act on x itself.
// BallLift: rows are points in R^d, features act on (x, 1) in R^{d+1}.
enum class Domain { Sphere, BallLift };

struct SampleSet {
  MatrixRM points;  // one point per row
  Domain domain = Domain::Sphere;

  Eigen::Index n() const { return points.rows(); }
  int point_dim() const { return static_cast<int>(points.cols()); }
  int feature_dim() const {
    return point_dim() + (domain == Domain::BallLift ? 1 : 0);
  }
};

// Mutually singular pair on S^{d-1}: densities gamma (L)_+ and gamma (-L)_+
// against the uniform distribution, L the degree-k solid harmonic. gamma <= 0
// means "use normalization_gamma(k, d)".
struct LegendrePairSpec {
  int k = 1;
  int d = 3;
  double gamma = 0.0;

  double effective_gamma() const {
    return gamma > 0.0 ? gamma : normalization_gamma({k, d});
  }
};

// Density proportional to exp(gamma * L) against the uniform distribution.
struct GibbsSpec {
  int k = 1;
  int d = 3;
  double gamma = 1.0;
};

// Pair of centered Gaussians on R^d: standard vs. variance shrunk_variance
// along shrunk_axis (default: last coordinate axis) and 1 elsewhere.
struct GaussianSpec {
  int d = 3;
  double shrunk_variance = 0.1;
  Eigen::VectorXd shrunk_axis;  // empty means e_d
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-chunk seeding: rows [c*65536, ...) always come from the stream
// derive_seed(seed, c), so output is identical for any worker count.
inline constexpr Eigen::Index kSampleChunk = 65536;

SampleSet sample_uniform_sphere(int d, Eigen::Index n, RngSeed seed,
                                int workers = 0);

// Chunk-seeded matrix sampler for custom row distributions (feature draws).
MatrixRM sample_chunked_rows(Eigen::Index n, int cols, RngSeed seed, int workers,
                             const std::function<void(Rng&, double*)>& fill_row);

// Overwrites row[0..d) with a uniform draw from S^{d-1}.
void fill_unit_vector(Rng& rng, double* row, int d);

// Rejection sampling with uniform proposals; the envelope is exact because
// |P_{k,d}| <= 1 on [-1,1]. Throws SamplerError past the proposal cap.
std::pair<SampleSet, SampleSet> sample_legendre_pair(
    const LegendrePairSpec& spec, Eigen::Index n, RngSeed seed, int workers = 0,
    long long proposal_cap = 1'000'000'000);

SampleSet sample_gibbs(const GibbsSpec& spec, Eigen::Index n, RngSeed seed,
                       int workers = 0, long long proposal_cap = 1'000'000'000);

// Riemannian score gamma * grad L at a unit vector.
Eigen::VectorXd score_gibbs(const GibbsSpec& spec, const Eigen::VectorXd& x);

// Densities of the pair against the (d-1)-Hausdorff measure; at most one of
// the two is nonzero (both vanish exactly on {L = 0}).
struct PairDensity {
  double mu = 0.0;
  double nu = 0.0;
};
PairDensity density_legendre_pair(const LegendrePairSpec& spec,
                                  const Eigen::VectorXd& x);

// Gibbs density against the uniform distribution (normalized by quadrature).
double density_gibbs(const GibbsSpec& spec, const Eigen::VectorXd& x);

// Raw R^d draws (standard, shrunk); both tagged BallLift so downstream
// features act on (x, 1). Clip separately if ball support is required.
std::pair<SampleSet, SampleSet> sample_gaussian_pair(const GaussianSpec& spec,
                                                     Eigen::Index n,
                                                     RngSeed seed,
                                                     int workers = 0);

// Radial clipping onto the ball of radius R: x / max(1, ||x||/R).
SampleSet clip_to_ball(SampleSet set, double radius);

// One point per row; BallLift sets get the constant lift column appended.
void write_samples_csv(const SampleSet& set, std::ostream& out,
                       bool header = true);

}  // namespace spheremetrics
