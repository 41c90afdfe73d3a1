#include "spheremetrics/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>
#include <vector>

namespace spheremetrics {

namespace {

constexpr double kPi = 3.14159265358979323846;

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fill(chunk, row_begin, rows, rng) over fixed-size chunks, each with
// its own derived stream; chunk assignment to workers is irrelevant to the
// output, so any worker count reproduces the same samples.
template <class Fill>
void run_chunks(Eigen::Index n, RngSeed seed, int workers, Fill&& fill) {
  const Eigen::Index nchunks = (n + kSampleChunk - 1) / kSampleChunk;
  const int nw = static_cast<int>(
      std::min<Eigen::Index>(resolve_workers(workers), std::max<Eigen::Index>(nchunks, 1)));
  auto run_one = [&](Eigen::Index c) {
    Rng rng(derive_seed(seed.value, static_cast<std::uint64_t>(c)));
    const Eigen::Index begin = c * kSampleChunk;
    fill(c, begin, std::min<Eigen::Index>(kSampleChunk, n - begin), rng);
  };
  if (nw <= 1) {
    for (Eigen::Index c = 0; c < nchunks; ++c) run_one(c);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const Eigen::Index c = next.fetch_add(1);
        if (c >= nchunks) return;
        try {
          run_one(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(nchunks);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double log_surface_area(int d) {
  return std::log(2.0) + (d / 2.0) * std::log(kPi) - std::lgamma(d / 2.0);
}

void check_on_sphere(const Eigen::VectorXd& x, int d) {
  if (x.size() != d) throw std::invalid_argument("point dimension mismatch");
  if (std::abs(x.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("point must lie on the unit sphere");
}

// Rejection sampler on the sphere: accept_prob(t) for t the last coordinate.
template <class AcceptProb>
SampleSet rejection_sample(int d, Eigen::Index n, RngSeed seed, int workers,
                           long long proposal_cap, AcceptProb&& accept_prob) {
  SampleSet set;
  set.domain = Domain::Sphere;
  set.points.resize(n, d);
  std::atomic<long long> proposals{0};
  run_chunks(n, seed, workers, [&](Eigen::Index, Eigen::Index begin,
                                   Eigen::Index rows, Rng& rng) {
    long long local = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      double* row = set.points.row(begin + i).data();
      for (;;) {
        if (++local >= 1048576) {
          if (proposals.fetch_add(local) + local > proposal_cap)
            throw SamplerError("rejection sampler exceeded proposal cap");
          local = 0;
        }
        fill_unit_vector(rng, row, d);
        if (rng.uniform01() < accept_prob(row[d - 1])) break;
      }
    }
    proposals.fetch_add(local);
  });
  if (proposals.load() > proposal_cap)
    throw SamplerError("rejection sampler exceeded proposal cap");
  return set;
}

}  // namespace

void fill_unit_vector(Rng& rng, double* row, int d) {
  for (;;) {
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      row[j] = rng.normal();
      sq += row[j] * row[j];
    }
    const double norm = std::sqrt(sq);
    if (norm > 1e-154) {
      for (int j = 0; j < d; ++j) row[j] /= norm;
      return;
    }
  }
}

MatrixRM sample_chunked_rows(Eigen::Index n, int cols, RngSeed seed, int workers,
                             const std::function<void(Rng&, double*)>& fill_row) {
  MatrixRM out(n, cols);
  run_chunks(n, seed, workers, [&](Eigen::Index, Eigen::Index begin,
                                   Eigen::Index rows, Rng& rng) {
    for (Eigen::Index i = 0; i < rows; ++i)
      fill_row(rng, out.row(begin + i).data());
  });
  return out;
}

SampleSet sample_uniform_sphere(int d, Eigen::Index n, RngSeed seed,
                                int workers) {
  if (d < 1) throw std::invalid_argument("sphere dimension must be >= 1");
  if (n < 0) throw std::invalid_argument("sample count must be >= 0");
  SampleSet set;
  set.domain = Domain::Sphere;
  set.points.resize(n, d);
  run_chunks(n, seed, workers, [&](Eigen::Index, Eigen::Index begin,
                                   Eigen::Index rows, Rng& rng) {
    for (Eigen::Index i = 0; i < rows; ++i)
      fill_unit_vector(rng, set.points.row(begin + i).data(), d);
  });
  return set;
}

std::pair<SampleSet, SampleSet> sample_legendre_pair(
    const LegendrePairSpec& spec, Eigen::Index n, RngSeed seed, int workers,
    long long proposal_cap) {
  if (spec.k < 1) throw std::invalid_argument("legendre pair requires k >= 1");
  if (spec.d < 2) throw std::invalid_argument("legendre pair requires d >= 2");
  const LegendreIndex idx{spec.k, spec.d};
  // Acceptance probabilities (P)_+ and (-P)_+ already integrate to the right
  // masses relative to each other; the normalization constant only matters
  // for densities, not for sampling.
  auto mu = rejection_sample(
      spec.d, n, derive_seed(seed, 1), workers, proposal_cap,
      [idx](double t) { return legendre_eval(idx, t); });
  auto nu = rejection_sample(
      spec.d, n, derive_seed(seed, 2), workers, proposal_cap,
      [idx](double t) { return -legendre_eval(idx, t); });
  return {std::move(mu), std::move(nu)};
}

SampleSet sample_gibbs(const GibbsSpec& spec, Eigen::Index n, RngSeed seed,
                       int workers, long long proposal_cap) {
  if (spec.k < 1) throw std::invalid_argument("gibbs sampler requires k >= 1");
  if (spec.d < 2) throw std::invalid_argument("gibbs sampler requires d >= 2");
  const LegendreIndex idx{spec.k, spec.d};
  const double gamma = spec.gamma;
  // exp(gamma(P -+ 1)) <= 1 with equality reachable; acceptance rate is at
  // least exp(-2|gamma|).
  return rejection_sample(spec.d, n, seed, workers, proposal_cap,
                          [idx, gamma](double t) {
                            const double p = legendre_eval(idx, t);
                            return gamma >= 0.0 ? std::exp(gamma * (p - 1.0))
                                                : std::exp(gamma * (p + 1.0));
                          });
}

Eigen::VectorXd score_gibbs(const GibbsSpec& spec, const Eigen::VectorXd& x) {
  return spec.gamma *
         legendre_harmonic_grad({spec.k, spec.d}, x).riemannian;
}

PairDensity density_legendre_pair(const LegendrePairSpec& spec,
                                  const Eigen::VectorXd& x) {
  check_on_sphere(x, spec.d);
  const double level = legendre_harmonic_eval({spec.k, spec.d}, x);
  const double scale = spec.effective_gamma() * std::exp(-log_surface_area(spec.d));
  PairDensity density;
  if (level > 0.0) density.mu = scale * level;
  if (level < 0.0) density.nu = -scale * level;
  return density;
}

double density_gibbs(const GibbsSpec& spec, const Eigen::VectorXd& x) {
  check_on_sphere(x, spec.d);
  const LegendreIndex idx{spec.k, spec.d};
  const QuadratureRule& rule = cached_weighted_rule(spec.d);
  const double z =
      sphere_surface_ratio(spec.d) *
      weighted_integral(
          [&](double t) { return std::exp(spec.gamma * legendre_eval(idx, t)); },
          spec.d, rule);
  return std::exp(spec.gamma * legendre_harmonic_eval(idx, x)) / z;
}

std::pair<SampleSet, SampleSet> sample_gaussian_pair(const GaussianSpec& spec,
                                                     Eigen::Index n,
                                                     RngSeed seed,
                                                     int workers) {
  if (spec.d < 1) throw std::invalid_argument("gaussian pair requires d >= 1");
  if (!(spec.shrunk_variance > 0.0))
    throw std::invalid_argument("shrunk variance must be positive");
  Eigen::VectorXd axis = spec.shrunk_axis;
  if (axis.size() != 0) {
    if (axis.size() != spec.d)
      throw std::invalid_argument("shrunk axis dimension mismatch");
    const double norm = axis.norm();
    if (norm < 1e-12) throw std::invalid_argument("shrunk axis is zero");
    axis /= norm;
  }
  const double scale = std::sqrt(spec.shrunk_variance);
  auto gaussian_rows = [&](RngSeed s, bool shrink) {
    SampleSet set;
    set.domain = Domain::BallLift;
    set.points.resize(n, spec.d);
    run_chunks(n, s, workers, [&](Eigen::Index, Eigen::Index begin,
                                  Eigen::Index rows, Rng& rng) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        double* row = set.points.row(begin + i).data();
        for (int j = 0; j < spec.d; ++j) row[j] = rng.normal();
        if (!shrink) continue;
        if (axis.size() == 0) {
          row[spec.d - 1] *= scale;
        } else {
          double dot = 0.0;
          for (int j = 0; j < spec.d; ++j) dot += row[j] * axis[j];
          for (int j = 0; j < spec.d; ++j) row[j] += (scale - 1.0) * dot * axis[j];
        }
      }
    });
    return set;
  };
  return {gaussian_rows(derive_seed(seed, 1), false),
          gaussian_rows(derive_seed(seed, 2), true)};
}

SampleSet clip_to_ball(SampleSet set, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
    const double norm = set.points.row(i).norm();
    if (norm > radius) set.points.row(i) *= radius / norm;
  }
  return set;
}

void write_samples_csv(const SampleSet& set, std::ostream& out, bool header) {
  const int d = set.point_dim();
  const bool lifted = set.domain == Domain::BallLift;
  if (header) {
    for (int j = 0; j < d; ++j) out << (j ? ",x" : "x") << j;
    if (lifted) out << ",lift";
    out << "\n";
  }
  char buf[64];
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", set.points(i, j));
      if (j) out << ',';
      out << buf;
    }
    if (lifted) out << ",1";
    out << "\n";
  }
}

}  // namespace spheremetrics
