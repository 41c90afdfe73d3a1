#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spheremetrics/metrics.hpp"

namespace spheremetrics {

enum class ExperimentKind {
  IpmSeparation,
  SdSeparation,
  GaussianMetrics,
  KernelCheck,
};

struct DimRange {
  int lo = 3;
  int hi = 5;
  int stride = 1;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::IpmSeparation;
  int k = 2;
  DimRange dims;
  long long n_samples = 1'000'000;
  long long n_features = 10'000;
  int n_directions = 1'000;
  long long grid_size = 100'000;
  int repetitions = 10;
  ActivationSpec act;
  double gamma = 1.0;
  RngSeed seed{42};
  int workers = 0;
  std::string out_csv;   // empty: stdout
  std::string out_plot;  // empty: no plot
  TildeTMode tilde_mode = TildeTMode::Arcsine;
  double clip_radius = 0.0;  // > 0: clip Gaussian draws onto this ball
};

struct ExperimentRow {
  std::string experiment;
  int dimension = 0;
  int k = 0;
  std::string metric;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> theory;
  long long n_samples = 0;
  long long n_features = 0;
  int repetitions = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  bool failed = false;
};

// Throws std::invalid_argument on bad configs (CLI maps this to exit 2).
void validate(const ExperimentConfig& config);

// Legendre-pair F1 vs F2 estimates and their ratio per dimension; ratio error
// bars are the worst-case quotients min(F1)/max(F2) and max(F1)/min(F2).
std::vector<ExperimentRow> run_ipm_separation(const ExperimentConfig& config);

// Uniform-vs-Gibbs Stein discrepancies: brute-force F1, closed-form bounds,
// Monte Carlo F2, and the empirical ratio against the theoretical bound.
std::vector<ExperimentRow> run_sd_separation(const ExperimentConfig& config);

// Standard-vs-shrunk Gaussian pair: F1 (optimized and shrunk-axis), F2, tilde
// F2, sliced and max-sliced W1, each also on an independent standard-standard
// pair (the *_noise rows).
std::vector<ExperimentRow> run_gaussian_metrics(const ExperimentConfig& config);

// Arc-cosine kernel closed form vs feature Monte Carlo: |z|-score summary
// over 50 random point pairs per dimension and alpha in {0,1}.
std::vector<ExperimentRow> run_kernel_check(const ExperimentConfig& config);

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

void write_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);

// Static log-y SVG chart of row means per metric with min/max whiskers.
void write_plot_svg(const std::vector<ExperimentRow>& rows, std::ostream& out);

// Exit codes: 0 success, 2 usage/validation error, 3 experiment failure.
int cli_main(int argc, char** argv);

}  // namespace spheremetrics
