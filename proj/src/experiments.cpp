#include "spheremetrics/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "spheremetrics/harmonics.hpp"
#include "spheremetrics/measures.hpp"

namespace spheremetrics {

namespace {

struct Agg {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Agg aggregate(const std::vector<double>& values) {
  Agg agg;
  agg.min = values.front();
  agg.max = values.front();
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    agg.min = std::min(agg.min, v);
    agg.max = std::max(agg.max, v);
  }
  agg.mean = sum / static_cast<double>(values.size());
  return agg;
}

Agg constant(double v) { return Agg{v, v, v}; }

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::IpmSeparation:
      return "ipm_separation";
    case ExperimentKind::SdSeparation:
      return "sd_separation";
    case ExperimentKind::GaussianMetrics:
      return "gaussian_metrics";
    case ExperimentKind::KernelCheck:
      return "kernel_check";
  }
  return "unknown";
}

ExperimentRow make_row(const ExperimentConfig& config, int dimension,
                       std::string metric, const Agg& agg,
                       std::optional<double> theory) {
  ExperimentRow row;
  row.experiment = experiment_name(config.experiment);
  row.dimension = dimension;
  row.k = config.k;
  row.metric = std::move(metric);
  row.mean = agg.mean;
  row.min = agg.min;
  row.max = agg.max;
  row.theory = theory;
  row.n_samples = config.n_samples;
  row.n_features = config.n_features;
  row.repetitions = config.repetitions;
  row.seed = config.seed.value;
  return row;
}

ExperimentRow make_failed_row(const ExperimentConfig& config, int dimension,
                              std::string metric, const std::string& reason) {
  ExperimentRow row = make_row(config, dimension, std::move(metric), Agg{},
                               std::nullopt);
  row.failed = true;
  std::string cleaned = reason;
  for (char& c : cleaned) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  row.status = "failed: " + cleaned;
  return row;
}

std::vector<int> dims_list(const DimRange& dims) {
  std::vector<int> out;
  for (int d = dims.lo; d <= dims.hi; d += dims.stride) out.push_back(d);
  return out;
}

Eigen::VectorXd unit_axis(int dim, int index) {
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
  axis[index] = 1.0;
  return axis;
}

std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (config.dims.stride < 1)
    throw std::invalid_argument("dims stride must be >= 1");
  if (config.dims.hi < config.dims.lo)
    throw std::invalid_argument("dims upper bound is below the lower bound");
  if (config.dims.lo < 2) throw std::invalid_argument("dimension must be >= 2");
  const bool uses_legendre =
      config.experiment == ExperimentKind::IpmSeparation ||
      config.experiment == ExperimentKind::SdSeparation;
  if (uses_legendre) {
    if (config.k < 1) throw std::invalid_argument("k must be >= 1");
    if (config.k >= 2 && config.dims.lo < 3)
      throw std::invalid_argument("k >= 2 requires dimension >= 3");
  }
  if (config.n_samples < 1)
    throw std::invalid_argument("sample count must be >= 1");
  if (config.n_features < 1)
    throw std::invalid_argument("feature count must be >= 1");
  if (config.n_directions < 1)
    throw std::invalid_argument("direction count must be >= 1");
  if (config.repetitions < 1)
    throw std::invalid_argument("repetitions must be >= 1");
  if (config.act.alpha < 0)
    throw std::invalid_argument("activation exponent must be >= 0");
  if (config.experiment == ExperimentKind::SdSeparation) {
    if (config.grid_size < 100)
      throw std::invalid_argument("grid size must be >= 100");
    if (!(config.gamma >= -1.0 && config.gamma <= 1.0))
      throw std::invalid_argument("gamma must lie in [-1, 1]");
  }
  if (config.clip_radius < 0.0)
    throw std::invalid_argument("clip radius must be >= 0");
  if (config.workers < 0)
    throw std::invalid_argument("workers must be >= 0");
}

std::vector<ExperimentRow> run_ipm_separation(const ExperimentConfig& config) {
  std::vector<ExperimentRow> rows;
  for (int d : dims_list(config.dims)) {
    const LegendreIndex idx{config.k, d};
    try {
      const double f1_theory = theoretical_f1_ipm(idx, config.act);
      const double ratio_theory = theoretical_ratio(idx);
      const Eigen::VectorXd axis = unit_axis(d, d - 1);
      std::vector<double> f1s, f2s;
      const RngSeed dim_seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(d));
      for (int r = 0; r < config.repetitions; ++r) {
        const RngSeed rep_seed =
            derive_seed(dim_seed, static_cast<std::uint64_t>(r));
        auto pair = sample_legendre_pair(LegendrePairSpec{config.k, d, 0.0},
                                         config.n_samples,
                                         derive_seed(rep_seed, 1),
                                         config.workers);
        f1s.push_back(
            ipm_f1_known_direction(pair.first, pair.second, config.act, axis)
                .value);
        f2s.push_back(ipm_f2_features(pair.first, pair.second, config.act,
                                      config.n_features,
                                      derive_seed(rep_seed, 2), config.workers)
                          .value);
      }
      const Agg f1 = aggregate(f1s);
      const Agg f2 = aggregate(f2s);
      rows.push_back(make_row(config, d, "f1_known_direction", f1, f1_theory));
      rows.push_back(make_row(config, d, "f2_features", f2,
                              f1_theory / ratio_theory));
      const Agg ratio{f1.mean / f2.mean, f1.min / f2.max, f1.max / f2.min};
      rows.push_back(make_row(config, d, "ratio", ratio, ratio_theory));
    } catch (const std::exception& e) {
      for (const char* m : {"f1_known_direction", "f2_features", "ratio"})
        rows.push_back(make_failed_row(config, d, m, e.what()));
    }
  }
  return rows;
}

std::vector<ExperimentRow> run_sd_separation(const ExperimentConfig& config) {
  std::vector<ExperimentRow> rows;
  for (int d : dims_list(config.dims)) {
    const GibbsSpec spec{config.k, d, config.gamma};
    try {
      const double brute =
          sd_f1_brute_force(spec, config.act, config.grid_size).value;
      const double lower = sd_f1_lower_bound(spec, config.act);
      const double upper = sd_f2_upper_bound(spec, config.act);
      const double ratio_theory =
          sd_ratio_bound(LegendreIndex{config.k, d}, config.act.alpha);
      std::vector<double> feats;
      const RngSeed dim_seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(d));
      for (int r = 0; r < config.repetitions; ++r) {
        const RngSeed rep_seed =
            derive_seed(dim_seed, static_cast<std::uint64_t>(r));
        feats.push_back(sd_f2_features(spec, config.act, config.n_features,
                                       config.n_samples,
                                       derive_seed(rep_seed, 1), config.workers)
                            .value);
      }
      const Agg sf = aggregate(feats);
      rows.push_back(make_row(config, d, "sd_f1_brute", constant(brute), lower));
      rows.push_back(
          make_row(config, d, "sd_f1_lower", constant(lower), std::nullopt));
      rows.push_back(make_row(config, d, "sd_f2_features", sf, upper));
      rows.push_back(
          make_row(config, d, "sd_f2_upper", constant(upper), std::nullopt));
      Agg ratio{};
      if (sf.min > 0.0) {
        ratio = Agg{brute / sf.mean, brute / sf.max, brute / sf.min};
      } else if (!(brute == 0.0 && sf.mean == 0.0)) {
        throw std::runtime_error("degenerate F2 Stein estimate");
      }
      rows.push_back(make_row(config, d, "sd_ratio", ratio, ratio_theory));
    } catch (const std::exception& e) {
      for (const char* m : {"sd_f1_brute", "sd_f1_lower", "sd_f2_features",
                            "sd_f2_upper", "sd_ratio"})
        rows.push_back(make_failed_row(config, d, m, e.what()));
    }
  }
  return rows;
}

std::vector<ExperimentRow> run_gaussian_metrics(const ExperimentConfig& config) {
  std::vector<ExperimentRow> rows;
  const double shrunk_variance = 0.1;
  const double msw_theory =
      (1.0 - std::sqrt(shrunk_variance)) * std::sqrt(2.0 / M_PI);
  const std::array<const char*, 6> names = {
      "f1_grid_optimize", "f1_shrunk_axis",        "f2_features",
      "f2_tilde",         "sliced_w1",             "max_sliced_known_axis"};
  for (int d : dims_list(config.dims)) {
    try {
      const Eigen::VectorXd axis = unit_axis(d, d - 1);
      const Eigen::VectorXd lifted_axis = unit_axis(d + 1, d - 1);
      std::array<std::vector<double>, 6> pair_vals, noise_vals;
      const RngSeed dim_seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(d));
      for (int r = 0; r < config.repetitions; ++r) {
        const RngSeed rep_seed =
            derive_seed(dim_seed, static_cast<std::uint64_t>(r));
        auto pair = sample_gaussian_pair(GaussianSpec{d, shrunk_variance, {}},
                                         config.n_samples,
                                         derive_seed(rep_seed, 1),
                                         config.workers);
        auto noise = sample_gaussian_pair(GaussianSpec{d, 1.0, {}},
                                          config.n_samples,
                                          derive_seed(rep_seed, 2),
                                          config.workers);
        if (config.clip_radius > 0.0) {
          pair.first = clip_to_ball(std::move(pair.first), config.clip_radius);
          pair.second =
              clip_to_ball(std::move(pair.second), config.clip_radius);
          noise.first =
              clip_to_ball(std::move(noise.first), config.clip_radius);
          noise.second =
              clip_to_ball(std::move(noise.second), config.clip_radius);
        }
        auto eval = [&](const SampleSet& a, const SampleSet& b,
                        std::uint64_t tag,
                        std::array<std::vector<double>, 6>& out) {
          out[0].push_back(ipm_f1_optimize(a, b, config.act, 8, 60,
                                           derive_seed(rep_seed, 10 + tag),
                                           {lifted_axis}, config.workers)
                               .objective);
          out[1].push_back(
              ipm_f1_known_direction(a, b, config.act, lifted_axis).value);
          out[2].push_back(ipm_f2_features(a, b, config.act, config.n_features,
                                           derive_seed(rep_seed, 12 + tag),
                                           config.workers)
                               .value);
          out[3].push_back(ipm_f2_tilde(a, b, config.act, config.n_features,
                                        derive_seed(rep_seed, 14 + tag),
                                        config.tilde_mode, config.workers)
                               .value);
          out[4].push_back(sliced_w1(a, b, config.n_directions,
                                     derive_seed(rep_seed, 16 + tag),
                                     config.workers)
                               .value);
          out[5].push_back(max_sliced_w1_known_axis(a, b, axis).objective);
        };
        eval(pair.first, pair.second, 0, pair_vals);
        eval(noise.first, noise.second, 1, noise_vals);
      }
      for (std::size_t i = 0; i < names.size(); ++i) {
        const std::optional<double> theory =
            i == 5 ? std::optional<double>(msw_theory) : std::nullopt;
        rows.push_back(
            make_row(config, d, names[i], aggregate(pair_vals[i]), theory));
      }
      for (std::size_t i = 0; i < names.size(); ++i) {
        rows.push_back(make_row(config, d, std::string(names[i]) + "_noise",
                                aggregate(noise_vals[i]), 0.0));
      }
    } catch (const std::exception& e) {
      for (const char* m : names)
        rows.push_back(make_failed_row(config, d, m, e.what()));
      for (const char* m : names)
        rows.push_back(
            make_failed_row(config, d, std::string(m) + "_noise", e.what()));
    }
  }
  return rows;
}

std::vector<ExperimentRow> run_kernel_check(const ExperimentConfig& config) {
  std::vector<ExperimentRow> rows;
  constexpr int kPairs = 50;
  for (int d : dims_list(config.dims)) {
    try {
      const RngSeed dim_seed =
          derive_seed(config.seed, static_cast<std::uint64_t>(d));
      for (int alpha : {0, 1}) {
        const ActivationSpec act{alpha, 1.0, 0.0};
        std::vector<double> zs;
        for (int p = 0; p < kPairs; ++p) {
          const RngSeed pair_seed = derive_seed(
              dim_seed, static_cast<std::uint64_t>(alpha) * 1000 + p);
          Rng rng(derive_seed(pair_seed, 1));
          Eigen::VectorXd x(d), y(d);
          fill_unit_vector(rng, x.data(), d);
          fill_unit_vector(rng, y.data(), d);
          x *= rng.uniform01();
          y *= rng.uniform01();
          const double closed = arccos_kernel_uniform(x, y, alpha, d);
          const SampleSet feats = sample_uniform_sphere(
              d, config.n_features, derive_seed(pair_seed, 2), config.workers);
          double sum = 0.0, sumsq = 0.0;
          for (Eigen::Index f = 0; f < feats.n(); ++f) {
            const double v =
                act(feats.points.row(f).dot(x)) * act(feats.points.row(f).dot(y));
            sum += v;
            sumsq += v * v;
          }
          const double n = static_cast<double>(feats.n());
          const double mean = sum / n;
          const double var =
              std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
          const double se = std::sqrt(var / n);
          zs.push_back(std::abs(closed - mean) / std::max(se, 1e-300));
        }
        rows.push_back(make_row(
            config, d,
            alpha == 0 ? "kernel_alpha0_abs_z" : "kernel_alpha1_abs_z",
            aggregate(zs), 3.0));
      }
    } catch (const std::exception& e) {
      for (const char* m : {"kernel_alpha0_abs_z", "kernel_alpha1_abs_z"})
        rows.push_back(make_failed_row(config, d, m, e.what()));
    }
  }
  return rows;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::IpmSeparation:
      return run_ipm_separation(config);
    case ExperimentKind::SdSeparation:
      return run_sd_separation(config);
    case ExperimentKind::GaussianMetrics:
      return run_gaussian_metrics(config);
    case ExperimentKind::KernelCheck:
      return run_kernel_check(config);
  }
  throw std::invalid_argument("unknown experiment kind");
}

void write_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << "experiment,dimension,k,metric,mean,min,max,theory,n_samples,"
         "n_features,repetitions,seed,status\n";
  for (const ExperimentRow& row : rows) {
    const auto field = [&](const std::optional<double>& v) {
      if (v) out << format_value(*v);
      out << ',';
    };
    out << row.experiment << ',' << row.dimension << ',' << row.k << ','
        << row.metric << ',';
    if (row.failed) {
      field(std::nullopt);
      field(std::nullopt);
      field(std::nullopt);
      field(std::nullopt);
    } else {
      field(row.mean);
      field(row.min);
      field(row.max);
      field(row.theory);
    }
    out << row.n_samples << ',' << row.n_features << ',' << row.repetitions
        << ',' << row.seed << ',' << row.status << '\n';
  }
}

void write_plot_svg(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  struct Point {
    double x, y, lo, hi;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Point>> series;
  std::string title = "experiment";
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  std::vector<int> dims;
  for (const ExperimentRow& row : rows) {
    if (row.failed) continue;
    title = row.experiment;
    if (series.find(row.metric) == series.end()) order.push_back(row.metric);
    series[row.metric].push_back({static_cast<double>(row.dimension), row.mean,
                                  row.min, row.max});
    xmin = std::min(xmin, static_cast<double>(row.dimension));
    xmax = std::max(xmax, static_cast<double>(row.dimension));
    if (std::find(dims.begin(), dims.end(), row.dimension) == dims.end())
      dims.push_back(row.dimension);
    for (double v : {row.mean, row.min, row.max}) {
      if (v > 0.0 && std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  const double width = 880.0, height = 540.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (order.empty() || !(ymin <= ymax)) {
    out << "<text x=\"40\" y=\"60\" font-family=\"sans-serif\" font-size=\"16\">"
           "no positive finite values to plot</text>\n</svg>\n";
    return;
  }
  std::sort(dims.begin(), dims.end());
  const double ml = 80.0, mr = 230.0, mt = 50.0, mb = 60.0;
  const double floor_value = ymin / 4.0;
  double lmin = std::log10(floor_value);
  double lmax = std::log10(ymax);
  if (lmax - lmin < 0.5) {
    const double mid = 0.5 * (lmin + lmax);
    lmin = mid - 0.3;
    lmax = mid + 0.3;
  }
  lmax += 0.05 * (lmax - lmin);
  const auto px = [&](double x) {
    if (xmax <= xmin) return ml + 0.5 * (width - ml - mr);
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto py = [&](double v) {
    const double lv = std::log10(std::max(v, floor_value));
    return height - mb - (lv - lmin) / (lmax - lmin) * (height - mt - mb);
  };
  const std::array<const char*, 12> palette = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
      "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#003f5c", "#ffa600"};
  // axes
  out << "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb << "\"/>\n";
  out << "</g>\n";
  out << "<text x=\"" << ml << "\" y=\"" << mt - 18.0
      << "\" font-family=\"sans-serif\" font-size=\"16\" fill=\"#111\">"
      << title << "</text>\n";
  // y decade ticks
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  bool wrote_tick = false;
  for (int e = static_cast<int>(std::ceil(lmin)); e <= std::floor(lmax); ++e) {
    const double y = py(std::pow(10.0, e));
    out << "<line x1=\"" << ml - 4.0 << "\" y1=\"" << y << "\" x2=\""
        << width - mr << "\" y2=\"" << y
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << ml - 8.0 << "\" y=\"" << y + 4.0
        << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    wrote_tick = true;
  }
  if (!wrote_tick) {
    for (double lv : {lmin, lmax}) {
      const double y = height - mb - (lv - lmin) / (lmax - lmin) *
                                         (height - mt - mb);
      char label[32];
      std::snprintf(label, sizeof label, "%.2g", std::pow(10.0, lv));
      out << "<text x=\"" << ml - 8.0 << "\" y=\"" << y + 4.0
          << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
  }
  // x ticks at observed dimensions
  std::size_t x_stride = dims.size() > 15 ? dims.size() / 12 + 1 : 1;
  for (std::size_t i = 0; i < dims.size(); i += x_stride) {
    const double x = px(dims[i]);
    out << "<line x1=\"" << x << "\" y1=\"" << height - mb << "\" x2=\"" << x
        << "\" y2=\"" << height - mb + 4.0
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << height - mb + 18.0
        << "\" text-anchor=\"middle\">" << dims[i] << "</text>\n";
  }
  out << "<text x=\"" << ml + 0.5 * (width - ml - mr) << "\" y=\""
      << height - 14.0 << "\" text-anchor=\"middle\">dimension</text>\n";
  out << "</g>\n";
  // series
  for (std::size_t s = 0; s < order.size(); ++s) {
    const char* color = palette[s % palette.size()];
    const std::vector<Point>& pts = series[order[s]];
    out << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
    if (pts.size() > 1) {
      out << "<polyline fill=\"none\" stroke-width=\"1.5\" points=\"";
      for (const Point& p : pts) out << px(p.x) << ',' << py(p.y) << ' ';
      out << "\"/>\n";
    }
    for (const Point& p : pts) {
      const double x = px(p.x);
      if (p.hi > p.lo) {
        out << "<line stroke-width=\"1\" x1=\"" << x << "\" y1=\"" << py(p.lo)
            << "\" x2=\"" << x << "\" y2=\"" << py(p.hi) << "\"/>\n";
        for (double v : {p.lo, p.hi}) {
          out << "<line stroke-width=\"1\" x1=\"" << x - 3.0 << "\" y1=\""
              << py(v) << "\" x2=\"" << x + 3.0 << "\" y2=\"" << py(v)
              << "\"/>\n";
        }
      }
      out << "<circle cx=\"" << x << "\" cy=\"" << py(p.y)
          << "\" r=\"2.5\"/>\n";
    }
    out << "</g>\n";
    const double ly = mt + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << width - mr + 14.0 << "\" y1=\"" << ly + 4.0
        << "\" x2=\"" << width - mr + 34.0 << "\" y2=\"" << ly + 4.0
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << width - mr + 40.0 << "\" y=\"" << ly + 8.0
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#111\">"
        << order[s] << "</text>\n";
  }
  out << "</svg>\n";
}

namespace {

DimRange parse_dims(const std::string& text) {
  DimRange dims;
  const int len = static_cast<int>(text.size());
  int used = -1;
  if (std::sscanf(text.c_str(), "%d:%d:%d%n", &dims.lo, &dims.hi, &dims.stride,
                  &used) == 3 &&
      used == len)
    return dims;
  used = -1;
  if (std::sscanf(text.c_str(), "%d:%d%n", &dims.lo, &dims.hi, &used) == 2 &&
      used == len) {
    dims.stride = 1;
    return dims;
  }
  used = -1;
  if (std::sscanf(text.c_str(), "%d%n", &dims.lo, &used) == 1 && used == len) {
    dims.hi = dims.lo;
    dims.stride = 1;
    return dims;
  }
  throw std::invalid_argument("bad --dims value '" + text +
                              "' (expected lo:hi[:stride])");
}

TildeTMode parse_tilde_mode(const std::string& text) {
  if (text == "arcsine") return TildeTMode::Arcsine;
  if (text == "uniform") return TildeTMode::Uniform;
  throw std::invalid_argument("bad --tilde-t-mode value '" + text +
                              "' (expected arcsine or uniform)");
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"feature-learning vs fixed-kernel metrics on spheres and balls"};
  app.require_subcommand(1);
  ExperimentConfig config;
  std::string dims_str = "3:5";
  std::string tilde_mode = "arcsine";
  std::uint64_t seed_value = 42;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--k", config.k, "Legendre degree");
    sub->add_option("--dims", dims_str, "dimension range lo:hi[:stride]");
    sub->add_option("--samples", config.n_samples, "samples per set");
    sub->add_option("--features", config.n_features, "random feature count");
    sub->add_option("--directions", config.n_directions,
                    "sliced W1 direction count");
    sub->add_option("--grid", config.grid_size,
                    "brute-force Stein grid size");
    sub->add_option("--reps", config.repetitions, "repetitions per dimension");
    sub->add_option("--alpha", config.act.alpha, "activation exponent");
    sub->add_option("--a", config.act.a, "coefficient on (x)_+^alpha");
    sub->add_option("--b", config.act.b, "coefficient on (-x)_+^alpha");
    sub->add_option("--gamma", config.gamma, "Gibbs inverse temperature");
    sub->add_option("--seed", seed_value, "master RNG seed");
    sub->add_option("--workers", config.workers,
                    "worker threads (0 uses all cores)");
    sub->add_option("--out", config.out_csv, "CSV output path (default stdout)");
    sub->add_option("--plot", config.out_plot, "SVG plot output path");
    sub->add_option("--tilde-t-mode", tilde_mode,
                    "tilde F2 height draw: arcsine|uniform");
    sub->add_option("--clip-to-ball", config.clip_radius,
                    "clip Gaussian draws onto a ball of this radius");
  };
  CLI::App* ipm =
      app.add_subcommand("ipm-sep", "Legendre pair F1 vs F2 separation");
  CLI::App* sd = app.add_subcommand(
      "sd-sep", "uniform vs Gibbs Stein discrepancy separation");
  CLI::App* gauss = app.add_subcommand(
      "gauss", "standard vs shrunk Gaussian metric suite");
  CLI::App* kernel = app.add_subcommand(
      "kernel-check", "arc-cosine kernel closed form vs Monte Carlo");
  for (CLI::App* sub : {ipm, sd, gauss, kernel}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  config.seed = RngSeed{seed_value};
  if (app.got_subcommand(ipm))
    config.experiment = ExperimentKind::IpmSeparation;
  else if (app.got_subcommand(sd))
    config.experiment = ExperimentKind::SdSeparation;
  else if (app.got_subcommand(gauss))
    config.experiment = ExperimentKind::GaussianMetrics;
  else
    config.experiment = ExperimentKind::KernelCheck;

  try {
    config.dims = parse_dims(dims_str);
    config.tilde_mode = parse_tilde_mode(tilde_mode);
    validate(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  std::vector<ExperimentRow> rows;
  try {
    rows = run_experiment(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }

  if (config.out_csv.empty()) {
    write_csv(rows, std::cout);
  } else {
    std::ofstream out(config.out_csv);
    if (!out) {
      std::cerr << "error: cannot open " << config.out_csv << "\n";
      return 2;
    }
    write_csv(rows, out);
  }
  if (!config.out_plot.empty()) {
    std::ofstream out(config.out_plot);
    if (!out) {
      std::cerr << "error: cannot open " << config.out_plot << "\n";
      return 2;
    }
    write_plot_svg(rows, out);
  }
  const bool any_failed =
      std::any_of(rows.begin(), rows.end(),
                  [](const ExperimentRow& r) { return r.failed; });
  return any_failed ? 3 : 0;
}

}  // namespace spheremetrics
