#include "cid/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "cid/error.hpp"
#include "cid/rng.hpp"

namespace cid::gp {

void KernelSpec::validate(std::size_t dim) const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("KernelSpec: signal_variance must be positive and finite");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("KernelSpec: noise_variance must be nonnegative and finite");
  }
  if (lengthscales.size() != dim) {
    throw std::invalid_argument(fmt::format(
        "KernelSpec: expected {} lengthscales, got {}", dim, lengthscales.size()));
  }
  for (double l : lengthscales) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("KernelSpec: lengthscales must be positive and finite");
    }
  }
}

KernelSpec default_kernel(std::size_t dim, KernelFamily family) {
  KernelSpec spec;
  spec.lengthscales.assign(dim, 0.3);
  spec.family = family;
  return spec;
}

namespace {

double kernel_from_scaled_distance(const KernelSpec& spec, double r2) {
  switch (spec.family) {
    case KernelFamily::kMatern52: {
      const double r = std::sqrt(r2);
      const double s5r = std::sqrt(5.0) * r;
      return spec.signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * std::exp(-s5r);
    }
    case KernelFamily::kSquaredExponential:
      return spec.signal_variance * std::exp(-0.5 * r2);
  }
  return 0.0;
}

template <typename A, typename B>
double scaled_distance2(const KernelSpec& spec, const A& a, const B& b, std::size_t dim) {
  double r2 = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double z = (a[j] - b[j]) / spec.lengthscales[j];
    r2 += z * z;
  }
  return r2;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  const std::size_t d = spec.lengthscales.size();
  if (a.size() != d || b.size() != d) {
    throw std::invalid_argument(fmt::format(
        "kernel_eval: points have dimensions {} and {}, kernel expects {}", a.size(), b.size(), d));
  }
  return kernel_from_scaled_distance(spec, scaled_distance2(spec, a, b, d));
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  const std::size_t d = spec.lengthscales.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = spec.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          kernel_from_scaled_distance(spec, scaled_distance2(spec, inputs.row(i), inputs.row(j), d));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

GpModel GpModel::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     const KernelSpec& spec) {
  const std::size_t d = spec.lengthscales.size();
  spec.validate(d);
  if (inputs.rows() != targets.size()) {
    throw std::invalid_argument(fmt::format("gp fit: {} input rows but {} targets",
                                            inputs.rows(), targets.size()));
  }
  if (inputs.rows() > 0 && static_cast<std::size_t>(inputs.cols()) != d) {
    throw std::invalid_argument(fmt::format("gp fit: inputs have {} columns, kernel expects {}",
                                            inputs.cols(), d));
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("gp fit: non-finite training data");
  }

  GpModel model;
  model.inputs_ = inputs.rows() > 0 ? inputs : Eigen::MatrixXd(0, static_cast<Eigen::Index>(d));
  model.targets_ = targets;
  model.spec_ = spec;
  const Eigen::Index n = inputs.rows();
  if (n == 0) {
    model.factor_.resize(0, 0);
    model.alpha_.resize(0);
    return model;
  }

  Eigen::MatrixXd cov = gram_matrix(spec, inputs);
  cov.diagonal().array() += spec.noise_variance;

  const double y_scale = std::max(1.0, targets.cwiseAbs().maxCoeff());
  double jitter = 0.0;
  for (std::size_t attempt = 0; attempt <= std::size(kJitterLadder); ++attempt) {
    jitter = attempt == 0 ? 0.0 : kJitterLadder[attempt - 1];
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) continue;
    Eigen::VectorXd alpha = llt.solve(targets);
    if (!alpha.allFinite()) continue;
    if (jitter > 0.0 && jitter * alpha.cwiseAbs().maxCoeff() > 1e-6 * y_scale) continue;
    model.factor_ = std::move(l);
    model.alpha_ = std::move(alpha);
    model.jitter_ = jitter;
    return model;
  }
  throw NumericalError(fmt::format(
      "gp fit: covariance is singular; Cholesky factorization failed with jitter up to {:g}",
      jitter));
}

PosteriorPrediction GpModel::predict(std::span<const double> query) const {
  const std::size_t d = dim();
  if (query.size() != d) {
    throw std::invalid_argument(
        fmt::format("gp predict: query has dimension {}, model expects {}", query.size(), d));
  }
  const Eigen::Index n = inputs_.rows();
  if (n == 0) return {0.0, spec_.signal_variance};

  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    kstar[i] = kernel_from_scaled_distance(spec_, scaled_distance2(spec_, inputs_.row(i), query, d));
  }
  PosteriorPrediction out;
  out.mean = kstar.dot(alpha_);
  const Eigen::VectorXd v = factor_.triangularView<Eigen::Lower>().solve(kstar);
  out.variance = std::max(0.0, spec_.signal_variance - v.squaredNorm());
  return out;
}

double GpModel::log_marginal_likelihood() const {
  const Eigen::Index n = inputs_.rows();
  if (n == 0) {
    throw std::invalid_argument("log_marginal_likelihood: model has no training points");
  }
  const double quad = targets_.dot(alpha_);
  const double half_logdet = factor_.diagonal().array().log().sum();
  return -0.5 * quad - half_logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

namespace {

struct LogBox {
  std::vector<double> lo;
  std::vector<double> hi;
};

KernelSpec spec_from_log(std::span<const double> theta, std::size_t d, KernelFamily family) {
  KernelSpec s;
  s.family = family;
  s.signal_variance = std::exp(theta[0]);
  s.lengthscales.resize(d);
  for (std::size_t j = 0; j < d; ++j) s.lengthscales[j] = std::exp(theta[1 + j]);
  s.noise_variance = std::exp(theta[1 + d]);
  return s;
}

}  // namespace

HyperSearchResult optimize_hyperparams(const Eigen::MatrixXd& inputs,
                                       const Eigen::VectorXd& targets, int restarts,
                                       std::uint64_t seed, const HyperSearchOptions& options) {
  if (inputs.rows() < 2) {
    throw std::invalid_argument("optimize_hyperparams: need at least 2 training points");
  }
  if (restarts < 1) {
    throw std::invalid_argument("optimize_hyperparams: search budget must be >= 1");
  }
  const std::size_t d = static_cast<std::size_t>(inputs.cols());
  const std::size_t p = d + 2;

  LogBox box;
  box.lo.resize(p);
  box.hi.resize(p);
  box.lo[0] = std::log(options.min_signal_variance);
  box.hi[0] = std::log(options.max_signal_variance);
  for (std::size_t j = 0; j < d; ++j) {
    box.lo[1 + j] = std::log(options.min_lengthscale);
    box.hi[1 + j] = std::log(options.max_lengthscale);
  }
  box.lo[p - 1] = std::log(options.min_noise_variance);
  box.hi[p - 1] = std::log(options.max_noise_variance);

  HyperSearchResult result{spec_from_log(box.lo, d, options.family),
                           -std::numeric_limits<double>::infinity(),
                           {}};

  auto score = [&](const std::vector<double>& theta) {
    KernelSpec s = spec_from_log(theta, d, options.family);
    double lml = -std::numeric_limits<double>::infinity();
    try {
      lml = GpModel::fit(inputs, targets, s).log_marginal_likelihood();
    } catch (const NumericalError&) {
    }
    if (!std::isfinite(lml)) lml = -std::numeric_limits<double>::infinity();
    if (options.record_probes) result.probes.push_back({s, lml});
    if (lml > result.best_lml) {
      result.best_lml = lml;
      result.best = s;
    }
    return lml;
  };

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const KernelSpec start = default_kernel(d, options.family);

  for (int r = 0; r < restarts; ++r) {
    std::vector<double> theta(p);
    if (r == 0) {
      theta[0] = std::log(start.signal_variance);
      for (std::size_t j = 0; j < d; ++j) theta[1 + j] = std::log(start.lengthscales[j]);
      theta[p - 1] = std::log(1e-4);
    } else {
      for (std::size_t k = 0; k < p; ++k) theta[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * unit(rng);
    }
    for (std::size_t k = 0; k < p; ++k) theta[k] = std::clamp(theta[k], box.lo[k], box.hi[k]);
    double current = score(theta);

    double step = 1.0;
    for (int level = 0; level < options.refinement_levels; ++level, step *= 0.5) {
      for (int pass = 0; pass < 20; ++pass) {
        bool improved = false;
        for (std::size_t k = 0; k < p; ++k) {
          for (double dir : {1.0, -1.0}) {
            std::vector<double> trial = theta;
            trial[k] = std::clamp(trial[k] + dir * step, box.lo[k], box.hi[k]);
            if (trial[k] == theta[k]) continue;
            const double v = score(trial);
            if (v > current + 1e-12) {
              theta = std::move(trial);
              current = v;
              improved = true;
              break;
            }
          }
        }
        if (!improved) break;
      }
    }
  }
  return result;
}

PosteriorPrediction ObjectiveModel::predict(std::span<const double> unit_query) const {
  PosteriorPrediction p = gp.predict(unit_query);
  return {offset + scale * p.mean, scale * scale * p.variance};
}

Standardization standardize(std::span<const double> values) {
  if (values.empty()) return {0.0, 1.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  return {mean, sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0};
}

}  // namespace cid::gp
