#pragma once

// Gaussian-process regression used as the optimizer's surrogate.
//
// One GpModel is fitted per objective. Inputs are expected to be normalized
// to the unit cube and targets standardized (zero mean, unit variance); the
// ObjectiveModel wrapper carries the affine map back to objective units.
//
// The covariance of the training set is factorized once at fit time,
//   K + noise * I = L L^T,   alpha = L^{-T} L^{-1} y,
// after which predictions cost O(n d) for the mean and O(n^2) for the variance.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cid::gp {

enum class KernelFamily { kMatern52, kSquaredExponential };

struct KernelSpec {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;  // one per design dimension (ARD)
  double noise_variance = 1e-6;
  KernelFamily family = KernelFamily::kMatern52;

  /// Throws std::invalid_argument when a field is out of range or the number
  /// of lengthscales differs from `dim`.
  void validate(std::size_t dim) const;

  bool operator==(const KernelSpec&) const = default;
};

KernelSpec default_kernel(std::size_t dim, KernelFamily family = KernelFamily::kMatern52);

/// k(a, b) with ARD scaling. Throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

struct PosteriorPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Jitter values tried, in order, when the covariance cannot be factorized
/// as given.
inline constexpr double kJitterLadder[] = {1e-10, 1e-9, 1e-8, 1e-7, 1e-6};

class GpModel {
 public:
  /// Fit a model; `inputs` is n x d, `targets` has length n. n may be 0.
  ///
  /// If the Cholesky factorization of K + noise*I fails, jitter from
  /// kJitterLadder is added to the diagonal. A jittered factorization is only
  /// accepted when it still reproduces the targets, i.e. jitter * |alpha| is
  /// negligible; otherwise the covariance is treated as singular and
  /// cid::NumericalError is thrown naming the last jitter attempted.
  static GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     const KernelSpec& spec);

  PosteriorPrediction predict(std::span<const double> query) const;

  /// -1/2 y^T (K+s I)^{-1} y - 1/2 log det(K+s I) - n/2 log(2 pi).
  /// Throws std::invalid_argument for an empty model.
  double log_marginal_likelihood() const;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.rows()); }
  std::size_t dim() const noexcept { return spec_.lengthscales.size(); }
  const Eigen::MatrixXd& inputs() const noexcept { return inputs_; }
  const Eigen::VectorXd& targets() const noexcept { return targets_; }
  const KernelSpec& kernel() const noexcept { return spec_; }
  /// Lower-triangular Cholesky factor of K + (noise + jitter) I.
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  double jitter() const noexcept { return jitter_; }

 private:
  GpModel() = default;

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  KernelSpec spec_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Dense covariance matrix K(inputs, inputs) without the noise term.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& inputs);

struct HyperSearchProbe {
  KernelSpec spec;
  double lml;
};

struct HyperSearchOptions {
  KernelFamily family = KernelFamily::kMatern52;
  double min_signal_variance = 0.05;
  double max_signal_variance = 20.0;
  double min_lengthscale = 0.01;
  double max_lengthscale = 20.0;
  double min_noise_variance = 1e-6;
  double max_noise_variance = 1.0;
  int refinement_levels = 5;  // step halvings in log space, starting at 1.0
  bool record_probes = false;
};

struct HyperSearchResult {
  KernelSpec best;
  double best_lml;
  std::vector<HyperSearchProbe> probes;  // filled when record_probes is set
};

/// Maximize the log marginal likelihood over kernel hyperparameters.
///
/// The search runs `restarts` starting points in log space (the first is the
/// default kernel, the rest are uniform in the log box), each refined by
/// coordinate-wise pattern search. Specs whose factorization fails score -inf.
/// Requires at least two training points.
HyperSearchResult optimize_hyperparams(const Eigen::MatrixXd& inputs,
                                       const Eigen::VectorXd& targets, int restarts,
                                       std::uint64_t seed,
                                       const HyperSearchOptions& options = {});

/// Affine target transform around a fitted GP: y = offset + scale * f(x).
struct ObjectiveModel {
  GpModel gp;
  double offset = 0.0;
  double scale = 1.0;

  /// Posterior in objective units.
  PosteriorPrediction predict(std::span<const double> unit_query) const;
};

struct Standardization {
  double offset;
  double scale;
};

/// Mean and standard deviation of `values`; scale falls back to 1 when the
/// spread is degenerate.
Standardization standardize(std::span<const double> values);

}  // namespace cid::gp
