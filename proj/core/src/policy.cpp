#include "cid/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cid::user {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<int> layer_sizes(const PolicyArch& arch) {
  std::vector<int> sizes{static_cast<int>(kObsDim)};
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(1);
  return sizes;
}

// Forward pass keeping every activation; acts[0] is the observation.
double forward(const PolicyParams& params, const ObsVector& obs, std::vector<Eigen::VectorXd>* acts) {
  const auto sizes = layer_sizes(params.arch);
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(obs.data(), kObsDim);
  if (acts != nullptr) acts->assign(1, h);
  const double* p = params.values.data();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    Eigen::Map<const RowMatrix> w(p, out, in);
    Eigen::Map<const Eigen::VectorXd> b(p + static_cast<std::ptrdiff_t>(out) * in, out);
    p += static_cast<std::ptrdiff_t>(out) * in + out;
    Eigen::VectorXd z = w * h + b;
    if (l + 2 < sizes.size()) z = z.array().tanh();
    h = std::move(z);
    if (acts != nullptr) acts->push_back(h);
  }
  return h[0];
}

}  // namespace

std::size_t PolicyArch::param_count() const {
  const auto sizes = layer_sizes(*this);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l + 1]) * (static_cast<std::size_t>(sizes[l]) + 1);
  }
  return n + 1;
}

PolicyParams PolicyParams::zeros(const PolicyArch& arch, double log_std) {
  for (int h : arch.hidden) {
    if (h < 1) throw std::invalid_argument("PolicyArch: hidden layer sizes must be >= 1");
  }
  PolicyParams p{arch, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count()))};
  p.values[p.values.size() - 1] = log_std;
  return p;
}

PolicyParams PolicyParams::random(const PolicyArch& arch, std::uint64_t seed, double log_std) {
  PolicyParams p = zeros(arch, log_std);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto sizes = layer_sizes(arch);
  double* q = p.values.data();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const bool last = l + 2 == sizes.size();
    const double limit = std::sqrt(6.0 / (in + out)) * (last ? 0.1 : 1.0);
    for (int k = 0; k < out * in; ++k) q[k] = limit * unit(rng);
    q += static_cast<std::ptrdiff_t>(out) * in + out;
  }
  return p;
}

double policy_mean(const PolicyParams& params, const ObsVector& obs) {
  return forward(params, obs, nullptr);
}

double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

ActionSample policy_act(const PolicyParams& params, const ObsVector& obs, Rng& rng) {
  for (double v : obs) {
    if (!std::isfinite(v)) throw std::invalid_argument("policy_act: non-finite observation");
  }
  ActionSample s;
  s.mean = policy_mean(params, obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  s.raw = s.mean + std::exp(params.log_std()) * normal(rng);
  s.action = std::clamp(s.raw, kMinAction, kMaxAction);
  s.log_prob = gaussian_log_prob(s.raw, s.mean, params.log_std());
  return s;
}

void accumulate_log_prob_gradient(const PolicyParams& params, const ObsVector& obs, double raw,
                                  double weight, Eigen::Ref<Eigen::VectorXd> grad) {
  std::vector<Eigen::VectorXd> acts;
  const double mean = forward(params, obs, &acts);
  const double log_std = params.log_std();
  const double inv_var = std::exp(-2.0 * log_std);
  const double diff = raw - mean;

  grad[grad.size() - 1] += weight * (diff * diff * inv_var - 1.0);

  const auto sizes = layer_sizes(params.arch);
  // Offsets of each layer's weight block.
  std::vector<std::ptrdiff_t> offset(sizes.size() - 1);
  std::ptrdiff_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    offset[l] = off;
    off += static_cast<std::ptrdiff_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }

  Eigen::VectorXd delta(1);
  delta[0] = weight * diff * inv_var;  // d/d(mean)
  for (std::size_t l = sizes.size() - 1; l-- > 0;) {
    const int in = sizes[l], out = sizes[l + 1];
    const double* p = params.values.data() + offset[l];
    double* g = grad.data() + offset[l];
    Eigen::Map<RowMatrix> gw(g, out, in);
    Eigen::Map<Eigen::VectorXd> gb(g + static_cast<std::ptrdiff_t>(out) * in, out);
    gw.noalias() += delta * acts[l].transpose();
    gb += delta;
    if (l == 0) break;
    Eigen::Map<const RowMatrix> w(p, out, in);
    Eigen::VectorXd back = w.transpose() * delta;
    delta = back.array() * (1.0 - acts[l].array().square());
  }
}

}  // namespace cid::user
