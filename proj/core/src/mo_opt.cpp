#include "ssidepth/mo_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssidepth/error.hpp"

namespace ssidepth {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// gamma minimising |gamma*a + (1-gamma)*b|^2 from the inner products
// v11 = <a,a>, v12 = <a,b>, v22 = <b,b>.
double line_search(double v11, double v12, double v22) {
  const double denom = v11 - 2.0 * v12 + v22;
  if (denom < 1e-18) return 0.5;
  return std::clamp((v22 - v12) / denom, 0.0, 1.0);
}

void check_lengths(std::span<const TaskGradient> grads) {
  for (const auto& t : grads) {
    if (t.g.size() != grads.front().g.size()) {
      throw Error(ErrorKind::dimension, "task gradients differ in length ('" +
                                            grads.front().dataset_id + "' vs '" + t.dataset_id +
                                            "')");
    }
    for (double v : t.g) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::domain, "task gradient '" + t.dataset_id + "' is not finite");
      }
    }
  }
}

}  // namespace

double squared_norm(std::span<const double> v) { return dot(v, v); }

SimplexWeights min_norm_2(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() != g2.size()) {
    throw Error(ErrorKind::dimension, "min_norm_2: vectors differ in length");
  }
  const double gamma = line_search(dot(g1, g1), dot(g1, g2), dot(g2, g2));
  return {{gamma, 1.0 - gamma}};
}

SimplexWeights min_norm_fw(std::span<const TaskGradient> grads, const FrankWolfeOptions& opts) {
  if (grads.empty()) throw Error(ErrorKind::insufficient_data, "min_norm_fw: no task gradients");
  if (opts.max_iter < 0 || !(opts.tol > 0.0)) {
    throw Error(ErrorKind::configuration, "min_norm_fw: need max_iter >= 0 and tol > 0");
  }
  check_lengths(grads);
  const std::size_t n = grads.size();
  if (n == 1) return {{1.0}};

  // Gram matrix; the whole solve works on inner products.
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      gram[i * n + j] = gram[j * n + i] = dot(grads[i].g, grads[j].g);
    }
  }
  auto m = [&](std::size_t i, std::size_t j) { return gram[i * n + j]; };

  std::vector<double> alpha(n, 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gamma = line_search(m(i, i), m(i, j), m(j, j));
      const double value = gamma * gamma * m(i, i) + 2.0 * gamma * (1.0 - gamma) * m(i, j) +
                           (1.0 - gamma) * (1.0 - gamma) * m(j, j);
      if (value < best) {
        best = value;
        std::fill(alpha.begin(), alpha.end(), 0.0);
        alpha[i] = gamma;
        alpha[j] = 1.0 - gamma;
      }
    }
  }
  if (n == 2) return {alpha};

  std::vector<double> m_alpha(n);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += m(i, j) * alpha[j];
      m_alpha[i] = acc;
    }
    const auto vertex = static_cast<std::size_t>(
        std::min_element(m_alpha.begin(), m_alpha.end()) - m_alpha.begin());
    double v11 = 0.0;
    for (std::size_t i = 0; i < n; ++i) v11 += alpha[i] * m_alpha[i];
    const double v12 = m_alpha[vertex];
    const double v22 = m(vertex, vertex);
    // Frank-Wolfe gap of f(a) = a' M a.
    if (2.0 * (v11 - v12) < opts.tol) break;
    const double gamma = line_search(v11, v12, v22);
    for (double& a : alpha) a *= gamma;
    alpha[vertex] += 1.0 - gamma;
  }

  double total = 0.0;
  for (double& a : alpha) {
    a = std::max(a, 0.0);
    total += a;
  }
  for (double& a : alpha) a /= total;
  return {alpha};
}

std::vector<double> combine(std::span<const TaskGradient> grads, const SimplexWeights& w) {
  if (grads.size() != w.alpha.size()) {
    throw Error(ErrorKind::dimension, "combine: weight count does not match task count");
  }
  if (grads.empty()) return {};
  check_lengths(grads);
  std::vector<double> out(grads.front().g.size(), 0.0);
  for (std::size_t l = 0; l < grads.size(); ++l) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w.alpha[l] * grads[l].g[i];
  }
  return out;
}

}  // namespace ssidepth
