#pragma once

#include <span>
#include <string>
#include <vector>

namespace ssidepth {

// Flattened gradient of one dataset's loss with respect to the shared
// parameters.
struct TaskGradient {
  std::string dataset_id;
  std::vector<double> g;
};

// Convex combination weights, one per task, on the probability simplex.
struct SimplexWeights {
  std::vector<double> alpha;
};

struct FrankWolfeOptions {
  int max_iter = 250;
  double tol = 1e-8;
};

// Closed-form minimiser of |gamma*g1 + (1-gamma)*g2|^2 over gamma in [0, 1].
// Returns (gamma, 1 - gamma); (0.5, 0.5) when |g1 - g2|^2 < 1e-18.
SimplexWeights min_norm_2(std::span<const double> g1, std::span<const double> g2);

// Minimum-norm point of the convex hull of the task gradients, by Frank-Wolfe
// iterations with exact line search between the current point and the vertex
// most aligned against it. Starts from the best pairwise solution and stops
// once the duality gap drops below opts.tol.
SimplexWeights min_norm_fw(std::span<const TaskGradient> grads, const FrankWolfeOptions& opts = {});

// sum_l alpha_l g_l
std::vector<double> combine(std::span<const TaskGradient> grads, const SimplexWeights& w);

double squared_norm(std::span<const double> v);

}  // namespace ssidepth
