#pragma once

#include "normnet/netir.hpp"

#include "json.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>

namespace normnet {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Box {
  Eigen::VectorXd lo, hi;

  static Box cube(int d, double lo, double hi) {
    return {Eigen::VectorXd::Constant(d, lo), Eigen::VectorXd::Constant(d, hi)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
  double extent() const { return (hi - lo).maxCoeff(); }
};

inline ScalarFn scalar_output(const Net& net, Eigen::Index component = 0) {
  return [&net, component](const Eigen::VectorXd& x) { return net.eval(x)(component); };
}

// Visits every point of the tensor grid with `grid` intervals per axis.
void for_each_grid_point(const Box& box, int grid, const std::function<void(const Eigen::VectorXd&)>& visit);

// Max of |f - g| over the grid; a lower bound on the true sup norm.
double sup_error(const ScalarFn& f, const ScalarFn& g, const Box& box, int grid);

// Max over |α| <= k and the shrunken grid of |D^α (f - g)| by central differences.
// fd_step <= 0 selects 1e-3 times the box extent.
double sobolev_error(const ScalarFn& f, const ScalarFn& g, int k, const Box& box, int grid, double fd_step = -1);

struct MatchResult {
  bool pass = true;
  double worst = 0.0;
  Eigen::VectorXd worst_x;
  int checked = 0;
  int excluded = 0;
};

using Sampler = std::function<Eigen::VectorXd(std::mt19937_64&)>;
using Exclusion = std::function<bool(const Eigen::VectorXd&)>;

Sampler uniform_sampler(const Box& box);

MatchResult exact_match(const VectorFn& f, const VectorFn& g, const Sampler& sampler, int n_samples, double tol,
                        const Exclusion& exclude, std::uint64_t seed);

struct NegSearchResult {
  double best = 0.0;        // over both families
  double best_smooth = 0.0; // (ax+b)/sqrt(cx²+2ex+g) + b0
  double best_sign = 0.0;   // w2 sign(x - t) + b2
  std::array<double, 6> smooth_params{};  // a, b, c, e, g, b0
  double sign_breakpoint = 0.0;
};

NegSearchResult theorem31_search(int restarts, int refine_iters, int grid, std::uint64_t seed);

// Reduced shallow LN-net on ℝ → ℝ; zero denominator follows the σ = 0 convention.
double reduced_ln_value(const std::array<double, 6>& prm, double x);

struct ApproxReport {
  Box box;
  int grid = 0;
  double fd_step = 0.0;
  double linf = 0.0;
  std::map<int, double> wk;       // measured W^{k,∞} per k
  std::map<std::string, double> bounds;
  nlohmann::json meta;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

}  // namespace normnet
