#include "normnet/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace normnet {

using Eigen::VectorXd;

namespace {

void check_grid(int grid) {
  if (grid < 64) throw std::invalid_argument("grid resolution must be >= 64 per axis");
}

// All multi-indices of length d with |α| <= k.
std::vector<std::vector<int>> orders_up_to(int d, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(d, 0);
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == d) {
      out.push_back(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[axis] = v;
      rec(axis + 1, left - v);
    }
    a[axis] = 0;
  };
  rec(0, k);
  return out;
}

// Central difference of order alpha[axis] along each axis, composed.
double mixed_difference(const ScalarFn& u, const VectorXd& x, const std::vector<int>& alpha, double h, int axis) {
  if (axis == static_cast<int>(alpha.size())) return u(x);
  const int m = alpha[axis];
  if (m == 0) return mixed_difference(u, x, alpha, h, axis + 1);
  double acc = 0.0, binom = 1.0;
  VectorXd y = x;
  for (int i = 0; i <= m; ++i) {
    y(axis) = x(axis) + (m / 2.0 - i) * h;
    acc += (i % 2 ? -binom : binom) * mixed_difference(u, y, alpha, h, axis + 1);
    binom = binom * (m - i) / (i + 1);
  }
  return acc / std::pow(h, m);
}

}  // namespace

void for_each_grid_point(const Box& box, int grid, const std::function<void(const VectorXd&)>& visit) {
  const int d = box.dim();
  std::vector<int> idx(d, 0);
  VectorXd x(d);
  while (true) {
    for (int a = 0; a < d; ++a) x(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * idx[a] / grid;
    visit(x);
    int a = 0;
    while (a < d && ++idx[a] > grid) idx[a++] = 0;
    if (a == d) break;
  }
}

double sup_error(const ScalarFn& f, const ScalarFn& g, const Box& box, int grid) {
  check_grid(grid);
  double worst = 0.0;
  for_each_grid_point(box, grid, [&](const VectorXd& x) { worst = std::max(worst, std::abs(f(x) - g(x))); });
  return worst;
}

double sobolev_error(const ScalarFn& f, const ScalarFn& g, int k, const Box& box, int grid, double fd_step) {
  check_grid(grid);
  if (k < 0) throw std::invalid_argument("sobolev_error: k must be >= 0");
  const double h = fd_step > 0 ? fd_step : 1e-3 * box.extent();
  Box inner{box.lo.array() + k * h, box.hi.array() - k * h};
  if ((inner.hi - inner.lo).minCoeff() <= 0) throw std::invalid_argument("sobolev_error: fd_step too large for box");
  const ScalarFn u = [&](const VectorXd& x) { return f(x) - g(x); };
  const auto orders = orders_up_to(box.dim(), k);
  double worst = 0.0;
  for_each_grid_point(inner, grid, [&](const VectorXd& x) {
    for (const auto& alpha : orders) worst = std::max(worst, std::abs(mixed_difference(u, x, alpha, h, 0)));
  });
  return worst;
}

Sampler uniform_sampler(const Box& box) {
  return [box](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    VectorXd x(box.dim());
    for (int a = 0; a < box.dim(); ++a) x(a) = box.lo(a) + (box.hi(a) - box.lo(a)) * U(rng);
    return x;
  };
}

MatchResult exact_match(const VectorFn& f, const VectorFn& g, const Sampler& sampler, int n_samples, double tol,
                        const Exclusion& exclude, std::uint64_t seed) {
  if (!(tol > 0)) throw std::invalid_argument("exact_match: tol must be positive");
  std::mt19937_64 rng(seed);
  MatchResult r;
  for (int i = 0; i < n_samples; ++i) {
    VectorXd x = sampler(rng);
    if (exclude && exclude(x)) {
      ++r.excluded;
      continue;
    }
    ++r.checked;
    const VectorXd fx = f(x), gx = g(x);
    const double diff = fx.size() == gx.size() ? (fx - gx).cwiseAbs().maxCoeff() : std::numeric_limits<double>::infinity();
    if (!(diff < tol)) r.pass = false;
    if (r.worst_x.size() == 0 || !(diff <= r.worst)) {
      r.worst = std::isnan(diff) ? std::numeric_limits<double>::infinity() : diff;
      r.worst_x = x;
    }
  }
  return r;
}

double reduced_ln_value(const std::array<double, 6>& prm, double x) {
  const auto& [a, b, c, e, g, b0] = prm;
  const double q = c * x * x + 2 * e * x + g;
  if (!(q > 0)) return b0;
  return (a * x + b) / std::sqrt(q) + b0;
}

namespace {

constexpr double kGolden = 0.6180339887498949;

struct Grid31 {
  std::vector<double> x, target;
  explicit Grid31(int grid) {
    check_grid(grid);
    for (int i = 0; i <= grid; ++i) {
      x.push_back(-2.0 + 4.0 * i / grid);
      target.push_back(std::cos(std::numbers::pi * x.back()));
    }
  }
};

// θ = (a, b, u1, u2, t, b0) with c = u1², g = u2², e = u1 u2 cos t, so cg >= e² by construction.
std::array<double, 6> to_reduced(const std::array<double, 6>& th) {
  return {th[0], th[1], th[2] * th[2], th[2] * th[3] * std::cos(th[4]), th[3] * th[3], th[5]};
}

double smooth_objective(const Grid31& G, const std::array<double, 6>& th) {
  const auto prm = to_reduced(th);
  double worst = 0.0;
  for (std::size_t i = 0; i < G.x.size(); ++i) worst = std::max(worst, std::abs(reduced_ln_value(prm, G.x[i]) - G.target[i]));
  return worst;
}

// Best constants on each side of t are the midranges; the value at x = t is their average.
double sign_objective(const Grid31& G, double t) {
  double lmin = 1e300, lmax = -1e300, rmin = 1e300, rmax = -1e300;
  for (std::size_t i = 0; i < G.x.size(); ++i) {
    if (G.x[i] < t) lmin = std::min(lmin, G.target[i]), lmax = std::max(lmax, G.target[i]);
    else if (G.x[i] > t) rmin = std::min(rmin, G.target[i]), rmax = std::max(rmax, G.target[i]);
  }
  const bool has_l = lmin <= lmax, has_r = rmin <= rmax;
  const double left = has_l ? 0.5 * (lmin + lmax) : (has_r ? 0.5 * (rmin + rmax) : 0.0);
  const double right = has_r ? 0.5 * (rmin + rmax) : left;
  double worst = 0.0;
  for (std::size_t i = 0; i < G.x.size(); ++i) {
    const double v = G.x[i] < t ? left : (G.x[i] > t ? right : 0.5 * (left + right));
    worst = std::max(worst, std::abs(v - G.target[i]));
  }
  return worst;
}

template <typename F>
double golden_min(F&& f, double lo, double hi, int iters, double& arg) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - kGolden * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + kGolden * (b - a), f2 = f(x2);
    }
  }
  arg = f1 < f2 ? x1 : x2;
  return std::min(f1, f2);
}

}  // namespace

NegSearchResult theorem31_search(int restarts, int refine_iters, int grid, std::uint64_t seed) {
  if (restarts < 1 || refine_iters < 0) throw std::invalid_argument("theorem31_search: bad budget");
  const Grid31 G(grid);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> Ua(-5, 5), Uu(0, 5), Ut(0, std::numbers::pi), Ub(-2, 2), Ubp(-2.5, 2.5);
  constexpr int kLineIters = 10;
  NegSearchResult out;
  out.best_smooth = out.best_sign = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::array<double, 6> th = {Ua(rng), Ua(rng), Uu(rng), Uu(rng), Ut(rng), Ub(rng)};
    double val = smooth_objective(G, th);
    // coordinate-wise golden-section polish; refine_iters counts golden steps
    double radius = 1.0;
    for (int used = 0, coord = 0; used < refine_iters; coord = (coord + 1) % 6) {
      const int iters = std::min(kLineIters, refine_iters - used);
      used += iters;
      double arg;
      auto line = [&](double v) {
        auto t = th;
        t[coord] = v;
        return smooth_objective(G, t);
      };
      const double got = golden_min(line, th[coord] - radius, th[coord] + radius, iters, arg);
      if (got < val) val = got, th[coord] = arg;
      if (coord == 5) radius *= 0.5;
    }
    if (val < out.best_smooth) out.best_smooth = val, out.smooth_params = to_reduced(th);

    double t = Ubp(rng);
    double sval = sign_objective(G, t);
    double arg;
    const double polished = golden_min([&](double v) { return sign_objective(G, v); }, t - 0.5, t + 0.5,
                                       std::max(1, refine_iters / 20), arg);
    if (polished < sval) sval = polished, t = arg;
    if (sval < out.best_sign) out.best_sign = sval, out.sign_breakpoint = t;
  }
  out.best = std::min(out.best_smooth, out.best_sign);
  return out;
}

nlohmann::json ApproxReport::to_json() const {
  nlohmann::json j;
  j["box"] = {{"lo", std::vector<double>(box.lo.data(), box.lo.data() + box.lo.size())},
              {"hi", std::vector<double>(box.hi.data(), box.hi.data() + box.hi.size())}};
  j["grid"] = grid;
  j["fd_step"] = fd_step;
  j["linf"] = linf;
  for (const auto& [k, v] : wk) j["wk"][std::to_string(k)] = v;
  for (const auto& [k, v] : bounds) j["bounds"][k] = v;
  j["meta"] = meta;
  j["wall_seconds"] = wall_seconds;
  return j;
}

}  // namespace normnet
