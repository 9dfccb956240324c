#include "normnet/sobolev.hpp"

#include "normnet/construct.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace normnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Activation phi_act(int p, int q) { return Activation{ActivationKind::PhiPQ, p, q}; }

double ipow(double x, int n) { return detail::ipow(x, n); }

double factorial(int n) { return std::tgamma(n + 1.0); }

// Odometer over {lo..hi}^d, first coordinate most significant.
template <typename F>
void for_each_tuple(int d, int lo, int hi, F&& visit) {
  std::vector<int> t(d, lo);
  while (true) {
    visit(t);
    int i = d - 1;
    while (i >= 0 && t[i] == hi) t[i--] = lo;
    if (i < 0) return;
    ++t[i];
  }
}

double moment(int n, int e) {
  double acc = 0;
  for (int i = 0; i <= n; ++i) acc += binomial(n, i) * std::pow(std::abs(0.5 * n - i), e);
  return acc;
}

// sup of |φ^{(m)}| over [-1/2, 1/2] from a fine grid, with a small safety factor.
double local_derivative_sup(const PhiDerivativeTable& T, int m) {
  const int G = 4000;
  double best = 0;
  for (int i = 0; i <= G; ++i) best = std::max(best, std::abs(T.eval(m, -0.5 + double(i) / G)));
  return 1.05 * best;
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  long double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<double>(std::round(r));
}

long long multi_index_count(int n, int d) {
  if (n < 0 || d < 1) throw std::invalid_argument("multi_index_count: need n >= 0 and d >= 1");
  long long r = 1;
  for (int i = 1; i < d; ++i) r = r * (n + i) / i;
  return r;
}

std::vector<MultiIndex> multi_indices(int n, int d) {
  if (n < 0 || d < 1) throw std::invalid_argument("multi_indices: need n >= 0 and d >= 1");
  if (d == 1) return {MultiIndex{n}};
  std::vector<MultiIndex> out;
  for (int first = n; first >= 0; --first) {
    for (auto& rest : multi_indices(n - first, d - 1)) {
      MultiIndex b{first};
      b.insert(b.end(), rest.begin(), rest.end());
      out.push_back(std::move(b));
    }
  }
  return out;
}

double multinomial(const MultiIndex& beta) {
  double r = 1;
  int sum = 0;
  for (int b : beta) {
    sum += b;
    r *= binomial(sum, b);
  }
  return r;
}

int MultiIndexPoly::degree() const {
  int deg = 0;
  for (const auto& [b, c] : coef)
    if (c != 0.0) deg = std::max(deg, std::accumulate(b.begin(), b.end(), 0));
  return deg;
}

double MultiIndexPoly::eval(const VectorXd& x) const {
  double acc = 0;
  for (const auto& [b, c] : coef) {
    double term = c;
    for (int i = 0; i < d; ++i) term *= ipow(x(i), b[i]);
    acc += term;
  }
  return acc;
}

double MultiIndexPoly::abs_sum() const {
  double acc = 0;
  for (const auto& [b, c] : coef) acc += std::abs(c);
  return acc;
}

int exponent_ceiling(int p, int q, int n) {
  check_pq(p, q);
  const int r = p / q;
  if (n <= r) return r;
  return r + p * ((n - r + p - 1) / p);
}

int monomial_block_width(int p, int q, int n) { return (p + 1) * (exponent_ceiling(p, q, n) + 1) / 2; }

VandermondeCoeffs vandermonde_coeffs(int t, int m_t, int p) {
  if (p < 0 || p % 2 != 0) throw std::invalid_argument("vandermonde_coeffs: p must be even and nonnegative");
  if (t < 0 || m_t - t < 0 || m_t - t > p) throw std::invalid_argument("vandermonde_coeffs: need 0 <= m_t - t <= p");
  using LD = long double;
  using MatL = Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic>;
  using VecL = Eigen::Matrix<LD, Eigen::Dynamic, 1>;
  const int n = p + 1;
  MatL V(n, n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) V(l, k) = detail::ipow(static_cast<LD>(k - p / 2), l);
  VecL e = VecL::Zero(n);
  e(m_t - t) = 1;
  const VecL c = V.fullPivLu().solve(e);
  VandermondeCoeffs out;
  out.residual = static_cast<double>((V * c - e).cwiseAbs().maxCoeff());
  if (!(out.residual < 1e-10)) throw std::logic_error("vandermonde_coeffs: singular Vandermonde system");
  out.c = c.cast<double>();
  out.A.assign(m_t + 1, 0.0);
  for (int l = 0; l <= m_t; ++l) {
    LD acc = 0;
    for (int k = 0; k < n; ++k) acc += c(k) * detail::ipow(static_cast<LD>(k - p / 2), m_t - l);
    out.A[l] = static_cast<double>(acc);
  }
  return out;
}

double fd_constant_paper(int p, int q, int k, int n, double M) {
  const double C1 = derivative_bound_A(p, q, n + 2) * std::pow(2.0, n) * std::pow(0.5 * n, n + 2);
  return C1 * std::pow(M, n + 2) + derivative_bound_A(p, q, k) * std::pow(2.0, n) * std::pow(0.5 * n, k);
}

double fd_constant_sharp(int p, int q, int k, int n, double M) {
  const PhiDerivativeTable T(p, q, std::max(n + 2, k));
  const double phi0 = std::abs(phi_derivative_at_zero(p, q, n));
  const double top = local_derivative_sup(T, n + 2) * moment(n, n + 2) / phi0;
  double K = 0;
  for (int m = 0; m <= k; ++m) {
    if (m <= n + 1)
      K = std::max(K, top * std::pow(M, n + 2 - m) / factorial(n + 2 - m));
    else  // y^n has no m-th derivative left; needs h <= 1
      K = std::max(K, local_derivative_sup(T, m) * moment(n, m) / phi0);
  }
  return K;
}

Net build_monomial_fd_net(int n, double h, int p, int q, double M) {
  check_pq(p, q);
  if (!in_exponent_set(p, q, n) || n % 2 == 0) throw std::invalid_argument("build_monomial_fd_net: n must lie in S_{p,q}");
  if (!(h > 0) || !(M > 0)) throw std::invalid_argument("build_monomial_fd_net: h and M must be positive");
  if (0.5 * n * h * M > 0.5 * (1 + 1e-12)) throw std::invalid_argument("build_monomial_fd_net: need (n/2) h M <= 1/2");
  const int J = (n + 1) / 2;
  MatrixXd W1(J, 1), W2(1, J);
  const double scale = 2.0 / (phi_derivative_at_zero(p, q, n) * std::pow(h, n));
  for (int j = 0; j < J; ++j) {
    const int i = (n - 1) / 2 - j;
    W1(j, 0) = (j + 0.5) * h;
    W2(0, j) = scale * (i % 2 ? -1.0 : 1.0) * binomial(n, i);
  }
  return Net({Affine(W1, VectorXd::Zero(J)), Affine(W2, VectorXd::Zero(1))}, {phi_act(p, q)});
}

AllMonomialsNet build_all_monomials_net_detailed(int s, int p, int q, double eps, double M, int k) {
  check_pq(p, q);
  if (!in_exponent_set(p, q, s)) throw std::invalid_argument("build_all_monomials_net: s must lie in S_{p,q}");
  if (!(eps > 0) || !(M > 0) || k < 0) throw std::invalid_argument("build_all_monomials_net: bad eps, M or k");
  AllMonomialsNet out;
  out.domain = M + p / 2;
  const int K = p + 1;

  // y^t = Σ g(m, k) f_m(y + β_k) + cst
  struct Expansion {
    MatrixXd g;
    double cst = 0;
  };
  std::vector<Expansion> ex(s + 1, Expansion{MatrixXd::Zero(s + 1, K), 0.0});
  std::vector<double> err(s + 1, 0.0);
  ex[0].cst = 1.0;
  out.m_t.assign(s + 1, 0);
  for (int t = 1; t <= s; ++t) {
    const int m = exponent_ceiling(p, q, t);
    out.m_t[t] = m;
    VandermondeCoeffs vc;
    if (m == t) {
      vc.c = VectorXd::Zero(K);
      vc.c(p / 2) = 1.0;
      vc.A.assign(m + 1, 0.0);
    } else {
      vc = vandermonde_coeffs(t, m, p);
    }
    const double inv = 1.0 / binomial(m, t);
    ex[t].g.row(m) += inv * vc.c.transpose();
    double e = vc.c.cwiseAbs().sum();
    for (int l = 0; l < t; ++l) {
      const double w = binomial(m, l) * vc.A[l];
      if (w == 0.0) continue;
      ex[t].g -= inv * w * ex[l].g;
      ex[t].cst -= inv * w * ex[l].cst;
      e += std::abs(w) * err[l];
    }
    err[t] = inv * e;
  }
  out.error_factor = *std::max_element(err.begin(), err.end());
  out.eta = eps / out.error_factor;

  double h = std::min(1.0, 1.0 / (s * out.domain));
  for (int m = p / q; m <= s; m += p) h = std::min(h, std::sqrt(out.eta / fd_constant_sharp(p, q, k, m, out.domain)));
  out.h = h;

  const int J = (s + 1) / 2;
  MatrixXd W1(K * J, 1), W2 = MatrixXd::Zero(s + 1, K * J);
  VectorXd b1(K * J), b2(s + 1);
  for (int kk = 0; kk < K; ++kk)
    for (int j = 0; j < J; ++j) {
      W1(kk * J + j, 0) = (j + 0.5) * h;
      b1(kk * J + j) = (j + 0.5) * h * (kk - p / 2);
    }
  for (int t = 0; t <= s; ++t) {
    b2(t) = ex[t].cst;
    for (int m = 1; m <= s; m += 2) {
      if (ex[t].g.row(m).isZero(0)) continue;
      const double scale = 2.0 / (phi_derivative_at_zero(p, q, m) * std::pow(h, m));
      for (int kk = 0; kk < K; ++kk) {
        const double g = ex[t].g(m, kk);
        if (g == 0.0) continue;
        for (int i = 0; i <= (m - 1) / 2; ++i) {
          const int j = (m - 1) / 2 - i;
          W2(t, kk * J + j) += g * scale * (i % 2 ? -1.0 : 1.0) * binomial(m, i);
        }
      }
    }
  }
  out.rounding_floor = std::numeric_limits<double>::epsilon() * W2.cwiseAbs().rowwise().sum().maxCoeff();
  out.net = Net({Affine(W1, b1), Affine(W2, b2)}, {phi_act(p, q)});
  return out;
}

Net build_all_monomials_net(int s, int p, int q, double eps, double M, int k) {
  return build_all_monomials_net_detailed(s, p, q, eps, M, k).net;
}

namespace {

MultivariateMonomialsNet multivariate_impl(int n, int d, int p, int q, double eps, double M, int k, int only_row) {
  check_pq(p, q);
  if (d < 1 || n < 0) throw std::invalid_argument("build_multivariate_monomials_net: need n >= 0 and d >= 1");
  if (!(eps > 0) || !(M > 0) || k < 0) throw std::invalid_argument("build_multivariate_monomials_net: bad eps, M or k");
  MultivariateMonomialsNet out;
  out.indices = multi_indices(n, d);
  const int P = static_cast<int>(out.indices.size());
  const int rows = only_row >= 0 ? 1 : P;

  if (n == 0) {
    out.coeffs = MatrixXd::Ones(1, 1);
    out.inner_eps = eps;
    out.net = Net({Affine(MatrixXd(0, d), VectorXd(0)), Affine(MatrixXd(1, 0), VectorXd::Ones(1))}, {phi_act(p, q)});
    return out;
  }

  // greedy: keep c only if its row of E raises the rank
  auto row_of = [&](const std::vector<int>& c) {
    VectorXd r(P);
    for (int b = 0; b < P; ++b) {
      double v = multinomial(out.indices[b]);
      for (int i = 0; i < d; ++i) v *= ipow(c[i], out.indices[b][i]);
      r(b) = v;
    }
    return r;
  };
  std::vector<VectorXd> basis;
  MatrixXd E(P, P);
  for_each_tuple(d, 0, n, [&](const std::vector<int>& c) {
    if (static_cast<int>(basis.size()) == P) return;
    int g = 0;
    for (int v : c) g = std::gcd(g, v);
    if (g != 1) return;
    const VectorXd row = row_of(c);
    VectorXd r = row;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) r -= r.dot(b) * b;
    if (r.norm() <= 1e-9 * row.norm()) return;
    E.row(static_cast<Eigen::Index>(basis.size())) = row.transpose();
    basis.push_back(r / r.norm());
    out.directions.push_back(Eigen::Map<const Eigen::VectorXi>(c.data(), d));
  });
  if (static_cast<int>(basis.size()) != P) throw std::logic_error("build_multivariate_monomials_net: direction set is rank deficient");

  out.coeffs = E.fullPivLu().inverse();
  out.residual = (out.coeffs * E - MatrixXd::Identity(P, P)).cwiseAbs().maxCoeff();
  if (!(out.residual < 1e-8)) throw std::logic_error("build_multivariate_monomials_net: linear solve residual too large");

  // (c·ω)^n = R^n u^n with u = c·ω / R in [-1, 1]
  VectorXd R(P), gain(P);
  for (int i = 0; i < P; ++i) {
    const auto& c = out.directions[i];
    R(i) = c.cwiseAbs().sum() * M;
    double g = 0;
    for (int m = 0; m <= k; ++m) g = std::max(g, std::pow(c.cwiseAbs().maxCoeff() / R(i), m));
    gain(i) = std::pow(R(i), n) * g;
  }
  double denom = 0;
  for (int b = 0; b < P; ++b) {
    if (only_row >= 0 && b != only_row) continue;
    denom = std::max(denom, (out.coeffs.row(b).cwiseAbs().transpose().cwiseProduct(gain)).sum());
  }
  out.inner_eps = eps / denom;
  out.degree_used = exponent_ceiling(p, q, n);
  const AllMonomialsNet U = build_all_monomials_net_detailed(out.degree_used, p, q, out.inner_eps, 1.0, k);
  const Affine& U1 = U.net.affine(0);
  const Affine& U2 = U.net.affine(1);
  const Eigen::Index H = U1.out_dim();

  MatrixXd W1(P * H, d), W2 = MatrixXd::Zero(rows, P * H);
  VectorXd b1(P * H), b2 = VectorXd::Zero(rows);
  for (int i = 0; i < P; ++i) {
    W1.middleRows(i * H, H) = U1.W * (out.directions[i].cast<double>().transpose() / R(i));
    b1.segment(i * H, H) = U1.b;
    const double Rn = std::pow(R(i), n);
    for (int r = 0; r < rows; ++r) {
      const int b = only_row >= 0 ? only_row : r;
      const double a = out.coeffs(b, i) * Rn;
      W2.block(r, i * H, 1, H) = a * U2.W.row(n);
      b2(r) += a * U2.b(n);
    }
  }
  out.net = Net({Affine(W1, b1), Affine(W2, b2)}, {phi_act(p, q)});
  return out;
}

}  // namespace

MultivariateMonomialsNet build_multivariate_monomials_net_detailed(int n, int d, int p, int q, double eps, double M,
                                                                   int k) {
  return multivariate_impl(n, d, p, q, eps, M, k, -1);
}

Net build_multivariate_monomials_net(int n, int d, int p, int q, double eps, double M, int k) {
  return multivariate_impl(n, d, p, q, eps, M, k, -1).net;
}

Net build_multiplication_net(int d, int p, int q, double eps, double M, int k) {
  if (d < 1) throw std::invalid_argument("build_multiplication_net: d must be positive");
  const auto idx = multi_indices(d, d);
  const int row = static_cast<int>(std::find(idx.begin(), idx.end(), MultiIndex(d, 1)) - idx.begin());
  return multivariate_impl(d, d, p, q, eps, M, k, row).net;
}

double monotonicity_threshold(int p, int q, int k) {
  check_pq(p, q);
  if (k < 0) throw std::invalid_argument("monotonicity_threshold: negative k");
  const int G = 4000;
  std::vector<double> xs(G + 1);
  for (int i = 0; i <= G; ++i) xs[i] = std::pow(10.0, 6.0 * i / G);
  int start = 0;
  if (k >= 1) {
    const PhiDerivativeTable T(p, q, k);
    for (int m = 1; m <= k; ++m) {
      double prev = std::abs(T.eval(m, xs[0]));
      for (int i = 1; i <= G; ++i) {
        const double cur = std::abs(T.eval(m, xs[i]));
        if (cur > prev) start = std::max(start, i);
        prev = cur;
      }
    }
  }
  return 1.1 * xs[start];
}

PartitionParams choose_alpha(int d, int N, int k, double eps, int p, int q) {
  check_pq(p, q);
  if (!(eps > 0 && eps < 0.25)) throw std::invalid_argument("choose_alpha: eps must lie in (0, 1/4)");
  if (d < 1 || N < 1 || k < 0) throw std::invalid_argument("choose_alpha: need d, N >= 1 and k >= 0");
  PartitionParams P{d, N, k, eps, 0.0, monotonicity_threshold(p, q, k), p, q};
  double m = std::max(P.R, std::pow(1.0 / (q * eps), 1.0 / p));
  if (k >= 1) m = std::max(m, std::pow(derivative_bound_A(p, q, k) * std::pow(N, k) / eps, double(q) / p));
  P.alpha = N * m;
  return P;
}

AlphaCheck check_alpha(const PartitionParams& P) {
  AlphaCheck c;
  c.ratio = P.alpha / P.N;
  c.tail = 1.0 - phi_pq(P.p, P.q, c.ratio);
  if (P.k >= 1) {
    const PhiDerivativeTable T(P.p, P.q, P.k);
    for (int m = 1; m <= P.k; ++m) c.worst_deriv = std::max(c.worst_deriv, std::pow(P.alpha, m) * std::abs(T.eval(m, c.ratio)));
  }
  c.ok = c.ratio >= P.R * (1 - 1e-12) && c.tail <= P.eps && c.worst_deriv <= P.eps;
  return c;
}

double partition_rho(int j, int N, double alpha, int p, int q, double y) {
  if (N < 1 || j < 1 || j > N) throw std::invalid_argument("partition_rho: index out of range");
  if (N == 1) return 1.0;
  auto u = [&](int i) { return phi_pq(p, q, alpha * (y - double(i) / N)); };
  if (j == 1) return 0.5 - 0.5 * u(1);
  if (j == N) return 0.5 * u(N - 1) + 0.5;
  return 0.5 * u(j - 1) - 0.5 * u(j);
}

double partition_phi(const std::vector<int>& j, int N, double alpha, int p, int q, const VectorXd& x) {
  if (static_cast<Eigen::Index>(j.size()) != x.size()) throw std::invalid_argument("partition_phi: dimension mismatch");
  double r = 1;
  for (std::size_t i = 0; i < j.size(); ++i) r *= partition_rho(j[i], N, alpha, p, q, x(i));
  return r;
}

PartitionDiagnostics partition_diagnostics(const PartitionParams& P, int grid, double fd_step) {
  PartitionDiagnostics D;
  const int d = P.d, N = P.N;
  const int G = 10000;
  for (int i = 0; i <= G; ++i) {
    const double y = -0.5 + 2.0 * i / G;
    double sum = 0;
    for (int j = 1; j <= N; ++j) sum += partition_rho(j, N, P.alpha, P.p, P.q, y);
    D.telescoping = std::max(D.telescoping, std::abs(sum - 1.0));
  }
  D.near_bound = std::pow(2.0, d * P.k) * d * P.eps;
  D.far_bound = P.k == 0 ? P.eps : std::pow(P.alpha, P.k) * derivative_bound_A(P.p, P.q, P.k) * P.eps;
  const ScalarFn one = [](const VectorXd&) { return 1.0; };
  const ScalarFn zero = [](const VectorXd&) { return 0.0; };
  for_each_tuple(d, 1, N, [&](const std::vector<int>& j) {
    Box box{VectorXd(d), VectorXd(d)};
    for (int i = 0; i < d; ++i) box.lo(i) = (j[i] - 1.0) / N, box.hi(i) = double(j[i]) / N;
    std::vector<std::vector<int>> near, far;
    for_each_tuple(d, 1, N, [&](const std::vector<int>& t) {
      int dist = 0;
      for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(t[i] - j[i]));
      (dist <= 1 ? near : far).push_back(t);
    });
    const ScalarFn near_sum = [&](const VectorXd& x) {
      double acc = 0;
      for (const auto& t : near) acc += partition_phi(t, N, P.alpha, P.p, P.q, x);
      return acc;
    };
    D.near_worst = std::max(D.near_worst, sobolev_error(near_sum, one, P.k, box, grid, fd_step));
    for (const auto& t : far) {
      const ScalarFn term = [&](const VectorXd& x) { return partition_phi(t, N, P.alpha, P.p, P.q, x); };
      D.far_worst = std::max(D.far_worst, sobolev_error(term, zero, P.k, box, grid, fd_step));
    }
    ++D.cubes;
  });
  return D;
}

SobolevTarget named_target(const std::string& name, int d, double c) {
  if (d < 1) throw std::invalid_argument("named_target: d must be positive");
  SobolevTarget t;
  t.name = name;
  t.d = d;
  if (name == "sin2pi") {
    const double w = 2.0 * M_PI;
    t.deriv = [w](const VectorXd& x, const MultiIndex& b) {
      double r = 1;
      for (Eigen::Index i = 0; i < x.size(); ++i) r *= std::pow(w, b[i]) * std::sin(w * x(i) + b[i] * M_PI / 2);
      return r;
    };
    t.norm = [w](int m) { return std::pow(w, m); };
  } else if (name == "exp") {
    t.deriv = [d](const VectorXd& x, const MultiIndex&) { return std::exp(x.sum() - d); };
    t.norm = [](int) { return 1.0; };
  } else if (name == "constant") {
    t.deriv = [c](const VectorXd&, const MultiIndex& b) {
      return std::all_of(b.begin(), b.end(), [](int v) { return v == 0; }) ? c : 0.0;
    };
    t.norm = [c](int) { return std::abs(c); };
  } else {
    throw std::invalid_argument("named_target: unknown target '" + name + "'");
  }
  return t;
}

void check_sobolev_spec(const SobolevSpec& S) {
  if (S.d < 1 || S.s < 1) throw std::invalid_argument("sobolev: need d >= 1 and s >= 1");
  if (S.k < 0 || S.k >= S.s) throw std::invalid_argument("sobolev: need 0 <= k < s");
  if (!valid_pq(S.p, S.q)) throw std::invalid_argument("sobolev: invalid (p, q)");
  if (!(S.N > 1.5 * S.d) || S.N < 2) throw std::invalid_argument("sobolev: condition N > 3d/2 violated");
  if (!(S.delta > 0)) throw std::invalid_argument("sobolev: delta must be positive");
  if (S.k >= 1) {
    const double r = double(S.p) / S.q;
    if (!(r > double(S.k) * (S.s + S.d + S.k) / (S.s - S.k)))
      throw std::invalid_argument("sobolev: condition r > k(s+d+k)/(s-k) violated");
    if (S.delta > 6) throw std::invalid_argument("sobolev: condition delta <= 6 violated");
  }
}

SobolevApproximator build_sobolev_approximator(const SobolevTarget& f, const SobolevSpec& S) {
  check_sobolev_spec(S);
  if (f.d != S.d) throw std::invalid_argument("sobolev: target dimension mismatch");
  const int d = S.d, s = S.s, k = S.k, N = S.N, p = S.p, q = S.q;
  const double delta = S.delta;
  const double normS = f.norm(s);
  if (!(normS > 0)) throw std::invalid_argument("sobolev: target has zero W^{s,inf} norm");
  auto C1_at = [&](int l) {
    double c = 0;
    for (int i = 0; i <= l; ++i) c = std::max(c, std::pow(1.5 * d, s - i) / factorial(s - i) * normS);
    return c;
  };
  SobolevApproximator out;
  out.C1 = C1_at(k);
  out.C1_0 = C1_at(0);
  const double C1 = out.C1;
  const double Ns = std::pow(N, s), Nd = std::pow(N, d);
  const double fsup = f.norm(0), fk = f.norm(k);
  const double Ak = derivative_bound_A(p, q, k);

  if (k == 0) {
    out.eta = delta * C1 / (6 * Ns);
    double e1 = fsup > 0 ? delta * C1 / (3 * fsup * (d + Nd) * Ns) : 1.0;
    double e2 = delta / 6 * C1 / Ns / ((C1 / Ns + out.eta) * d + Nd * (fsup + C1 + out.eta));
    out.eps = std::min(e1, e2);
  } else {
    out.eta = delta * C1 / (3 * Ns);
    out.eps = std::min(2 * std::pow(3.0, d) * C1 * delta / (Nd * fk), std::pow(3.0, d) * delta / (12 * Ns * Nd));
  }
  out.eps = std::min(out.eps, 0.2);
  out.C4 = out.eps * Ns * Nd / delta;
  out.partition = choose_alpha(d, N, k, out.eps, p, q);
  if (!check_alpha(out.partition).ok) throw std::logic_error("sobolev: alpha conditions fail numerically");
  const double alpha = out.partition.alpha;
  // C_k taken as 1
  const double ak = std::pow(alpha, k) * Ak;
  out.h = C1 * ak / (std::pow(N, s - k) * Nd * std::pow(d + 1.0, d) * std::pow(d, 2 * k) *
                     std::pow(fk + C1 / std::pow(N, s - k) + out.eta + ak, k)) *
          delta / 3;

  // Taylor polynomials at cube centres, in the monomial basis of ω = (1, x)
  const auto gam = multi_indices(s - 1, d + 1);
  std::map<MultiIndex, int> pos;
  for (std::size_t i = 0; i < gam.size(); ++i) pos[gam[i]] = static_cast<int>(i);
  const int P1 = static_cast<int>(gam.size());
  const int cubes = static_cast<int>(Nd);
  MatrixXd coef = MatrixXd::Zero(cubes, P1);
  double sup_bound = 0;
  int J = 0;
  for_each_tuple(d, 1, N, [&](const std::vector<int>& j) {
    VectorXd c(d);
    for (int i = 0; i < d; ++i) c(i) = (j[i] - 0.5) / N;
    double centred = 0;
    for (int deg = 0; deg <= s - 1; ++deg) {
      for (const auto& beta : multi_indices(deg, d)) {
        double t = f.deriv(c, beta);
        for (int b : beta) t /= factorial(b);
        centred += std::abs(t);
        // (x - c)^β expanded in x
        for_each_tuple(d, 0, deg, [&](const std::vector<int>& a) {
          double w = t;
          int tot = 0;
          for (int i = 0; i < d; ++i) {
            if (a[i] > beta[i]) return;
            w *= binomial(beta[i], a[i]) * ipow(-c(i), beta[i] - a[i]);
            tot += a[i];
          }
          MultiIndex g{s - 1 - tot};
          g.insert(g.end(), a.begin(), a.end());
          coef(J, pos.at(g)) += w;
        });
      }
    }
    sup_bound = std::max(sup_bound, centred);
    ++J;
  });
  const double amax = coef.rowwise().lpNorm<1>().maxCoeff();
  out.eta_mono = amax > 0 ? out.eta / amax : out.eta;
  out.mult_domain = std::max(1.0, sup_bound + out.eta);

  const auto mono = build_multivariate_monomials_net_detailed(s - 1, d + 1, p, q, out.eta_mono, 1.0, k);
  const Net X = build_multiplication_net(d + 1, p, q, out.h, out.mult_domain, k);

  const Affine& M1 = mono.net.affine(0);
  const Affine& M2 = mono.net.affine(1);
  const Eigen::Index Hm = M1.out_dim();
  const Eigen::Index H1 = Hm + d * (N - 1);
  MatrixXd W1 = MatrixXd::Zero(H1, d);
  VectorXd b1(H1);
  W1.topRows(Hm) = M1.W.rightCols(d);  // ω = (1, x)
  b1.head(Hm) = M1.b + M1.W.col(0);
  for (int i = 0; i < d; ++i)
    for (int t = 1; t < N; ++t) {
      const Eigen::Index r = Hm + i * (N - 1) + (t - 1);
      W1(r, i) = alpha;
      b1(r) = -alpha * t / N;
    }

  // Z = L h + bz with Z_j = (q_j, ρ_{j_1}(x_1), ..., ρ_{j_d}(x_d))
  const int Z = d + 1;
  MatrixXd L = MatrixXd::Zero(cubes * Z, H1);
  VectorXd bz = VectorXd::Zero(cubes * Z);
  J = 0;
  for_each_tuple(d, 1, N, [&](const std::vector<int>& j) {
    L.block(J * Z, 0, 1, Hm) = coef.row(J) * M2.W;
    bz(J * Z) = coef.row(J).dot(M2.b);
    for (int i = 0; i < d; ++i) {
      const Eigen::Index row = J * Z + 1 + i;
      auto u = [&](int t) { return Hm + i * (N - 1) + (t - 1); };
      if (j[i] == 1) {
        L(row, u(1)) = -0.5;
        bz(row) = 0.5;
      } else if (j[i] == N) {
        L(row, u(N - 1)) = 0.5;
        bz(row) = 0.5;
      } else {
        L(row, u(j[i] - 1)) = 0.5;
        L(row, u(j[i])) = -0.5;
      }
    }
    ++J;
  });
  const Affine& X1 = X.affine(0);
  const Affine& X2 = X.affine(1);
  const Eigen::Index Hx = X1.out_dim();
  MatrixXd W2(cubes * Hx, H1), W3(1, cubes * Hx);
  VectorXd b2(cubes * Hx);
  for (int c = 0; c < cubes; ++c) {
    W2.middleRows(c * Hx, Hx) = X1.W * L.middleRows(c * Z, Z);
    b2.segment(c * Hx, Hx) = X1.W * bz.segment(c * Z, Z) + X1.b;
    W3.middleCols(c * Hx, Hx) = X2.W;
  }
  const VectorXd b3 = VectorXd::Constant(1, cubes * X2.b(0));
  out.net = Net({Affine(W1, b1), Affine(W2, b2), Affine(W3, b3)}, {phi_act(p, q), phi_act(p, q)});

  out.width1 = static_cast<int>(H1);
  out.width2 = static_cast<int>(cubes * Hx);
  out.width1_bound = monomial_block_width(p, q, s - 1) * P1 + d * (N - 1);
  out.width2_bound = monomial_block_width(p, q, d + 1) * static_cast<int>(multi_index_count(d + 1, d + 1)) * cubes;
  out.linf_bound = (1 + delta) * out.C1_0 / Ns;
  out.wk_bound = k == 0 ? out.linf_bound
                        : (1 + delta) * std::pow(2.0, k + 1) * std::pow(3.0, d) * C1 / std::pow(N, s - k) *
                              std::pow(alpha / N, k) * Ak;
  return out;
}

std::pair<long long, long long> sobolev_pln_width_bound(int d, int s, int N, int ns) {
  const long long Nd = static_cast<long long>(std::llround(std::pow(N, d)));
  const long long first = ns * (3LL * ((s + 1) / 2) * multi_index_count(s - 1, d + 1) + d * (N - 1LL));
  const long long second = 3LL * ns * ((d + 3) / 2) * multi_index_count(d + 1, d + 1) * Nd;
  return {first, second};
}

Net compile_sobolev_to_pln(const Net& phi_net, int ns) {
  if (ns < 3) throw std::invalid_argument("compile_sobolev_to_pln: group size must be at least 3");
  if (phi_net.depth() != 2) throw std::invalid_argument("compile_sobolev_to_pln: expected two hidden layers");
  return compile_deep_phi_net_to_pln(phi_net, ns);
}

std::vector<ApproxReport> sobolev_rate_report(const SobolevTarget& f, SobolevSpec spec, const std::vector<int>& Ns,
                                              int grid, double fd_step) {
  std::vector<ApproxReport> rows;
  for (int N : Ns) {
    spec.N = N;
    const auto t0 = std::chrono::steady_clock::now();
    const SobolevApproximator A = build_sobolev_approximator(f, spec);
    ApproxReport r;
    r.box = Box::cube(spec.d, 0.0, 1.0);
    r.grid = grid;
    r.fd_step = fd_step > 0 ? fd_step : 1e-3;
    const ScalarFn target = [&f](const VectorXd& x) { return f(x); };
    const ScalarFn model = scalar_output(A.net);
    r.linf = sup_error(target, model, r.box, grid);
    r.wk[0] = r.linf;
    if (spec.k >= 1) r.wk[spec.k] = sobolev_error(target, model, spec.k, r.box, grid, r.fd_step);
    r.bounds = {{"linf_bound", A.linf_bound}, {"wk_bound", A.wk_bound}, {"C1", A.C1},
                {"C4", A.C4},                 {"eta", A.eta},           {"eps", A.eps},
                {"h", A.h},                   {"alpha", A.partition.alpha}, {"R", A.partition.R},
                {"width1", A.width1},         {"width2", A.width2},     {"width1_bound", A.width1_bound},
                {"width2_bound", A.width2_bound}};
    r.meta = {{"target", f.name}, {"d", spec.d}, {"s", spec.s}, {"k", spec.k},
              {"N", N},           {"delta", spec.delta}, {"p", spec.p}, {"q", spec.q}};
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace normnet
