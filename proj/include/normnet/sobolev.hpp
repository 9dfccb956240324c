#pragma once

#include "normnet/netir.hpp"
#include "normnet/verify.hpp"

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace normnet {

using MultiIndex = std::vector<int>;

// binom(n+d-1, n)
long long multi_index_count(int n, int d);
// All β with |β| = n, in descending lexicographic order; position in this list is ι(β).
std::vector<MultiIndex> multi_indices(int n, int d);
double multinomial(const MultiIndex& beta);
double binomial(int n, int k);

struct MultiIndexPoly {
  int d = 1;
  std::map<MultiIndex, double> coef;

  int degree() const;
  double eval(const Eigen::VectorXd& x) const;
  double abs_sum() const;
};

// Smallest element of S_{p,q} = {p/q + p j} that is >= n.
int exponent_ceiling(int p, int q, int n);
// Width of the all-monomials net reaching degree n.
int monomial_block_width(int p, int q, int n);

struct VandermondeCoeffs {
  Eigen::VectorXd c;      // weights on nodes β_k = k - p/2
  std::vector<double> A;  // A_ℓ = Σ c_k β_k^{m_t-ℓ}, ℓ = 0..m_t
  double residual = 0.0;
};

VandermondeCoeffs vandermonde_coeffs(int t, int m_t, int p);

// W^{k,∞} constants with error <= C h^2 for the finite-difference monomial net on [-M, M].
// The first is the crude global one; the second replaces A(p,q,n+2) by a sup of
// |φ^{(n+2)}| over [-1/2, 1/2] and keeps the exact moment sum.
double fd_constant_paper(int p, int q, int k, int n, double M);
double fd_constant_sharp(int p, int q, int k, int n, double M);

Net build_monomial_fd_net(int n, double h, int p, int q, double M);

struct AllMonomialsNet {
  Net net;
  double h = 0.0;
  double eta = 0.0;         // per finite-difference block
  double error_factor = 0;  // C(p,s): E_t <= error_factor * eta
  double domain = 0.0;      // M + p/2
  double rounding_floor = 0.0;  // unit roundoff times the largest output-row weight sum
  std::vector<int> m_t;
};

AllMonomialsNet build_all_monomials_net_detailed(int s, int p, int q, double eps, double M, int k);
Net build_all_monomials_net(int s, int p, int q, double eps, double M, int k);

struct MultivariateMonomialsNet {
  Net net;
  std::vector<MultiIndex> indices;
  std::vector<Eigen::VectorXi> directions;
  Eigen::MatrixXd coeffs;  // ω^β = Σ_i coeffs(β, i) (c_i·ω)^n
  double residual = 0.0;
  double inner_eps = 0.0;
  int degree_used = 0;
};

MultivariateMonomialsNet build_multivariate_monomials_net_detailed(int n, int d, int p, int q, double eps, double M,
                                                                   int k);
Net build_multivariate_monomials_net(int n, int d, int p, int q, double eps, double M, int k);
Net build_multiplication_net(int d, int p, int q, double eps, double M, int k);

struct PartitionParams {
  int d = 1, N = 1, k = 0;
  double eps = 0.0, alpha = 0.0, R = 0.0;
  int p = 2, q = 2;
};

// Monotonicity threshold for |φ^{(m)}|, 1 <= m <= k, on a geometric grid of [1, 1e6].
double monotonicity_threshold(int p, int q, int k);
PartitionParams choose_alpha(int d, int N, int k, double eps, int p, int q);

struct AlphaCheck {
  bool ok = true;
  double ratio = 0.0;       // α/N
  double tail = 0.0;        // 1 - φ(α/N)
  double worst_deriv = 0.0; // max_m α^m |φ^{(m)}(α/N)|
};
AlphaCheck check_alpha(const PartitionParams& params);

double partition_rho(int j, int N, double alpha, int p, int q, double y);
double partition_phi(const std::vector<int>& j, int N, double alpha, int p, int q, const Eigen::VectorXd& x);

struct PartitionDiagnostics {
  double telescoping = 0.0;   // max |Σ_j ρ_j - 1|
  double near_worst = 0.0;    // max over cubes of the near-sum deviation
  double near_bound = 0.0;    // 2^{dk} d ε
  double far_worst = 0.0;     // max over cubes and ‖v‖∞ >= 2 of sup |Φ_{j+v}|
  double far_bound = 0.0;     // ε
  int cubes = 0;
  bool pass() const { return near_worst <= near_bound && far_worst <= far_bound; }
};

PartitionDiagnostics partition_diagnostics(const PartitionParams& params, int grid, double fd_step = -1);

struct SobolevTarget {
  std::string name;
  int d = 1;
  std::function<double(const Eigen::VectorXd&, const MultiIndex&)> deriv;
  std::function<double(int)> norm;  // ‖f‖_{W^{m,∞}([0,1]^d)}

  double operator()(const Eigen::VectorXd& x) const { return deriv(x, MultiIndex(d, 0)); }
};

// sin2pi: ∏ sin(2π x_i); exp: exp(Σ x_i - d); constant: c.
SobolevTarget named_target(const std::string& name, int d, double c = 1.0);

struct SobolevSpec {
  int d = 1, s = 2, k = 0, N = 4;
  double delta = 0.5;
  int p = 2, q = 2;
};

struct SobolevApproximator {
  Net net;
  double C1 = 0.0;       // C1(d, k, s)
  double C1_0 = 0.0;     // C1(d, 0, s)
  double C4 = 0.0;
  double eta = 0.0, eps = 0.0, h = 0.0;
  double eta_mono = 0.0;
  double mult_domain = 0.0;
  PartitionParams partition;
  int width1 = 0, width2 = 0;
  int width1_bound = 0, width2_bound = 0;
  double linf_bound = 0.0, wk_bound = 0.0;
};

void check_sobolev_spec(const SobolevSpec& spec);
SobolevApproximator build_sobolev_approximator(const SobolevTarget& f, const SobolevSpec& spec);

// PLN hidden widths n_s(3⌈s/2⌉|P_{s-1,d+1}| + d(N-1)) and 3 n_s ⌈(d+2)/2⌉ |P_{d+1,d+1}| N^d.
std::pair<long long, long long> sobolev_pln_width_bound(int d, int s, int N, int ns);
Net compile_sobolev_to_pln(const Net& phi_net, int ns);

std::vector<ApproxReport> sobolev_rate_report(const SobolevTarget& f, SobolevSpec spec, const std::vector<int>& Ns,
                                              int grid, double fd_step = -1);

}  // namespace normnet
