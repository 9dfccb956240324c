#include "normnet/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace normnet {

bool valid_pq(int p, int q) {
  return q >= 1 && p >= q && p % 2 == 0 && q % 2 == 0 && p % q == 0 && (p / q) % 2 == 1;
}

void check_pq(int p, int q) {
  if (!valid_pq(p, q))
    throw std::invalid_argument("invalid (p,q) = (" + std::to_string(p) + "," + std::to_string(q) +
                                "): need p >= q, both even, p/q odd");
}

PhiDerivativeTable::PhiDerivativeTable(int p, int q, int max_m) : p_(p), q_(q) {
  check_pq(p, q);
  if (max_m < 0) throw std::invalid_argument("PhiDerivativeTable: negative order");
  const int r = p / q;
  // P_m = q^m Q_m, P_{m+1} = q P_m' (1 + x^p) - (m q + 1) p x^{p-1} P_m
  std::vector<long double> P(r + 1, 0);
  P[r] = 1;
  coef_.push_back(P);
  for (int m = 0; m < max_m; ++m) {
    const std::size_t deg = P.size() - 1;
    std::vector<long double> next(deg + p, 0);
    for (std::size_t i = 1; i <= deg; ++i) {
      const long double d = static_cast<long double>(i) * q * P[i];
      next[i - 1] += d;
      next[i - 1 + p] += d;
    }
    const long double k = static_cast<long double>(m * q + 1) * p;
    for (std::size_t i = 0; i <= deg; ++i) next[i + p - 1] -= k * P[i];
    P = std::move(next);
    coef_.push_back(P);
  }
}

double PhiDerivativeTable::eval(int m, double x) const {
  const auto& c = coef_.at(m);
  const int D = static_cast<int>(c.size()) - 1;  // = p/q + m(p-1)
  using LD = long double;
  const LD a = LD(1) / q_ + m;
  const LD scale = std::pow(static_cast<LD>(q_), -m);
  const LD X = x;
  const LD ax = std::abs(X);
  if (ax <= 1) {
    LD acc = 0;
    for (int i = D; i >= 0; --i) acc = acc * X + c[i];
    return static_cast<double>(scale * acc * std::pow(1 + detail::ipow(ax, p_), -a));
  }
  // x^D P_rev(1/x) (1+x^p)^{-a} = sign^D |x|^{-m} P_rev(t) (1+t^p)^{-a}
  const LD t = 1 / X;
  LD acc = 0;
  for (int i = 0; i <= D; ++i) acc = acc * t + c[i];
  const LD sgn = (x < 0 && (D % 2 == 1)) ? -1 : 1;
  return static_cast<double>(scale * sgn * std::pow(ax, LD(-m)) * acc * std::pow(1 + detail::ipow(std::abs(t), p_), -a));
}

double phi_pq_derivative(int p, int q, int m, double x) {
  if (m < 0) throw std::invalid_argument("phi_pq_derivative: negative order");
  if (m == 0) return phi_pq(p, q, x);
  return PhiDerivativeTable(p, q, m).eval(m, x);
}

bool in_exponent_set(int p, int q, int m) {
  check_pq(p, q);
  const int r = p / q;
  return m >= r && (m - r) % p == 0;
}

double phi_derivative_at_zero(int p, int q, int m) {
  if (m < 0 || !in_exponent_set(p, q, m)) return 0.0;
  const int j = (m - p / q) / p;
  double binom = 1.0;
  for (int i = 0; i < j; ++i) binom *= (-1.0 / q - i) / (i + 1);
  return std::tgamma(m + 1.0) * binom;
}

double derivative_bound_A(int p, int q, int m) {
  if (p < 1 || q < 1) throw std::invalid_argument("derivative_bound_A: p and q must be positive");
  if (m < 0) throw std::invalid_argument("derivative_bound_A: negative order");
  const double base = 16.0 * p * p / (std::numbers::pi * q);
  double v = 1.0;
  for (int i = 1; i <= m; ++i) v *= base * i;
  if (!std::isfinite(v)) throw std::overflow_error("derivative_bound_A: value not representable as double");
  return v;
}

}  // namespace normnet
