#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace normnet {

enum class NormKind { LN, LS, LNDelta, PQ };

struct NormSpec {
  NormKind kind = NormKind::LN;
  double delta = 0.0;  // LNDelta only
  int p = 2, q = 2;    // PQ only
};

struct GroupedNormSpec {
  NormSpec norm;
  int ns = 2;
};

enum class ActivationKind { Sign, Sat, PhiPQ, Tanh, ReLU };

struct Activation {
  ActivationKind kind = ActivationKind::Sat;
  int p = 2, q = 2;  // PhiPQ only
};

// p >= q >= 1, both even, p/q odd.
bool valid_pq(int p, int q);
void check_pq(int p, int q);

namespace detail {

template <typename Scalar>
Scalar ipow(Scalar x, int n) {
  Scalar r(1);
  for (; n > 0; n >>= 1) {
    if (n & 1) r *= x;
    x *= x;
  }
  return r;
}

// Shifting by the first entry keeps a constant vector exactly constant, so
// sigma comes out as an exact zero there.
template <typename Derived>
typename Derived::Scalar shifted_mean(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  const Scalar h0 = h(0);
  Scalar acc(0);
  for (Eigen::Index i = 0; i < h.size(); ++i) acc += h(i) - h0;
  return h0 + acc / Scalar(h.size());
}

}  // namespace detail

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_ln(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (h.size() < 2) throw std::invalid_argument("apply_ln: dimension must be >= 2");
  const Scalar mu = detail::shifted_mean(h);
  Vec c = h.array() - mu;
  const Scalar sigma = std::sqrt(c.squaredNorm() / Scalar(h.size()));
  if (sigma == Scalar(0)) return Vec::Zero(h.size());
  return c / sigma;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_ls(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (h.size() < 1) throw std::invalid_argument("apply_ls: empty input");
  const Scalar rms = std::sqrt(h.squaredNorm() / Scalar(h.size()));
  if (rms == Scalar(0)) return Vec::Zero(h.size());
  return h / rms;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_ln_delta(const Eigen::MatrixBase<Derived>& h,
                                                                          double delta) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (!(delta > 0)) throw std::invalid_argument("apply_ln_delta: delta must be positive");
  if (h.size() < 1) throw std::invalid_argument("apply_ln_delta: empty input");
  const Scalar mu = detail::shifted_mean(h);
  Vec c = h.array() - mu;
  const Scalar sigma = std::sqrt(c.squaredNorm() / Scalar(h.size()));
  return c / (sigma + Scalar(delta));
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_pq_norm(const Eigen::MatrixBase<Derived>& h, int p,
                                                                         int q) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  check_pq(p, q);
  if (h.size() < 1) throw std::invalid_argument("apply_pq_norm: empty input");
  const int r = p / q;
  Scalar m(0);
  for (Eigen::Index i = 0; i < h.size(); ++i) m += detail::ipow(Scalar(std::abs(h(i))), p);
  m /= Scalar(h.size());
  if (m == Scalar(0)) return Vec::Zero(h.size());
  const Scalar den = std::pow(m, Scalar(1) / Scalar(q));
  Vec out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) out(i) = detail::ipow(Scalar(h(i)), r) / den;
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_norm(const NormSpec& spec,
                                                                      const Eigen::MatrixBase<Derived>& h) {
  switch (spec.kind) {
    case NormKind::LN: return apply_ln(h);
    case NormKind::LS: return apply_ls(h);
    case NormKind::LNDelta: return apply_ln_delta(h, spec.delta);
    case NormKind::PQ: return apply_pq_norm(h, spec.p, spec.q);
  }
  throw std::invalid_argument("apply_norm: unknown kind");
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_grouped(const GroupedNormSpec& spec,
                                                                         const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (spec.ns < 1 || h.size() % spec.ns != 0)
    throw std::invalid_argument("apply_grouped: width not divisible by group size");
  Vec out(h.size());
  for (Eigen::Index g = 0; g < h.size(); g += spec.ns) out.segment(g, spec.ns) = apply_norm(spec.norm, h.segment(g, spec.ns));
  return out;
}

template <typename Scalar>
Scalar phi_pq(int p, int q, Scalar x) {
  if (x == Scalar(0)) return Scalar(0);
  const Scalar ax = std::abs(x);
  const Scalar s = x > 0 ? Scalar(1) : Scalar(-1);
  if (ax >= Scalar(1)) {
    // x^{p/q}/(1+|x|^p)^{1/q} = sign(x) (1+|x|^{-p})^{-1/q}
    return s * std::pow(Scalar(1) + detail::ipow(Scalar(1) / ax, p), Scalar(-1) / Scalar(q));
  }
  return detail::ipow(x, p / q) * std::pow(Scalar(1) + detail::ipow(ax, p), Scalar(-1) / Scalar(q));
}

template <typename Scalar>
  requires std::is_floating_point_v<Scalar>
Scalar activate(const Activation& a, Scalar x) {
  switch (a.kind) {
    case ActivationKind::Sign: return x > 0 ? Scalar(1) : (x < 0 ? Scalar(-1) : Scalar(0));
    case ActivationKind::Sat: return x / std::hypot(Scalar(1), x);
    case ActivationKind::PhiPQ: return phi_pq(a.p, a.q, x);
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::ReLU: return x > 0 ? x : Scalar(0);
  }
  throw std::invalid_argument("activate: unknown kind");
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> activate(const Activation& a,
                                                                    const Eigen::MatrixBase<Derived>& h) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) out(i) = activate(a, h(i));
  return out;
}

// Coefficients of q^m Q_m, held in long double.
class PhiDerivativeTable {
 public:
  PhiDerivativeTable(int p, int q, int max_m);

  int p() const { return p_; }
  int q() const { return q_; }
  int max_order() const { return static_cast<int>(coef_.size()) - 1; }
  const std::vector<long double>& scaled_poly(int m) const { return coef_.at(m); }

  double eval(int m, double x) const;

 private:
  int p_, q_;
  std::vector<std::vector<long double>> coef_;
};

// m-th derivative of phi_{p,q} from the exact polynomial recurrence.
double phi_pq_derivative(int p, int q, int m, double x);

double phi_derivative_at_zero(int p, int q, int m);

bool in_exponent_set(int p, int q, int m);

// (16 p^2/(pi q))^m m!; throws std::overflow_error when not representable.
double derivative_bound_A(int p, int q, int m);

}  // namespace normnet
