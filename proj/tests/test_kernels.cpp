#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "normnet/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace normnet;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double pop_var(const VectorXd& h) {
  const double mu = h.mean();
  return (h.array() - mu).square().mean();
}

struct DerivRef {
  int p, q, m;
  double x, value;
};

// mpmath, 40 digits, numerical differentiation of x^{p/q}/(1+|x|^p)^{1/q}
const DerivRef kDerivRefs[] = {
    {2, 2, 1, 0.3, 0.87873971121206549783},
    {2, 2, 1, -1.7, 0.13033936415511409499},
    {2, 2, 1, 4.2, 0.012425993954186680888},
    {2, 2, 1, -25, 0.000063846706627590378486},
    {2, 2, 2, 0.3, -0.72556489916592564041},
    {2, 2, 2, -1.7, 0.17088194272264315796},
    {2, 2, 2, 4.2, -0.0083995452694609538191},
    {2, 2, 2, -25, 7.6493658100148217035e-6},
    {2, 2, 3, 0.3, -1.4200658576947780118},
    {2, 2, 3, -1.7, 0.27287362999411942356},
    {2, 2, 3, 4.2, 0.0074631152787618019065},
    {2, 2, 3, -25, 1.2214546427621111461e-6},
    {2, 2, 4, 0.3, 8.0611536646664577506},
    {2, 2, 4, -1.7, 0.48332664656783441562},
    {2, 2, 4, 4.2, -0.0081662675450595142435},
    {2, 2, 4, -25, 2.4370548882308446797e-7},
    {6, 2, 1, 0.3, 0.26970502381337353451},
    {6, 2, 1, -1.7, 0.068791405685704782539},
    {6, 2, 1, 4.2, 0.00013009408536409485571},
    {6, 2, 1, -25, 4.9151999698010113546e-10},
    {6, 2, 2, 0.3, 1.7921393400551911785},
    {6, 2, 2, -1.7, 0.26877086076523738702},
    {6, 2, 2, 4.2, -0.00021677269756890711254},
    {6, 2, 2, -25, 1.3762559842965259415e-10},
    {6, 2, 3, 0.3, 5.8168350979475795292},
    {6, 2, 3, -1.7, 1.1590998495202950416},
    {6, 2, 3, 4.2, 0.00041274323923698424042},
    {6, 2, 3, -25, 4.4040191120605455545e-11},
    {6, 2, 4, 0.3, -3.6524553505798483314},
    {6, 2, 4, -1.7, 5.3202433761879816437},
    {6, 2, 4, 4.2, -0.00088392615748568685753},
    {6, 2, 4, -25, 1.5854468592363275583e-11},
    {10, 2, 1, 0.3, 0.040499641279972758664},
    {10, 2, 1, -1.7, 0.014481331308205705512},
    {10, 2, 1, 4.2, 6.9699141456561319399e-7},
    {10, 2, 1, -25, 2.0971519999999670147e-15},
    {10, 2, 2, 0.3, 0.5399832598203200851},
    {10, 2, 2, -1.7, 0.093072046715845932877},
    {10, 2, 2, 4.2, -1.8254522474231786561e-6},
    {10, 2, 2, -25, 9.2274687999997229231e-16},
    {10, 2, 3, 0.3, 5.3992745992744709499},
    {10, 2, 3, -1.7, 0.64923411407410167363},
    {10, 2, 3, 4.2, 5.2155705628279765632e-6},
    {10, 2, 3, -25, 4.4291850239997561723e-16},
    {10, 2, 4, 0.3, 35.970984512286956484},
    {10, 2, 4, -1.7, 4.8653316815215029341},
    {10, 2, 4, 4.2, -0.000016143394524753665999},
    {10, 2, 4, -25, 2.3031762124797756785e-16},
    {4, 4, 1, 0.3, 0.98996646135435413647},
    {4, 4, 1, -1.7, 0.061145369321511173949},
    {4, 4, 1, 4.2, 0.00076209961130249660584},
    {4, 4, 1, -25, 1.0239967232094371578e-7},
    {4, 4, 2, 0.3, -0.13257164198277731219},
    {4, 4, 2, -1.7, 0.16060948849808299612},
    {4, 4, 2, 4.2, -0.00090435513262949641049},
    {4, 4, 2, -25, 2.0479882035690731788e-8},
    {4, 4, 3, 0.3, -1.2937603549514564005},
    {4, 4, 3, -1.7, 0.47593780999264619165},
    {4, 4, 3, 4.2, 0.001285728047976633755},
    {4, 4, 3, -25, 4.9151528143548095167e-9},
    {4, 4, 4, 0.3, -7.8905539737192022533},
    {4, 4, 4, -1.7, 1.499268197294733313},
    {4, 4, 4, 4.2, -0.0021281610233731286232},
    {4, 4, 4, -25, 1.376235238360085505e-9},
};

}  // namespace

TEST_CASE("ln examples") {
  CHECK((apply_ln(vec({1, -1})) - vec({1, -1})).norm() < 1e-15);
  CHECK((apply_ln(vec({2, 0})) - vec({1, -1})).norm() < 1e-15);
  for (double c : {0.1, -3.7, 1e8, 1.0 / 3.0}) {
    VectorXd h = VectorXd::Constant(5, c);
    CHECK(apply_ln(h).isZero(0.0));
  }
  CHECK_THROWS_AS(apply_ln(vec({1})), std::invalid_argument);
}

TEST_CASE("ln moments and scale-shift invariance") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 9;
    VectorXd h(d);
    for (int i = 0; i < d; ++i) h(i) = U(rng);
    VectorXd y = apply_ln(h);
    CHECK(std::abs(y.mean()) < 1e-12);
    CHECK(std::abs(pop_var(y) - 1.0) < 1e-12);
    const double a = std::exp(U(rng) / 2), c = U(rng);
    VectorXd z = apply_ln(((a * h).array() + c).matrix());
    CHECK((z - y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((apply_ls(a * h) - apply_ls(h)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((apply_pq_norm(h, 2, 2) - apply_ls(h)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("ls examples") {
  CHECK((apply_ls(vec({1, 1})) - vec({1, 1})).norm() < 1e-15);
  CHECK(apply_ls(vec({0, 0})).isZero(0.0));
  const double r = std::sqrt(2.0) / 5;
  CHECK((apply_ls(vec({3, 4})) - vec({3 * r, 4 * r})).norm() < 1e-15);
}

TEST_CASE("ln delta") {
  CHECK((apply_ln_delta(vec({1, -1}), 1.0) - vec({0.5, -0.5})).norm() < 1e-15);
  CHECK(apply_ln_delta(VectorXd::Constant(4, 2.5), 0.1).isZero(0.0));
  CHECK((apply_ln_delta(vec({2, 0}), 1e-12) - vec({1, -1})).norm() < 1e-11);
  CHECK_THROWS_AS(apply_ln_delta(vec({1, 2}), 0.0), std::invalid_argument);
}

TEST_CASE("pq norm") {
  CHECK((apply_pq_norm(vec({1, -1}), 2, 2) - vec({1, -1})).norm() < 1e-15);
  CHECK((apply_pq_norm(vec({1, 1}), 6, 2) - vec({1, 1})).norm() < 1e-15);
  CHECK(apply_pq_norm(vec({0, 0, 0}), 6, 2).isZero(0.0));
  VectorXd h = vec({0.3, -1.2, 2.0, 0.7});
  VectorXd y = apply_pq_norm(h, 6, 2);
  CHECK(std::abs(y.array().abs().square().mean() - 1.0) < 1e-13);
  CHECK(y(1) < 0);
  CHECK_THROWS_AS(apply_pq_norm(h, 4, 2), std::invalid_argument);
}

TEST_CASE("grouped") {
  GroupedNormSpec g{{NormKind::LN}, 2};
  CHECK((apply_grouped(g, vec({2, 0, 5, 5})) - vec({1, -1, 0, 0})).norm() < 1e-15);
  VectorXd h = vec({0.4, -2, 3, 1.5, 0.1, 7});
  GroupedNormSpec whole{{NormKind::LN}, 6};
  CHECK((apply_grouped(whole, h) - apply_ln(h)).norm() == 0.0);
  GroupedNormSpec ls1{{NormKind::LS}, 1};
  CHECK((apply_grouped(ls1, vec({-3, 0, 2})) - vec({-1, 0, 1})).norm() == 0.0);
  GroupedNormSpec bad{{NormKind::LN}, 4};
  CHECK_THROWS_AS(apply_grouped(bad, h), std::invalid_argument);
}

TEST_CASE("activations") {
  Activation sat{ActivationKind::Sat}, sign{ActivationKind::Sign};
  CHECK(activate(sat, 0.0) == 0.0);
  CHECK(activate(sign, 0.0) == 0.0);
  CHECK(activate(sign, -1e-300) == -1.0);
  CHECK(std::abs(activate(sat, 1.0) - 1 / std::sqrt(2.0)) < 1e-16);
  Activation phi22{ActivationKind::PhiPQ, 2, 2};
  for (double x = -40; x <= 40; x += 0.0137) {
    CHECK(activate(sat, -x) == -activate(sat, x));
    CHECK(std::abs(activate(sat, x) - activate(phi22, x)) <= 4e-16);
    CHECK(phi_pq(6, 2, -x) == -phi_pq(6, 2, x));
    CHECK(phi_pq(10, 2, -x) == -phi_pq(10, 2, x));
  }
  CHECK(activate(sat, 1e200) == doctest::Approx(1.0));
  CHECK(phi_pq(6, 2, 1e100) == 1.0);
}

TEST_CASE("phi derivative reference values") {
  for (const auto& r : kDerivRefs) {
    const double v = phi_pq_derivative(r.p, r.q, r.m, r.x);
    CHECK_MESSAGE(std::abs(v - r.value) <= 1e-12 * std::abs(r.value), r.p, ",", r.q, " m=", r.m, " x=", r.x);
  }
  CHECK(phi_pq_derivative(2, 2, 0, 0.0) == 0.0);
  CHECK(phi_pq_derivative(2, 2, 1, 0.0) == 1.0);
  CHECK(phi_pq_derivative(2, 2, 3, 0.0) == -3.0);
}

TEST_CASE("phi derivative against finite differences") {
  for (auto [p, q] : {std::pair{2, 2}, {6, 2}, {10, 2}}) {
    for (int m = 1; m <= 3; ++m) {
      const double h = 1e-4;
      double scale = 0;
      for (double x = -3; x <= 3; x += 0.01) scale = std::max(scale, std::abs(phi_pq_derivative(p, q, m, x)));
      for (double x = -3; x <= 3; x += 0.05) {
        // m-th central difference on the half-step stencil, evaluated in long double
        long double acc = 0, binom = 1;
        for (int i = 0; i <= m; ++i) {
          acc += (i % 2 ? -1 : 1) * binom * phi_pq<long double>(p, q, x + (m / 2.0L - i) * h);
          binom = binom * (m - i) / (i + 1);
        }
        const double fd = static_cast<double>(acc / std::pow(static_cast<long double>(h), m));
        CHECK(std::abs(fd - phi_pq_derivative(p, q, m, x)) <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("derivative at zero") {
  CHECK(phi_derivative_at_zero(2, 2, 1) == 1.0);
  CHECK(phi_derivative_at_zero(2, 2, 5) == doctest::Approx(45.0).epsilon(1e-15));
  CHECK(phi_derivative_at_zero(2, 2, 2) == 0.0);
  CHECK(phi_derivative_at_zero(2, 2, 3) == doctest::Approx(-3.0).epsilon(1e-15));
  for (auto [p, q] : {std::pair{2, 2}, {6, 2}, {10, 2}, {4, 4}}) {
    PhiDerivativeTable T(p, q, 15);
    for (int m = 0; m <= 15; ++m) {
      const double z = phi_derivative_at_zero(p, q, m);
      CHECK(T.eval(m, 0.0) == doctest::Approx(z).epsilon(1e-12));
      if (in_exponent_set(p, q, m)) CHECK(std::abs(z) >= 1.0);
      else CHECK(z == 0.0);
    }
  }
}

TEST_CASE("derivative bound A") {
  CHECK(derivative_bound_A(2, 2, 0) == 1.0);
  CHECK(derivative_bound_A(2, 2, 1) == doctest::Approx(32 / std::numbers::pi));
  CHECK(derivative_bound_A(4, 2, 1) == doctest::Approx(128 / std::numbers::pi));
  CHECK_THROWS_AS(derivative_bound_A(10, 2, 400), std::overflow_error);
  for (auto [p, q] : {std::pair{2, 2}, {6, 2}, {10, 2}}) {
    PhiDerivativeTable T(p, q, 4);
    for (int m = 1; m <= 4; ++m) {
      const double A = derivative_bound_A(p, q, m);
      for (int i = 0; i < 10000; ++i) {
        const double x = -50 + 100.0 * i / 9999;
        const double env = A * std::pow(1 + std::abs(x), -m) * std::pow(1 + std::pow(std::abs(x), p), -1.0 / q);
        CHECK(std::abs(T.eval(m, x)) <= env);
      }
    }
  }
}

TEST_CASE("order-zero envelope is violated away from the origin") {
  // |φ(2)| = 2/√5 while (1+2²)^{-1/2} = 1/√5
  CHECK(std::abs(phi_pq(2, 2, 2.0)) > derivative_bound_A(2, 2, 0) * std::pow(5.0, -0.5));
  CHECK(std::abs(phi_pq(2, 2, 0.5)) <= derivative_bound_A(2, 2, 0) * std::pow(1.25, -0.5));
}

TEST_CASE("invalid p,q") {
  CHECK_THROWS_AS(PhiDerivativeTable(4, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(derivative_bound_A(0, 1, 1), std::invalid_argument);
  CHECK(valid_pq(4, 4));
  CHECK(valid_pq(6, 2));
  CHECK_FALSE(valid_pq(2, 4));
}
