#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "normnet/construct.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace normnet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::uniform_real_distribution<double> U(-2, 2);

MatrixXd rand_mat(std::mt19937_64& rng, int r, int c) {
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = U(rng);
  return m;
}
VectorXd rand_vec(std::mt19937_64& rng, int n) { return rand_mat(rng, n, 1); }

double sgn(double z) { return z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0); }
double sat(double z) { return z / std::sqrt(1 + z * z); }

Net sat_net(std::mt19937_64& rng, std::vector<int> dims) {
  std::vector<Affine> a;
  std::vector<InterlayerOp> ops;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    a.emplace_back(rand_mat(rng, dims[i + 1], dims[i]), rand_vec(rng, dims[i + 1]));
    if (i + 2 < dims.size()) ops.push_back(Activation{ActivationKind::Sat});
  }
  return Net(a, ops);
}

// hand-rolled forward pass for Sat nets, independent of Network::eval
VectorXd sat_forward(const Net& net, VectorXd x) {
  for (std::size_t i = 0; i < net.affines().size(); ++i) {
    x = net.affine(i).W * x + net.affine(i).b;
    if (i + 1 < net.affines().size())
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = sat(x(k));
  }
  return x;
}

}  // namespace

TEST_CASE("sign to ln examples") {
  Net net = compile_sign_to_ln(VectorXd::Constant(1, 3), -1, VectorXd::Constant(1, 2), VectorXd::Constant(1, 5), 2);
  CHECK(net.eval(VectorXd::Constant(1, 1.0))(0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(net.eval(VectorXd::Constant(1, 1.0 / 3.0))(0) == 5.0);
  CHECK(net.eval(VectorXd::Constant(1, 0.0))(0) == doctest::Approx(3.0).epsilon(1e-15));
  Net zero = compile_sign_to_ln(VectorXd::Constant(1, 3), -1, VectorXd::Zero(1), VectorXd::Constant(1, 5), 4);
  CHECK(zero.eval(VectorXd::Constant(1, 0.7))(0) == 5.0);
  CHECK_THROWS_AS(compile_sign_to_ln(VectorXd::Ones(1), 0, VectorXd::Ones(1), VectorXd::Zero(1), 1), std::invalid_argument);
}

TEST_CASE("sign to ln random") {
  std::mt19937_64 rng(21);
  for (int ns : {2, 3, 4, 7}) {
    for (int trial = 0; trial < 10; ++trial) {
      const int d = 1 + trial % 4, m = 1 + trial % 3;
      VectorXd w1 = rand_vec(rng, d), w2 = rand_vec(rng, m), b2 = rand_vec(rng, m);
      const double b1 = U(rng);
      Net net = compile_sign_to_ln(w1, b1, w2, b2, ns);
      CHECK(net.width() == ns);
      for (int i = 0; i < 500; ++i) {
        VectorXd x = rand_vec(rng, d);
        const double z = w1.dot(x) + b1;
        if (std::abs(z) < 1e-6) continue;
        CHECK((net.eval(x) - (w2 * sgn(z) + b2)).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("phi to ln") {
  Net net = compile_phi_to_ln(VectorXd::Ones(1), 0, VectorXd::Ones(1), VectorXd::Zero(1), 3);
  CHECK(net.eval(VectorXd::Ones(1))(0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(net.eval(VectorXd::Zero(1))(0)) < 1e-15);
  CHECK(net.width() == 3);
  CHECK(std::get<GroupedNormSpec>(net.op(0)).norm.kind == NormKind::LN);
  std::mt19937_64 rng(4);
  for (int ns : {3, 4, 5}) {
    VectorXd w1 = rand_vec(rng, 2), w2 = rand_vec(rng, 3), b2 = rand_vec(rng, 3);
    const double b1 = U(rng);
    Net n = compile_phi_to_ln(w1, b1, w2, b2, ns);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
      VectorXd x = rand_vec(rng, 2);
      worst = std::max(worst, (n.eval(x) - (w2 * sat(w1.dot(x) + b1) + b2)).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
  }
  CHECK_THROWS_AS(compile_phi_to_ln(VectorXd::Ones(1), 0, VectorXd::Ones(1), VectorXd::Zero(1), 2), std::invalid_argument);
}

TEST_CASE("merge and split") {
  std::mt19937_64 rng(8);
  std::vector<Net> parts;
  for (int k = 0; k < 3; ++k) {
    parts.emplace_back(std::vector<Affine>{Affine(rand_mat(rng, 4, 2), rand_vec(rng, 4)), Affine(rand_mat(rng, 2, 4), rand_vec(rng, 2))},
                       std::vector<InterlayerOp>{GroupedNormSpec{{NormKind::LN}, 4}});
  }
  Net merged = merge_ln_sum_to_pln(parts);
  CHECK(merged.width() == 12);
  for (int i = 0; i < 10000; ++i) {
    VectorXd x = rand_vec(rng, 2);
    VectorXd s = parts[0].eval(x) + parts[1].eval(x) + parts[2].eval(x);
    CHECK((merged.eval(x) - s).cwiseAbs().maxCoeff() < 1e-13);
  }
  auto split = split_pln_to_ln_sum(merged);
  CHECK(split.size() == 3);
  Net again = merge_ln_sum_to_pln(split);
  for (int i = 0; i < 1000; ++i) {
    VectorXd x = rand_vec(rng, 2);
    CHECK((again.eval(x) - merged.eval(x)).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK(split_pln_to_ln_sum(parts[0]).size() == 1);

  Net neg({parts[0].affine(0), Affine(-parts[0].affine(1).W, -parts[0].affine(1).b)}, {parts[0].op(0)});
  Net zero = merge_ln_sum_to_pln({parts[0], neg});
  CHECK(zero.eval(rand_vec(rng, 2)).cwiseAbs().maxCoeff() < 1e-14);

  Net other({Affine(rand_mat(rng, 3, 2), rand_vec(rng, 3)), Affine(rand_mat(rng, 2, 3), rand_vec(rng, 2))},
            {GroupedNormSpec{{NormKind::LN}, 3}});
  CHECK_THROWS_AS(merge_ln_sum_to_pln({parts[0], other}), std::invalid_argument);
}

TEST_CASE("centered orthogonal lift") {
  MatrixXd Q2 = centered_orthogonal_lift(2);
  MatrixXd hand(2, 2);
  hand << 1, 1, -1, 1;
  hand /= std::sqrt(2.0);
  CHECK((Q2 - hand).cwiseAbs().maxCoeff() < 1e-15);
  for (int d = 2; d <= 16; ++d) {
    MatrixXd Q = centered_orthogonal_lift(d);
    CHECK((Q * Q.transpose() - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Q.leftCols(d - 1).colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((Q.col(d - 1) - VectorXd::Constant(d, 1 / std::sqrt(double(d)))).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(centered_orthogonal_lift(1), std::invalid_argument);
}

TEST_CASE("ln <-> ls conversion") {
  std::mt19937_64 rng(12);
  for (int ns : {2, 3, 4, 6}) {
    // deep LN net, 2 groups per layer
    Net ln({Affine(rand_mat(rng, 2 * ns, 3), rand_vec(rng, 2 * ns)), Affine(rand_mat(rng, 2 * ns, 2 * ns), rand_vec(rng, 2 * ns)),
            Affine(rand_mat(rng, 2, 2 * ns), rand_vec(rng, 2))},
           {GroupedNormSpec{{NormKind::LN}, ns}, GroupedNormSpec{{NormKind::LN}, ns}});
    Net ls = ln_net_to_ls_net(ln);
    CHECK(std::get<GroupedNormSpec>(ls.op(0)).ns == ns - 1);
    Net back = ls_net_to_ln_net(ls);
    CHECK(std::get<GroupedNormSpec>(back.op(1)).ns == ns);
    double w1 = 0, w2 = 0;
    for (int i = 0; i < 10000; ++i) {
      VectorXd x = rand_vec(rng, 3);
      w1 = std::max(w1, (ls.eval(x) - ln.eval(x)).cwiseAbs().maxCoeff());
      w2 = std::max(w2, (back.eval(x) - ln.eval(x)).cwiseAbs().maxCoeff());
    }
    CHECK(w1 < 1e-10);
    CHECK(w2 < 1e-10);
  }
  // sign net through LS
  Net sign = compile_sign_to_ln(VectorXd::Constant(1, 3), -1, VectorXd::Constant(1, 2), VectorXd::Constant(1, 5), 3);
  Net ls = ln_net_to_ls_net(sign);
  for (double x : {-1.0, 0.0, 0.3, 0.34, 2.0}) CHECK(ls.eval(VectorXd::Constant(1, x))(0) == doctest::Approx(2 * sgn(3 * x - 1) + 5));
  // constant net
  Net c({Affine(MatrixXd::Zero(3, 2), VectorXd::Zero(3)), Affine(MatrixXd::Zero(1, 3), VectorXd::Constant(1, 4.0))},
        {GroupedNormSpec{{NormKind::LN}, 3}});
  CHECK(ln_net_to_ls_net(c).eval(rand_vec(rng, 2))(0) == 4.0);
  CHECK_THROWS_AS(ls_net_to_ln_net(c), std::invalid_argument);
}

TEST_CASE("shallow and deep sat nets to pln") {
  std::mt19937_64 rng(31);
  Net one = sat_net(rng, {2, 1, 1});
  Net pln1 = compile_shallow_phi_net_to_pln(one, 3);
  Net direct = compile_phi_to_ln(one.affine(0).W.row(0).transpose(), one.affine(0).b(0), one.affine(1).W.col(0), one.affine(1).b, 3);
  for (int i = 0; i < 100; ++i) {
    VectorXd x = rand_vec(rng, 2);
    CHECK((pln1.eval(x) - direct.eval(x)).norm() < 1e-14);
  }
  Net shallow = sat_net(rng, {3, 8, 2});
  for (int ns : {3, 5}) {
    Net pln = compile_shallow_phi_net_to_pln(shallow, ns);
    CHECK(pln.depth() == 1);
    CHECK(pln.width() == ns * 8);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
      VectorXd x = rand_vec(rng, 3);
      worst = std::max(worst, (pln.eval(x) - sat_forward(shallow, x)).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
  }
  Net deep = sat_net(rng, {4, 6, 8, 5, 2});
  Net pln = compile_deep_phi_net_to_pln(deep, 3);
  CHECK(pln.depth() == 3);
  CHECK(pln.width() == 3 * 8);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    VectorXd x = rand_vec(rng, 4);
    worst = std::max(worst, (pln.eval(x) - sat_forward(deep, x)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-11);
  Net tanh_net({Affine(rand_mat(rng, 2, 1), rand_vec(rng, 2)), Affine(rand_mat(rng, 1, 2), rand_vec(rng, 1))},
               {Activation{ActivationKind::Tanh}});
  CHECK_THROWS_AS(compile_shallow_phi_net_to_pln(tanh_net, 3), std::invalid_argument);
}

TEST_CASE("lipschitz staircase") {
  StaircaseSpec lin{1.0, 0.3, [](double x) { return x; }};
  Staircase s = build_lipschitz_staircase(lin);
  CHECK(s.N == 2);
  CHECK(s.alpha(0) == doctest::Approx(0.25));
  CHECK(s.alpha(1) == doctest::Approx(0.5));
  CHECK(s.sign_net.eval(VectorXd::Constant(1, 0.1))(0) == doctest::Approx(0.25));
  CHECK(s.pln_net.eval(VectorXd::Constant(1, 0.1))(0) == doctest::Approx(0.25));

  StaircaseSpec c{1.0, 0.1, [](double) { return 2.5; }};
  Staircase sc = build_lipschitz_staircase(c);
  for (int j = 0; j + 1 < sc.N; ++j) CHECK(sc.alpha(j) == 0.0);
  CHECK(sc.alpha(sc.N - 1) == 2.5);

  StaircaseSpec cosine{std::numbers::pi, 0.1, [](double x) { return std::cos(std::numbers::pi * x); }};
  Staircase scos = build_lipschitz_staircase(cosine, 3);
  CHECK(scos.N == int(std::floor(std::numbers::pi / 0.2)) + 1);
  double worst = 0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i / 10000.0;
    const double frac = x * scos.N;
    if (std::abs(frac - std::round(frac)) < 1e-6 * scos.N) continue;
    const VectorXd xv = VectorXd::Constant(1, x);
    worst = std::max(worst, std::abs(scos.sign_net.eval(xv)(0) - cosine.f(x)));
    CHECK(std::abs(scos.sign_net.eval(xv)(0) - scos.pln_net.eval(xv)(0)) < 1e-12);
  }
  CHECK(worst < 0.1);
}

TEST_CASE("delta staircase") {
  auto sup = [](const Net& net, const std::function<double(double)>& f) {
    double w = 0;
    for (int i = 0; i <= 10000; ++i) {
      const double x = i / 10000.0;
      w = std::max(w, std::abs(net.eval(VectorXd::Constant(1, x))(0) - f(x)));
    }
    return w;
  };
  StaircaseSpec lin{1.0, 0.3, [](double x) { return x; }};
  DeltaStaircase d = build_staircase_delta(lin, 1e-3);
  CHECK(sup(d.net, lin.f) < 0.3);
  CHECK(d.eps1 > 0);
  CHECK(d.eps1 <= 0.3 - 1.0 / (2 * d.N));
  double prev = sup(d.net, lin.f);
  for (int halvings = 1; halvings <= 4; ++halvings) {
    const double lam = d.lambda / std::pow(2.0, halvings);
    const double e = sup(staircase_delta_net(d.alpha, d.bias, lam, 1e-3, 2), lin.f);
    CHECK(e <= prev + 1e-15);
    prev = e;
  }
  StaircaseSpec c{1.0, 0.1, [](double) { return -1.5; }};
  DeltaStaircase dc = build_staircase_delta(c, 1e-2, {}, 4);
  CHECK(sup(dc.net, c.f) < 1e-15);
  StaircaseSpec cosine{std::numbers::pi, 0.05, [](double x) { return std::cos(std::numbers::pi * x); }};
  CHECK(sup(build_staircase_delta(cosine, 0.5, {}, 3).net, cosine.f) < 0.05);
}

TEST_CASE("sequence ffn") {
  std::mt19937_64 rng(17);
  SequenceAffine pre(rand_mat(rng, 3, 4), rand_vec(rng, 4));
  SequenceAffine post(rand_mat(rng, 4, 2), rand_vec(rng, 2));
  Net token({pre.token_map(), post.token_map()}, {Activation{ActivationKind::Sat}});
  SequencePLN pln = compile_ffn_to_pln_sequence(pre, post, 3);
  CHECK(pln.norm.ns == 3);
  CHECK(pln.pre.W.cols() == 12);
  for (int s : {1, 5, 6}) {
    MatrixXd X = rand_mat(rng, s, 3);
    MatrixXd Y = eval_sequence(pln.pre, pln.norm, pln.post, X);
    for (int i = 0; i < s; ++i) CHECK((Y.row(i).transpose() - sat_forward(token, X.row(i).transpose())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("relu compile size bound") {
  CHECK(theorem42_size_bound(1, 1, 3) == std::pair{2, 9});
  CHECK(theorem42_size_bound(2, 4, 3) == std::pair{4, 36});
}
