#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "normnet/netir.hpp"
#include "normnet/netir_json.hpp"

#include <cstring>
#include <random>

using namespace normnet;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd rand_mat(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> U(-2, 2);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = U(rng);
  return m;
}

VectorXd rand_vec(std::mt19937_64& rng, int n) { return rand_mat(rng, n, 1); }

Net random_net(std::mt19937_64& rng, std::vector<int> dims, InterlayerOp op) {
  std::vector<Affine> a;
  std::vector<InterlayerOp> ops;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    a.emplace_back(rand_mat(rng, dims[i + 1], dims[i]), rand_vec(rng, dims[i + 1]));
    if (i + 2 < dims.size()) ops.push_back(op);
  }
  return Net(a, ops);
}

}  // namespace

TEST_CASE("eval basics") {
  Net single(Affine((MatrixXd(1, 2) << 2, -1).finished(), VectorXd::Constant(1, 0.5)));
  CHECK(single.depth() == 0);
  CHECK(single.eval(VectorXd::Ones(2))(0) == 1.5);

  Net ln({Affine::identity(2), Affine::identity(2)}, {GroupedNormSpec{{NormKind::LN}, 2}});
  VectorXd y = ln.eval((VectorXd(2) << 2, 0).finished());
  CHECK(y(0) == 1.0);
  CHECK(y(1) == -1.0);

  Net sign({Affine(MatrixXd::Constant(1, 1, 3), VectorXd::Constant(1, -1)),
            Affine(MatrixXd::Constant(1, 1, 2), VectorXd::Constant(1, 5))},
           {Activation{ActivationKind::Sign}});
  CHECK(sign.eval(VectorXd::Ones(1))(0) == 7.0);
  CHECK(sign.depth() == 1);
  CHECK(sign.width() == 1);
  CHECK_THROWS_AS(sign.eval(VectorXd::Ones(2)), std::invalid_argument);
}

TEST_CASE("structural validation") {
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(Net({Affine(rand_mat(rng, 3, 2), rand_vec(rng, 3)), Affine(rand_mat(rng, 1, 4), rand_vec(rng, 1))},
                      {Activation{}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Net({Affine(rand_mat(rng, 3, 2), rand_vec(rng, 3)), Affine(rand_mat(rng, 1, 3), rand_vec(rng, 1))},
                      {GroupedNormSpec{{NormKind::LN}, 2}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Net({Affine(rand_mat(rng, 3, 2), rand_vec(rng, 3)), Affine(rand_mat(rng, 3, 3), rand_vec(rng, 3)),
                       Affine(rand_mat(rng, 1, 3), rand_vec(rng, 1))},
                      {Activation{ActivationKind::Sat}, Activation{ActivationKind::Tanh}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Affine(rand_mat(rng, 3, 2), rand_vec(rng, 2)), std::invalid_argument);
}

TEST_CASE("compose fuses boundary affines") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Net inner = random_net(rng, {3, 6, 4}, Activation{ActivationKind::Sat});
    Net outer = random_net(rng, {4, 6, 6, 2}, GroupedNormSpec{{NormKind::LN}, 3});
    CHECK_THROWS_AS(compose(outer, inner), std::invalid_argument);  // mixed classes
    Net outer2 = random_net(rng, {4, 5, 5, 2}, Activation{ActivationKind::Sat});
    Net c = compose(outer2, inner);
    CHECK(c.depth() == 3);
    for (int i = 0; i < 100; ++i) {
      VectorXd x = rand_vec(rng, 3);
      CHECK((c.eval(x) - outer2.eval(inner.eval(x))).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("eval_sequence is row-wise eval") {
  std::mt19937_64 rng(9);
  SequenceAffine pre(rand_mat(rng, 2, 6), rand_vec(rng, 6));
  SequenceAffine post(rand_mat(rng, 6, 3), rand_vec(rng, 3));
  InterlayerOp mid = GroupedNormSpec{{NormKind::LN}, 3};
  Net token({pre.token_map(), post.token_map()}, {mid});
  MatrixXd X = rand_mat(rng, 3, 2);
  MatrixXd Y = eval_sequence(pre, mid, post, X);
  for (int i = 0; i < 3; ++i) CHECK((Y.row(i).transpose() - token.eval(X.row(i).transpose())).norm() == 0.0);
  MatrixXd C = X.row(0).replicate(4, 1);
  MatrixXd YC = eval_sequence(pre, mid, post, C);
  for (int i = 1; i < 4; ++i) CHECK(YC.row(i) == YC.row(0));
}

TEST_CASE("json round trip is bit exact") {
  std::mt19937_64 rng(11);
  std::vector<InterlayerOp> kinds = {
      Activation{ActivationKind::Sign},         Activation{ActivationKind::Sat},
      Activation{ActivationKind::PhiPQ, 6, 2},  Activation{ActivationKind::Tanh},
      Activation{ActivationKind::ReLU},         GroupedNormSpec{{NormKind::LN}, 2},
      GroupedNormSpec{{NormKind::LS}, 3},       GroupedNormSpec{{NormKind::LNDelta, 1e-3}, 2},
      GroupedNormSpec{{NormKind::PQ, 0, 6, 2}, 3}};
  for (const auto& op : kinds) {
    Net net = random_net(rng, {3, 6, 6, 2}, op);
    Net back = net_from_json(nlohmann::json::parse(to_json(net).dump()));
    REQUIRE(back.depth() == net.depth());
    for (std::size_t i = 0; i < net.affines().size(); ++i) {
      const auto& a = net.affine(i);
      const auto& b = back.affine(i);
      CHECK(std::memcmp(a.W.data(), b.W.data(), sizeof(double) * a.W.size()) == 0);
      CHECK(std::memcmp(a.b.data(), b.b.data(), sizeof(double) * a.b.size()) == 0);
    }
    for (int i = 0; i < net.depth(); ++i) CHECK(same_class(net.op(i), back.op(i)));
  }
  CHECK_THROWS(net_from_json(nlohmann::json::parse(R"({"version":2,"input_dim":1,"layers":[]})")));
}
