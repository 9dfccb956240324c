#pragma once

#include "normnet/netir.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace normnet {

// w2 sign(w1·x + b1) + b2 as an LN-net of width ns.
Net compile_sign_to_ln(const Eigen::VectorXd& w1, double b1, const Eigen::VectorXd& w2, const Eigen::VectorXd& b2,
                       int ns);

// w2 φ(w1·x + b1) + b2 with φ = Sat, as an LN-net of width ns.
Net compile_phi_to_ln(const Eigen::VectorXd& w1, double b1, const Eigen::VectorXd& w2, const Eigen::VectorXd& b2,
                      int ns);

// Same, stopping at the LS-net of width ns - 1.
Net compile_phi_to_ls(const Eigen::VectorXd& w1, double b1, const Eigen::VectorXd& w2, const Eigen::VectorXd& b2,
                      int ns);

Net merge_ln_sum_to_pln(const std::vector<Net>& nets);
std::vector<Net> split_pln_to_ln_sum(const Net& net);

// Orthogonal Q with last column 𝟙/√d; the first d-1 columns have zero sum.
Eigen::MatrixXd centered_orthogonal_lift(int d);

Net ln_net_to_ls_net(const Net& net);
Net ls_net_to_ln_net(const Net& net);

Net compile_shallow_phi_net_to_pln(const Net& phi_net, int ns);
Net compile_deep_phi_net_to_pln(const Net& phi_net, int ns);

struct StaircaseSpec {
  double L = 1.0;
  double eps = 0.1;
  std::function<double(double)> f;

  int pieces() const;
};

struct Staircase {
  int N = 0;
  Eigen::VectorXd alpha, bias;  // f̄(x) = Σ α_j sign(x + b_j)
  Net sign_net;
  Net pln_net;
};

Staircase build_lipschitz_staircase(const StaircaseSpec& spec, int ns = 2);

struct StaircaseMargins {
  double eps1 = -1, eps2 = -1, delta0 = -1;  // negative: use defaults
};

struct DeltaStaircase {
  int N = 0;
  double lambda = 1.0;
  double delta_star = 0.0;
  double eps1 = 0, eps2 = 0, delta0 = 0;
  Eigen::VectorXd alpha, bias;
  Net net;
};

DeltaStaircase build_staircase_delta(const StaircaseSpec& spec, double delta, StaircaseMargins margins = {},
                                     int ns = 2);

// Same staircase data with an explicit λ.
Net staircase_delta_net(const Eigen::VectorXd& alpha, const Eigen::VectorXd& bias, double lambda, double delta,
                        int ns);

struct SequencePLN {
  SequenceAffine pre;
  GroupedNormSpec norm;
  SequenceAffine post;
};

SequencePLN compile_ffn_to_pln_sequence(const SequenceAffine& pre, const SequenceAffine& post, int ns);

std::pair<int, int> theorem42_size_bound(int L, int N, int ns);

}  // namespace normnet
