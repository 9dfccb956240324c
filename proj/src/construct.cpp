#include "normnet/construct.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace normnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const GroupedNormSpec& grouped_op(const Net& net, std::size_t i, NormKind kind, const char* who) {
  const auto* g = std::get_if<GroupedNormSpec>(&net.op(i));
  if (!g || g->norm.kind != kind) throw std::invalid_argument(std::string(who) + ": unexpected interlayer op");
  return *g;
}

void require_sat(const Net& net, const char* who) {
  for (const auto& op : net.ops()) {
    const auto* a = std::get_if<Activation>(&op);
    bool ok = a && (a->kind == ActivationKind::Sat || (a->kind == ActivationKind::PhiPQ && a->p == 2 && a->q == 2));
    if (!ok) throw std::invalid_argument(std::string(who) + ": interlayer ops must be Sat");
  }
}

MatrixXd block_diag(const MatrixXd& block, Eigen::Index copies) {
  MatrixXd out = MatrixXd::Zero(block.rows() * copies, block.cols() * copies);
  for (Eigen::Index g = 0; g < copies; ++g) out.block(g * block.rows(), g * block.cols(), block.rows(), block.cols()) = block;
  return out;
}

// Rewrites every grouped op: new affine_i = in_i ∘ affine_i ∘ out_{i-1}.
Net retarget_groups(const Net& net, NormKind from, NormKind to) {
  const std::size_t L = net.ops().size();
  std::vector<MatrixXd> in(L), out(L);
  std::vector<InterlayerOp> ops;
  for (std::size_t i = 0; i < L; ++i) {
    const auto& g = grouped_op(net, i, from, "norm conversion");
    const int ns = g.ns;
    const int d = from == NormKind::LN ? ns : ns + 1;  // LN side size
    if (d < 2) throw std::invalid_argument("norm conversion: group size below threshold");
    const MatrixXd Q = centered_orthogonal_lift(d);
    const Eigen::Index groups = net.affine(i).out_dim() / ns;
    MatrixXd b_in, b_out;
    if (from == NormKind::LN) {
      // LN(z) = sqrt(d/(d-1)) Q[I;0] LS([I 0] Qᵀ z)
      b_in = Q.leftCols(d - 1).transpose();
      b_out = std::sqrt(double(d) / (d - 1)) * Q.leftCols(d - 1);
    } else {
      // LS(x) = sqrt((d-1)/d) [I 0] Qᵀ LN(Q [x;0])
      b_in = Q.leftCols(d - 1);
      b_out = std::sqrt(double(d - 1) / d) * Q.leftCols(d - 1).transpose();
    }
    in[i] = block_diag(b_in, groups);
    out[i] = block_diag(b_out, groups);
    GroupedNormSpec ng;
    ng.norm.kind = to;
    ng.ns = from == NormKind::LN ? ns - 1 : ns + 1;
    ops.push_back(ng);
  }
  std::vector<Affine> affines;
  for (std::size_t i = 0; i <= L; ++i) {
    MatrixXd W = net.affine(i).W;
    VectorXd b = net.affine(i).b;
    if (i > 0) W = W * out[i - 1];
    if (i < L) {
      W = in[i] * W;
      b = in[i] * b;
    }
    affines.emplace_back(std::move(W), std::move(b));
  }
  return Net(std::move(affines), std::move(ops));
}

}  // namespace

Net compile_sign_to_ln(const VectorXd& w1, double b1, const VectorXd& w2, const VectorXd& b2, int ns) {
  if (ns < 2) throw std::invalid_argument("compile_sign_to_ln: ns must be >= 2");
  if (w2.size() != b2.size()) throw std::invalid_argument("compile_sign_to_ln: w2/b2 size mismatch");
  const Eigen::Index d = w1.size();
  MatrixXd V1 = MatrixXd::Zero(ns, d);
  V1.row(0) = w1.transpose();
  V1.row(1) = -w1.transpose();
  VectorXd c1 = VectorXd::Zero(ns);
  c1(0) = b1;
  c1(1) = -b1;
  MatrixXd V2 = MatrixXd::Zero(w2.size(), ns);
  V2.col(0) = std::sqrt(2.0 / ns) * w2;
  GroupedNormSpec g{{NormKind::LN}, ns};
  return Net({Affine(V1, c1), Affine(V2, b2)}, {g});
}

Net compile_phi_to_ls(const VectorXd& w1, double b1, const VectorXd& w2, const VectorXd& b2, int ns) {
  if (ns < 3) throw std::invalid_argument("compile_phi_to_ln: ns must be >= 3");
  if (w2.size() != b2.size()) throw std::invalid_argument("compile_phi_to_ln: w2/b2 size mismatch");
  const int n = ns - 1;
  MatrixXd V1 = MatrixXd::Zero(n, w1.size());
  V1.row(0) = w1.transpose();
  VectorXd c1 = VectorXd::Zero(n);
  c1(0) = b1;
  c1(1) = 1.0;
  MatrixXd V2 = MatrixXd::Zero(w2.size(), n);
  V2.col(0) = w2 / std::sqrt(double(n));
  GroupedNormSpec g{{NormKind::LS}, n};
  return Net({Affine(V1, c1), Affine(V2, b2)}, {g});
}

Net compile_phi_to_ln(const VectorXd& w1, double b1, const VectorXd& w2, const VectorXd& b2, int ns) {
  return ls_net_to_ln_net(compile_phi_to_ls(w1, b1, w2, b2, ns));
}

Net merge_ln_sum_to_pln(const std::vector<Net>& nets) {
  if (nets.empty()) throw std::invalid_argument("merge_ln_sum_to_pln: empty list");
  const Net& first = nets.front();
  for (const auto& n : nets) {
    if (n.depth() != 1 || !std::holds_alternative<GroupedNormSpec>(n.op(0)))
      throw std::invalid_argument("merge_ln_sum_to_pln: inputs must be shallow normalization nets");
    if (!same_class(n.op(0), first.op(0))) throw std::invalid_argument("merge_ln_sum_to_pln: mismatched norm or ns");
    if (n.input_dim() != first.input_dim() || n.output_dim() != first.output_dim())
      throw std::invalid_argument("merge_ln_sum_to_pln: mismatched dimensions");
  }
  Eigen::Index width = 0;
  for (const auto& n : nets) width += n.affine(0).out_dim();
  MatrixXd W1(width, first.input_dim());
  VectorXd b1(width);
  MatrixXd W2(first.output_dim(), width);
  VectorXd b2 = VectorXd::Zero(first.output_dim());
  Eigen::Index off = 0;
  for (const auto& n : nets) {
    const Eigen::Index w = n.affine(0).out_dim();
    W1.middleRows(off, w) = n.affine(0).W;
    b1.segment(off, w) = n.affine(0).b;
    W2.middleCols(off, w) = n.affine(1).W;
    b2 += n.affine(1).b;
    off += w;
  }
  return Net({Affine(W1, b1), Affine(W2, b2)}, {first.op(0)});
}

std::vector<Net> split_pln_to_ln_sum(const Net& net) {
  if (net.depth() != 1) throw std::invalid_argument("split_pln_to_ln_sum: net must be shallow");
  const auto* g = std::get_if<GroupedNormSpec>(&net.op(0));
  if (!g) throw std::invalid_argument("split_pln_to_ln_sum: interlayer must be a grouped norm");
  const Eigen::Index ns = g->ns;
  const Eigen::Index groups = net.affine(0).out_dim() / ns;
  std::vector<Net> out;
  for (Eigen::Index k = 0; k < groups; ++k) {
    VectorXd b2 = k == 0 ? net.affine(1).b : VectorXd::Zero(net.output_dim());
    out.emplace_back(std::vector<Affine>{Affine(net.affine(0).W.middleRows(k * ns, ns), net.affine(0).b.segment(k * ns, ns)),
                                         Affine(net.affine(1).W.middleCols(k * ns, ns), b2)},
                     std::vector<InterlayerOp>{*g});
  }
  return out;
}

MatrixXd centered_orthogonal_lift(int d) {
  if (d < 2) throw std::invalid_argument("centered_orthogonal_lift: d must be >= 2");
  // Householder reflection H e_d = 𝟙/√d, then flip the first d-1 columns.
  VectorXd v = VectorXd::Constant(d, -1.0 / std::sqrt(double(d)));
  v(d - 1) += 1.0;
  MatrixXd Q = MatrixXd::Identity(d, d) - (2.0 / v.squaredNorm()) * v * v.transpose();
  Q.leftCols(d - 1) *= -1.0;
  return Q;
}

Net ln_net_to_ls_net(const Net& net) { return retarget_groups(net, NormKind::LN, NormKind::LS); }
Net ls_net_to_ln_net(const Net& net) { return retarget_groups(net, NormKind::LS, NormKind::LN); }

Net compile_shallow_phi_net_to_pln(const Net& phi_net, int ns) {
  if (phi_net.depth() != 1) throw std::invalid_argument("compile_shallow_phi_net_to_pln: net must be shallow");
  require_sat(phi_net, "compile_shallow_phi_net_to_pln");
  const Affine& A = phi_net.affine(0);
  const Affine& B = phi_net.affine(1);
  std::vector<Net> parts;
  for (Eigen::Index i = 0; i < A.out_dim(); ++i) {
    VectorXd b2 = i == 0 ? B.b : VectorXd::Zero(B.out_dim());
    parts.push_back(compile_phi_to_ln(A.W.row(i).transpose(), A.b(i), B.W.col(i), b2, ns));
  }
  return merge_ln_sum_to_pln(parts);
}

Net compile_deep_phi_net_to_pln(const Net& phi_net, int ns) {
  require_sat(phi_net, "compile_deep_phi_net_to_pln");
  if (phi_net.depth() < 1) throw std::invalid_argument("compile_deep_phi_net_to_pln: depth must be >= 1");
  Net out;
  for (int l = 0; l < phi_net.depth(); ++l) {
    const Affine first = l == 0 ? phi_net.affine(0) : Affine::identity(phi_net.affine(l).out_dim());
    Net piece({first, phi_net.affine(l + 1)}, {phi_net.op(l)});
    Net compiled = compile_shallow_phi_net_to_pln(piece, ns);
    out = l == 0 ? compiled : compose(compiled, out);
  }
  return out;
}

int StaircaseSpec::pieces() const {
  if (!(L > 0) || !(eps > 0)) throw std::invalid_argument("StaircaseSpec: L and eps must be positive");
  return static_cast<int>(std::floor(L / (2.0 * eps))) + 1;
}

namespace {

void staircase_coefficients(const StaircaseSpec& spec, int N, VectorXd& alpha, VectorXd& bias) {
  alpha.resize(N);
  bias.resize(N);
  auto f = [&](double num) { return spec.f(num / (2.0 * N)); };
  for (int j = 1; j < N; ++j) {
    alpha(j - 1) = 0.5 * (f(2 * j + 1) - f(2 * j - 1));
    bias(j - 1) = -double(j) / N;
  }
  alpha(N - 1) = 0.5 * (f(1) + f(2 * N - 1));
  bias(N - 1) = 1.0;
}

}  // namespace

Staircase build_lipschitz_staircase(const StaircaseSpec& spec, int ns) {
  Staircase s;
  s.N = spec.pieces();
  staircase_coefficients(spec, s.N, s.alpha, s.bias);
  s.sign_net = Net({Affine(MatrixXd::Ones(s.N, 1), s.bias), Affine(s.alpha.transpose(), VectorXd::Zero(1))},
                   {Activation{ActivationKind::Sign}});
  std::vector<Net> parts;
  for (int j = 0; j < s.N; ++j)
    parts.push_back(compile_sign_to_ln(VectorXd::Ones(1), s.bias(j), VectorXd::Constant(1, s.alpha(j)), VectorXd::Zero(1), ns));
  s.pln_net = merge_ln_sum_to_pln(parts);
  return s;
}

Net staircase_delta_net(const VectorXd& alpha, const VectorXd& bias, double lambda, double delta, int ns) {
  if (ns < 2) throw std::invalid_argument("staircase_delta_net: ns must be >= 2");
  if (!(delta > 0) || !(lambda > 0)) throw std::invalid_argument("staircase_delta_net: delta and lambda must be positive");
  // sign(x + b_N) = 1 on [0,1]; that term rides in the output bias.
  const Eigen::Index N = alpha.size() - 1;
  // group j sees [c z, -c z, 0, ...] with z = (x + b_j)/λ and c = sqrt(ns/2),
  // so its first output is sqrt(ns/2) z/(|z| + δ).
  const double c = std::sqrt(ns / 2.0) / lambda;
  MatrixXd V1 = MatrixXd::Zero(N * ns, 1);
  VectorXd c1 = VectorXd::Zero(N * ns);
  MatrixXd V2 = MatrixXd::Zero(1, N * ns);
  for (Eigen::Index j = 0; j < N; ++j) {
    V1(j * ns, 0) = c;
    V1(j * ns + 1, 0) = -c;
    c1(j * ns) = c * bias(j);
    c1(j * ns + 1) = -c * bias(j);
    V2(0, j * ns) = std::sqrt(2.0 / ns) * alpha(j);
  }
  GroupedNormSpec g{{NormKind::LNDelta, delta}, ns};
  if (N == 0) {
    // keep one inert group so the net still has a hidden layer
    return Net({Affine(MatrixXd::Zero(ns, 1), VectorXd::Zero(ns)), Affine(MatrixXd::Zero(1, ns), VectorXd::Constant(1, alpha(0)))}, {g});
  }
  return Net({Affine(V1, c1), Affine(V2, VectorXd::Constant(1, alpha(N)))}, {g});
}

DeltaStaircase build_staircase_delta(const StaircaseSpec& spec, double delta, StaircaseMargins margins, int ns) {
  if (!(delta > 0)) throw std::invalid_argument("build_staircase_delta: delta must be positive");
  DeltaStaircase s;
  s.N = spec.pieces();
  const int N = s.N;
  staircase_coefficients(spec, N, s.alpha, s.bias);
  // The sign staircase already spends L/(2N) of the budget; the margins must fit in the rest.
  const double slack = spec.eps - spec.L / (2.0 * N);
  const double def_margin = std::min(spec.eps / 4.0, slack);
  s.eps1 = margins.eps1 > 0 ? margins.eps1 : def_margin;
  s.eps2 = margins.eps2 > 0 ? margins.eps2 : def_margin;
  s.delta0 = margins.delta0 > 0 ? margins.delta0 : 1.0 / (4.0 * N);
  if (!(s.delta0 < 1.0 / (2.0 * N))) throw std::invalid_argument("build_staircase_delta: delta0 must be < 1/(2N)");
  const double astar = s.alpha.cwiseAbs().maxCoeff();
  if (astar == 0.0) {
    s.lambda = 1.0;
    s.delta_star = std::numeric_limits<double>::infinity();
  } else {
    double dstar = s.eps1 * s.delta0 / (N * astar);
    for (int k = 1; k < N; ++k) {
      double ak = 0.0;
      for (int j = 0; j < N; ++j)
        if (j != k - 1) ak = std::max(ak, std::abs(s.alpha(j)));
      if (ak > 0) dstar = std::min(dstar, (s.eps2 / (2.0 * N)) / ((N - 1) * ak));
    }
    s.delta_star = dstar;
    s.lambda = dstar / delta;
  }
  s.net = staircase_delta_net(s.alpha, s.bias, s.lambda, delta, ns);
  return s;
}

SequencePLN compile_ffn_to_pln_sequence(const SequenceAffine& pre, const SequenceAffine& post, int ns) {
  if (pre.W.cols() != post.W.rows()) throw std::invalid_argument("compile_ffn_to_pln_sequence: dimension mismatch");
  Net token({pre.token_map(), post.token_map()}, {Activation{ActivationKind::Sat}});
  Net pln = compile_shallow_phi_net_to_pln(token, ns);
  return {SequenceAffine::from_token_map(pln.affine(0)), std::get<GroupedNormSpec>(pln.op(0)),
          SequenceAffine::from_token_map(pln.affine(1))};
}

std::pair<int, int> theorem42_size_bound(int L, int N, int ns) {
  if (L < 1 || N < 1 || ns < 1) throw std::invalid_argument("theorem42_size_bound: arguments must be positive");
  return {2 * L, 3 * ns * N};
}

}  // namespace normnet
