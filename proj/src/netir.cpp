#include "normnet/netir.hpp"

namespace normnet {

bool same_class(const InterlayerOp& a, const InterlayerOp& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<Activation>(&a)) {
    const auto& y = std::get<Activation>(b);
    if (x->kind != y.kind) return false;
    return x->kind != ActivationKind::PhiPQ || (x->p == y.p && x->q == y.q);
  }
  const auto& x = std::get<GroupedNormSpec>(a);
  const auto& y = std::get<GroupedNormSpec>(b);
  if (x.ns != y.ns || x.norm.kind != y.norm.kind) return false;
  if (x.norm.kind == NormKind::LNDelta) return x.norm.delta == y.norm.delta;
  if (x.norm.kind == NormKind::PQ) return x.norm.p == y.norm.p && x.norm.q == y.norm.q;
  return true;
}

std::string describe(const InterlayerOp& op) {
  if (auto* a = std::get_if<Activation>(&op)) {
    switch (a->kind) {
      case ActivationKind::Sign: return "sign";
      case ActivationKind::Sat: return "sat";
      case ActivationKind::PhiPQ: return "phi_pq(" + std::to_string(a->p) + "," + std::to_string(a->q) + ")";
      case ActivationKind::Tanh: return "tanh";
      case ActivationKind::ReLU: return "relu";
    }
  }
  const auto& g = std::get<GroupedNormSpec>(op);
  std::string k;
  switch (g.norm.kind) {
    case NormKind::LN: k = "ln"; break;
    case NormKind::LS: k = "ls"; break;
    case NormKind::LNDelta: k = "ln_delta"; break;
    case NormKind::PQ: k = "pq"; break;
  }
  return k + "(ns=" + std::to_string(g.ns) + ")";
}

Eigen::MatrixXd eval_sequence(const SequenceAffine& pre, const InterlayerOp& mid, const SequenceAffine& post,
                              const Eigen::MatrixXd& X) {
  if (X.cols() != pre.W.rows()) throw std::invalid_argument("eval_sequence: token dimension mismatch");
  const Net token({pre.token_map(), post.token_map()}, {mid});
  Eigen::MatrixXd Y(X.rows(), token.output_dim());
  for (Eigen::Index i = 0; i < X.rows(); ++i) Y.row(i) = token.eval(X.row(i).transpose()).transpose();
  return Y;
}

}  // namespace normnet
