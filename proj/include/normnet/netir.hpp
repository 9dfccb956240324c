#pragma once

#include "normnet/kernels.hpp"

#include <Eigen/Core>

#include <string>
#include <variant>
#include <vector>

namespace normnet {

template <typename Scalar>
struct AffineMap {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix W;
  Vector b;

  AffineMap() = default;
  AffineMap(Matrix w, Vector bias) : W(std::move(w)), b(std::move(bias)) {
    if (W.rows() != b.size()) throw std::invalid_argument("AffineMap: rows of W must equal length of b");
  }

  static AffineMap identity(Eigen::Index n) { return AffineMap(Matrix::Identity(n, n), Vector::Zero(n)); }

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }

  template <typename Derived>
  Vector operator()(const Eigen::MatrixBase<Derived>& x) const {
    return W * x + b;
  }

  template <typename Other>
  AffineMap<Other> cast() const {
    return AffineMap<Other>(W.template cast<Other>(), b.template cast<Other>());
  }
};

// this ∘ inner
template <typename Scalar>
AffineMap<Scalar> compose(const AffineMap<Scalar>& outer, const AffineMap<Scalar>& inner) {
  if (outer.in_dim() != inner.out_dim()) throw std::invalid_argument("compose: dimension mismatch");
  return AffineMap<Scalar>(outer.W * inner.W, outer.W * inner.b + outer.b);
}

using InterlayerOp = std::variant<Activation, GroupedNormSpec>;

bool same_class(const InterlayerOp& a, const InterlayerOp& b);
std::string describe(const InterlayerOp& op);

template <typename Scalar>
class Network {
 public:
  using Affine = AffineMap<Scalar>;
  using Vector = typename Affine::Vector;
  using Matrix = typename Affine::Matrix;

  Network() = default;
  explicit Network(Affine a) : affines_{std::move(a)} {}
  Network(std::vector<Affine> affines, std::vector<InterlayerOp> ops)
      : affines_(std::move(affines)), ops_(std::move(ops)) {
    validate();
  }

  const std::vector<Affine>& affines() const { return affines_; }
  const std::vector<InterlayerOp>& ops() const { return ops_; }
  const Affine& affine(std::size_t i) const { return affines_.at(i); }
  const InterlayerOp& op(std::size_t i) const { return ops_.at(i); }

  int depth() const { return static_cast<int>(ops_.size()); }
  int width() const {
    Eigen::Index w = 0;
    for (std::size_t i = 0; i + 1 < affines_.size(); ++i) w = std::max(w, affines_[i].out_dim());
    return static_cast<int>(w);
  }
  std::vector<int> hidden_widths() const {
    std::vector<int> w;
    for (std::size_t i = 0; i + 1 < affines_.size(); ++i) w.push_back(static_cast<int>(affines_[i].out_dim()));
    return w;
  }
  Eigen::Index input_dim() const { return affines_.front().in_dim(); }
  Eigen::Index output_dim() const { return affines_.back().out_dim(); }

  void validate() const {
    if (affines_.empty()) throw std::invalid_argument("Network: needs at least one affine map");
    if (affines_.size() != ops_.size() + 1)
      throw std::invalid_argument("Network: affine maps and interlayer ops must alternate");
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      if (affines_[i].out_dim() != affines_[i + 1].in_dim())
        throw std::invalid_argument("Network: dimensions do not chain at layer " + std::to_string(i));
      if (auto* g = std::get_if<GroupedNormSpec>(&ops_[i])) {
        if (g->ns < 1 || affines_[i].out_dim() % g->ns != 0)
          throw std::invalid_argument("Network: group size does not divide hidden width at layer " + std::to_string(i));
      }
      if (!same_class(ops_[i], ops_[0]))
        throw std::invalid_argument("Network: interlayer ops must share one class");
    }
  }

  template <typename Derived>
  Vector eval(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("eval: input dimension mismatch");
    Vector h = affines_[0](x);
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      h = apply_op(ops_[i], h);
      h = affines_[i + 1](h);
    }
    return h;
  }

  static Vector apply_op(const InterlayerOp& op, const Vector& h) {
    if (auto* a = std::get_if<Activation>(&op)) return activate(*a, h);
    return apply_grouped(std::get<GroupedNormSpec>(op), h);
  }

  template <typename Other>
  Network<Other> cast() const {
    std::vector<AffineMap<Other>> a;
    for (const auto& m : affines_) a.push_back(m.template cast<Other>());
    return Network<Other>(std::move(a), ops_);
  }

 private:
  std::vector<Affine> affines_;
  std::vector<InterlayerOp> ops_;
};

using Affine = AffineMap<double>;
using Net = Network<double>;

// outer ∘ inner, fusing the boundary affine maps.
template <typename Scalar>
Network<Scalar> compose(const Network<Scalar>& outer, const Network<Scalar>& inner) {
  std::vector<AffineMap<Scalar>> a(inner.affines().begin(), inner.affines().end() - 1);
  a.push_back(compose(outer.affines().front(), inner.affines().back()));
  a.insert(a.end(), outer.affines().begin() + 1, outer.affines().end());
  std::vector<InterlayerOp> ops(inner.ops());
  ops.insert(ops.end(), outer.ops().begin(), outer.ops().end());
  return Network<Scalar>(std::move(a), std::move(ops));
}

template <typename Scalar>
Network<Scalar> precompose(const Network<Scalar>& net, const AffineMap<Scalar>& pre) {
  return compose(net, Network<Scalar>(pre));
}

template <typename Scalar>
Network<Scalar> postcompose(const AffineMap<Scalar>& post, const Network<Scalar>& net) {
  return compose(Network<Scalar>(post), net);
}

// Token-wise affine map: row x ↦ x W + b.
struct SequenceAffine {
  Eigen::MatrixXd W;  // d x m
  Eigen::VectorXd b;  // m

  SequenceAffine() = default;
  SequenceAffine(Eigen::MatrixXd w, Eigen::VectorXd bias) : W(std::move(w)), b(std::move(bias)) {
    if (W.cols() != b.size()) throw std::invalid_argument("SequenceAffine: columns of W must equal length of b");
  }
  Affine token_map() const { return Affine(W.transpose(), b); }
  static SequenceAffine from_token_map(const Affine& a) { return SequenceAffine(a.W.transpose(), a.b); }
};

Eigen::MatrixXd eval_sequence(const SequenceAffine& pre, const InterlayerOp& mid, const SequenceAffine& post,
                              const Eigen::MatrixXd& X);

}  // namespace normnet
