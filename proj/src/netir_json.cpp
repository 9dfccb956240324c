#include "normnet/netir_json.hpp"

#include <fstream>
#include <stdexcept>

namespace normnet {

using nlohmann::json;

namespace {

json affine_to_json(const Affine& a) {
  json w = json::array();
  for (Eigen::Index i = 0; i < a.W.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.W.cols(); ++j) row.push_back(a.W(i, j));
    w.push_back(std::move(row));
  }
  json b = json::array();
  for (Eigen::Index i = 0; i < a.b.size(); ++i) b.push_back(a.b(i));
  return {{"affine", {{"w", w}, {"b", b}}}};
}

json op_to_json(const InterlayerOp& op) {
  if (auto* a = std::get_if<Activation>(&op)) {
    static const char* names[] = {"sign", "sat", "phi_pq", "tanh", "relu"};
    json o = {{"activation", names[static_cast<int>(a->kind)]}};
    if (a->kind == ActivationKind::PhiPQ) {
      o["p"] = a->p;
      o["q"] = a->q;
    }
    return {{"op", o}};
  }
  const auto& g = std::get<GroupedNormSpec>(op);
  static const char* kinds[] = {"ln", "ls", "ln_delta", "pq"};
  json o = {{"kind", kinds[static_cast<int>(g.norm.kind)]}, {"ns", g.ns}};
  if (g.norm.kind == NormKind::LNDelta) o["delta"] = g.norm.delta;
  if (g.norm.kind == NormKind::PQ) {
    o["p"] = g.norm.p;
    o["q"] = g.norm.q;
  }
  return {{"op", o}};
}

Affine affine_from_json(const json& j, Eigen::Index in_dim) {
  const auto& w = j.at("w");
  const auto& b = j.at("b");
  const Eigen::Index rows = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd W(rows, in_dim);
  if (static_cast<Eigen::Index>(w.size()) != rows) throw std::invalid_argument("netir json: w/b row mismatch");
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = w.at(i);
    if (static_cast<Eigen::Index>(row.size()) != in_dim) throw std::invalid_argument("netir json: bad row length");
    for (Eigen::Index k = 0; k < in_dim; ++k) W(i, k) = row.at(k).get<double>();
  }
  Eigen::VectorXd bv(rows);
  for (Eigen::Index i = 0; i < rows; ++i) bv(i) = b.at(i).get<double>();
  return Affine(std::move(W), std::move(bv));
}

InterlayerOp op_from_json(const json& o) {
  if (o.contains("activation")) {
    const auto name = o.at("activation").get<std::string>();
    Activation a;
    if (name == "sign") a.kind = ActivationKind::Sign;
    else if (name == "sat") a.kind = ActivationKind::Sat;
    else if (name == "phi_pq") {
      a.kind = ActivationKind::PhiPQ;
      a.p = o.at("p").get<int>();
      a.q = o.at("q").get<int>();
      check_pq(a.p, a.q);
    } else if (name == "tanh") a.kind = ActivationKind::Tanh;
    else if (name == "relu") a.kind = ActivationKind::ReLU;
    else throw std::invalid_argument("netir json: unknown activation " + name);
    return a;
  }
  GroupedNormSpec g;
  const auto kind = o.at("kind").get<std::string>();
  g.ns = o.at("ns").get<int>();
  if (kind == "ln") g.norm.kind = NormKind::LN;
  else if (kind == "ls") g.norm.kind = NormKind::LS;
  else if (kind == "ln_delta") {
    g.norm.kind = NormKind::LNDelta;
    g.norm.delta = o.at("delta").get<double>();
  } else if (kind == "pq") {
    g.norm.kind = NormKind::PQ;
    g.norm.p = o.at("p").get<int>();
    g.norm.q = o.at("q").get<int>();
    check_pq(g.norm.p, g.norm.q);
  } else
    throw std::invalid_argument("netir json: unknown norm kind " + kind);
  return g;
}

}  // namespace

json to_json(const Net& net) {
  json layers = json::array();
  for (std::size_t i = 0; i < net.affines().size(); ++i) {
    layers.push_back(affine_to_json(net.affine(i)));
    if (i < net.ops().size()) layers.push_back(op_to_json(net.op(i)));
  }
  return {{"version", 1}, {"input_dim", net.input_dim()}, {"layers", layers}};
}

Net net_from_json(const json& j) {
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("netir json: unsupported version");
  Eigen::Index dim = j.at("input_dim").get<Eigen::Index>();
  std::vector<Affine> affines;
  std::vector<InterlayerOp> ops;
  bool expect_affine = true;
  for (const auto& layer : j.at("layers")) {
    if (expect_affine) {
      if (!layer.contains("affine")) throw std::invalid_argument("netir json: expected affine layer");
      affines.push_back(affine_from_json(layer.at("affine"), dim));
      dim = affines.back().out_dim();
    } else {
      if (!layer.contains("op")) throw std::invalid_argument("netir json: expected op layer");
      ops.push_back(op_from_json(layer.at("op")));
    }
    expect_affine = !expect_affine;
  }
  return Net(std::move(affines), std::move(ops));
}

void save_net(const Net& net, const std::string& path, const json& meta) {
  json j = to_json(net);
  if (!meta.is_null()) j["meta"] = meta;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

Net load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return net_from_json(json::parse(in));
}

}  // namespace normnet
