#include "normnet/cli.hpp"

#include "normnet/construct.hpp"
#include "normnet/netir_json.hpp"
#include "normnet/sobolev.hpp"
#include "normnet/verify.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace normnet::cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommon = {"seed", "out", "grid", "override_guardrails"};

// typed lookup with a default; wrong types are config errors
template <typename T>
T get(const Config& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::vector<int> get_int_list(const Config& cfg, const std::string& key, std::vector<int> fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (v.is_number_integer()) return {v.get<int>()};
  if (v.is_array()) {
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError("config key '" + key + "' must hold integers");
      out.push_back(e.get<int>());
    }
    return out;
  }
  if (v.is_string()) {
    std::vector<int> out;
    std::stringstream ss(v.get<std::string>());
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a comma-separated integer list");
      }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
    return out;
  }
  throw ConfigError("config key '" + key + "' must be an integer list");
}

std::vector<double> get_double_list(const Config& cfg, const std::string& key, std::vector<double> fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("config key '" + key + "' must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  if (v.is_string()) {
    std::vector<double> out;
    std::stringstream ss(v.get<std::string>());
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a comma-separated number list");
      }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
    return out;
  }
  throw ConfigError("config key '" + key + "' must be a number list");
}

std::uint64_t seed_of(const Config& cfg) { return get<std::uint64_t>(cfg, "seed", 0); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  Csv(std::uint64_t seed, std::vector<std::string> header) : seed_(seed), header_(std::move(header)) {}
  void row(std::vector<std::string> r) {
    if (r.size() != header_.size()) throw std::logic_error("Csv: row width mismatch");
    rows_.push_back(std::move(r));
  }
  void write(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "# seed=" << seed_ << "\n";
    auto line = [&f](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << r[i];
      f << "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
  }
  json to_json() const {
    json rows = json::array();
    for (const auto& r : rows_) {
      json o;
      for (std::size_t i = 0; i < r.size(); ++i) o[header_[i]] = r[i];
      rows.push_back(o);
    }
    return {{"seed", seed_}, {"rows", rows}};
  }

 private:
  std::uint64_t seed_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string out_dir(const Config& cfg) {
  const std::string dir = get<std::string>(cfg, "out", "out");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
  return dir;
}

bool guard(const Config& cfg) { return !get<bool>(cfg, "override_guardrails", false); }

std::uniform_real_distribution<double> U(-2, 2);

MatrixXd rand_mat(std::mt19937_64& rng, int r, int c) {
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = U(rng);
  return m;
}
VectorXd rand_vec(std::mt19937_64& rng, int n) { return rand_mat(rng, n, 1); }

double sat(double z) { return z / std::sqrt(1 + z * z); }
double sgn(double z) { return z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0); }

// plain forward pass for Sat nets
VectorXd sat_forward(const Net& net, VectorXd x) {
  for (std::size_t i = 0; i < net.affines().size(); ++i) {
    x = net.affine(i).W * x + net.affine(i).b;
    if (i + 1 < net.affines().size())
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = sat(x(k));
  }
  return x;
}

Net random_sat_net(std::mt19937_64& rng, const std::vector<int>& dims) {
  std::vector<Affine> a;
  std::vector<InterlayerOp> ops;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    a.emplace_back(rand_mat(rng, dims[i + 1], dims[i]), rand_vec(rng, dims[i + 1]));
    if (i + 2 < dims.size()) ops.push_back(Activation{ActivationKind::Sat});
  }
  return Net(a, ops);
}

std::function<double(double)> named_1d(const std::string& name, double c, double& L) {
  if (name == "identity") {
    L = 1.0;
    return [](double x) { return x; };
  }
  if (name == "cos") {
    L = std::numbers::pi;
    return [](double x) { return std::cos(std::numbers::pi * x); };
  }
  if (name == "abs") {
    L = 1.0;
    return [](double x) { return std::abs(x - 0.5); };
  }
  if (name == "constant") {
    L = 1.0;
    return [c](double) { return c; };
  }
  throw ConfigError("unknown target '" + name + "'");
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"compile", "approx", "sobolev", "pou", "negsearch", "verify"};
  return s;
}

const std::vector<std::string>& allowed_keys(const std::string& sub) {
  static const std::map<std::string, std::vector<std::string>> own = {
      {"compile", {"kind", "ns", "d", "width", "depth", "seq_len", "samples", "tol"}},
      {"approx", {"target", "eps", "method", "delta", "ns", "c"}},
      {"sobolev", {"d", "s", "k", "N", "delta", "p", "q", "target", "fd_step", "c"}},
      {"pou", {"d", "N", "k", "eps", "p", "q", "fd_step"}},
      {"negsearch", {"restarts", "refine_iters", "threshold"}},
      {"verify", {"net", "reference", "target", "k", "lo", "hi", "samples", "tol", "fd_step", "c"}},
  };
  static std::map<std::string, std::vector<std::string>> cache;
  auto it = own.find(sub);
  if (it == own.end()) throw ConfigError("unknown subcommand '" + sub + "'");
  auto& keys = cache[sub];
  if (keys.empty()) {
    keys = kCommon;
    keys.insert(keys.end(), it->second.begin(), it->second.end());
  }
  return keys;
}

Config load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  Config cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON");
  }
  if (!cfg.is_object()) throw ConfigError("config file must hold a flat JSON object");
  for (const auto& [k, v] : cfg.items())
    if (v.is_object()) throw ConfigError("config key '" + k + "' is nested; keys must be flat");
  return cfg;
}

json parse_flag_value(const std::string& text) {
  try {
    json v = json::parse(text);
    if (v.is_number() || v.is_boolean() || v.is_array()) return v;
  } catch (const json::parse_error&) {
  }
  return text;
}

CommandResult cmd_compile(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  const std::string kind = get<std::string>(cfg, "kind", "sign");
  const int ns = get<int>(cfg, "ns", kind == "sign" ? 2 : 3);
  const int d = get<int>(cfg, "d", 2);
  const int width = get<int>(cfg, "width", 4);
  const int depth = get<int>(cfg, "depth", 2);
  const int seq_len = get<int>(cfg, "seq_len", 5);
  const int samples = get<int>(cfg, "samples", 10000);
  const double tol = get<double>(cfg, "tol", 1e-10);
  if (d < 1 || width < 1 || depth < 1 || seq_len < 1 || samples < 1 || !(tol > 0))
    throw ConfigError("compile: d, width, depth, seq_len, samples and tol must be positive");
  std::mt19937_64 rng(seed);
  const Sampler sampler = uniform_sampler(Box::cube(d, -2, 2));
  Net saved;
  VectorFn target, compiled;
  Exclusion exclude = nullptr;
  Sampler sample = sampler;

  if (kind == "sign") {
    VectorXd w1 = rand_vec(rng, d), w2 = rand_vec(rng, 2), b2 = rand_vec(rng, 2);
    const double b1 = U(rng);
    saved = compile_sign_to_ln(w1, b1, w2, b2, ns);
    target = [=](const VectorXd& x) -> VectorXd { return w2 * sgn(w1.dot(x) + b1) + b2; };
    exclude = [=](const VectorXd& x) { return std::abs(w1.dot(x) + b1) < 1e-9; };
  } else if (kind == "phi") {
    VectorXd w1 = rand_vec(rng, d), w2 = rand_vec(rng, 2), b2 = rand_vec(rng, 2);
    const double b1 = U(rng);
    saved = compile_phi_to_ln(w1, b1, w2, b2, ns);
    target = [=](const VectorXd& x) -> VectorXd { return w2 * sat(w1.dot(x) + b1) + b2; };
  } else if (kind == "merge") {
    std::vector<Net> parts;
    for (int i = 0; i < width; ++i)
      parts.emplace_back(std::vector<Affine>{Affine(rand_mat(rng, ns, d), rand_vec(rng, ns)), Affine(rand_mat(rng, 2, ns), rand_vec(rng, 2))},
                         std::vector<InterlayerOp>{GroupedNormSpec{{NormKind::LN}, ns}});
    saved = merge_ln_sum_to_pln(split_pln_to_ln_sum(merge_ln_sum_to_pln(parts)));
    target = [parts](const VectorXd& x) -> VectorXd {
      VectorXd acc = VectorXd::Zero(2);
      for (const auto& p : parts) acc += p.eval(x);
      return acc;
    };
  } else if (kind == "lnls") {
    std::vector<Affine> a{Affine(rand_mat(rng, 2 * ns, d), rand_vec(rng, 2 * ns))};
    std::vector<InterlayerOp> ops;
    for (int l = 1; l < depth; ++l) a.emplace_back(rand_mat(rng, 2 * ns, 2 * ns), rand_vec(rng, 2 * ns));
    a.emplace_back(rand_mat(rng, 2, 2 * ns), rand_vec(rng, 2));
    for (int l = 0; l < depth; ++l) ops.push_back(GroupedNormSpec{{NormKind::LN}, ns});
    const Net ln(a, ops);
    saved = ls_net_to_ln_net(ln_net_to_ls_net(ln));
    target = [ln](const VectorXd& x) -> VectorXd { return ln.eval(x); };
  } else if (kind == "shallow" || kind == "deep") {
    std::vector<int> dims{d};
    for (int l = 0; l < (kind == "shallow" ? 1 : depth); ++l) dims.push_back(width);
    dims.push_back(2);
    const Net phi = random_sat_net(rng, dims);
    saved = kind == "shallow" ? compile_shallow_phi_net_to_pln(phi, ns) : compile_deep_phi_net_to_pln(phi, ns);
    target = [phi](const VectorXd& x) -> VectorXd { return sat_forward(phi, x); };
  } else if (kind == "ffn") {
    const SequenceAffine pre(rand_mat(rng, d, width), rand_vec(rng, width));
    const SequenceAffine post(rand_mat(rng, width, 2), rand_vec(rng, 2));
    const SequencePLN pln = compile_ffn_to_pln_sequence(pre, post, ns);
    saved = Net({pln.pre.token_map(), pln.post.token_map()}, {pln.norm});
    const Net token({pre.token_map(), post.token_map()}, {Activation{ActivationKind::Sat}});
    sample = uniform_sampler(Box::cube(d * seq_len, -2, 2));
    target = [=](const VectorXd& flat) -> VectorXd {
      VectorXd out(2 * seq_len);
      for (int i = 0; i < seq_len; ++i) out.segment(2 * i, 2) = sat_forward(token, flat.segment(i * d, d));
      return out;
    };
    compiled = [=](const VectorXd& flat) -> VectorXd {
      const MatrixXd X = Eigen::Map<const MatrixXd>(flat.data(), d, seq_len).transpose();
      const MatrixXd Y = eval_sequence(pln.pre, pln.norm, pln.post, X);
      VectorXd out(2 * seq_len);
      for (int i = 0; i < seq_len; ++i) out.segment(2 * i, 2) = Y.row(i).transpose();
      return out;
    };
  } else {
    throw ConfigError("compile: unknown kind '" + kind + "'");
  }
  if (!compiled) compiled = [saved](const VectorXd& x) -> VectorXd { return saved.eval(x); };

  const MatchResult m = exact_match(target, compiled, sample, samples, tol, exclude, seed + 1);
  const std::string dir = out_dir(cfg);
  CommandResult res;
  const std::string base = dir + "/compile_" + kind;
  save_net(saved, base + ".json", {{"seed", seed}, {"kind", kind}, {"ns", ns}});
  Csv csv(seed, {"kind", "ns", "samples", "excluded", "worst_abs_diff", "tol", "pass"});
  csv.row({kind, std::to_string(ns), std::to_string(m.checked), std::to_string(m.excluded), num(m.worst), num(tol),
           m.pass ? "1" : "0"});
  csv.write(base + ".csv");
  res.files = {base + ".json", base + ".csv"};
  res.lines.push_back("compile " + kind + ": worst |diff| = " + num(m.worst) + (m.pass ? " PASS" : " FAIL"));
  res.exit_code = m.pass ? kOk : kBoundFailure;
  return res;
}

CommandResult cmd_approx(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  const std::string target = get<std::string>(cfg, "target", "cos");
  const std::string method = get<std::string>(cfg, "method", "sign");
  const auto eps_list = get_double_list(cfg, "eps", {0.2, 0.1, 0.05});
  const double delta = get<double>(cfg, "delta", 1e-3);
  const int ns = get<int>(cfg, "ns", 2);
  const int grid = get<int>(cfg, "grid", 10000);
  double L = 1;
  const auto f = named_1d(target, get<double>(cfg, "c", 1.0), L);
  if (method != "sign" && method != "delta") throw ConfigError("approx: method must be sign or delta");
  if (grid < 64) throw ConfigError("approx: grid must be at least 64");
  const ScalarFn fx = [f](const VectorXd& x) { return f(x(0)); };
  const Box unit = Box::cube(1, 0, 1);
  Csv csv(seed, {"target", "method", "eps", "L", "N", "N_expected", "linf", "linf_pln", "pass"});
  CommandResult res;
  bool all = true;
  for (double eps : eps_list) {
    if (!(eps > 0)) throw ConfigError("approx: eps must be positive");
    const StaircaseSpec spec{L, eps, f};
    const int expected = static_cast<int>(std::floor(L / (2 * eps))) + 1;
    int N = 0;
    double linf = 0, linf_pln = 0;
    if (method == "sign") {
      const Staircase st = build_lipschitz_staircase(spec, ns);
      N = st.N;
      linf = sup_error(fx, scalar_output(st.sign_net), unit, grid);
      linf_pln = sup_error(fx, scalar_output(st.pln_net), unit, grid);
    } else {
      const DeltaStaircase st = build_staircase_delta(spec, delta, {}, ns);
      N = st.N;
      linf = linf_pln = sup_error(fx, scalar_output(st.net), unit, grid);
    }
    const bool pass = linf < eps && linf_pln < eps && N == expected;
    all = all && pass;
    csv.row({target, method, num(eps), num(L), std::to_string(N), std::to_string(expected), num(linf), num(linf_pln),
             pass ? "1" : "0"});
    res.lines.push_back("approx " + target + " eps=" + num(eps) + ": N=" + std::to_string(N) + " linf=" + num(linf) +
                        (pass ? " PASS" : " FAIL"));
  }
  const std::string path = out_dir(cfg) + "/approx_" + target + "_" + method + ".csv";
  csv.write(path);
  res.files = {path};
  res.exit_code = all ? kOk : kBoundFailure;
  return res;
}

CommandResult cmd_sobolev(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  SobolevSpec spec;
  spec.d = get<int>(cfg, "d", 1);
  spec.s = get<int>(cfg, "s", 2);
  spec.k = get<int>(cfg, "k", 0);
  spec.delta = get<double>(cfg, "delta", 0.5);
  spec.p = get<int>(cfg, "p", 2);
  spec.q = get<int>(cfg, "q", 2);
  const auto Ns = get_int_list(cfg, "N", {4, 8, 16});
  const std::string target = get<std::string>(cfg, "target", "sin2pi");
  const int grid = get<int>(cfg, "grid", spec.d == 1 ? 2000 : 64);
  const double fd_step = get<double>(cfg, "fd_step", 1e-3);
  if (guard(cfg)) {
    if (spec.d > 3) throw ConfigError("sobolev: guardrail d <= 3 (use --override-guardrails)");
    if (spec.s > 4) throw ConfigError("sobolev: guardrail s <= 4 (use --override-guardrails)");
    for (int N : Ns)
      if (N > 16) throw ConfigError("sobolev: guardrail N <= 16 (use --override-guardrails)");
  }
  if (grid < 64) throw ConfigError("sobolev: grid must be at least 64");
  SobolevTarget f;
  try {
    f = named_target(target, spec.d, get<double>(cfg, "c", 1.0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto rows = sobolev_rate_report(f, spec, Ns, grid, fd_step);
  Csv csv(seed, {"N", "Linf_measured", "Linf_bound", "Wk_measured", "Wk_bound", "width1", "width2", "runtime_s"});
  CommandResult res;
  bool all = true;
  for (const auto& r : rows) {
    const double wk = r.wk.at(spec.k);
    const bool pass = r.linf <= r.bounds.at("linf_bound") && wk <= r.bounds.at("wk_bound");
    all = all && pass;
    char rt[32];
    std::snprintf(rt, sizeof rt, "%.3f", r.wall_seconds);
    csv.row({std::to_string(r.meta["N"].get<int>()), num(r.linf), num(r.bounds.at("linf_bound")), num(wk),
             num(r.bounds.at("wk_bound")), num(r.bounds.at("width1")), num(r.bounds.at("width2")), rt});
    res.lines.push_back("sobolev N=" + std::to_string(r.meta["N"].get<int>()) + ": linf=" + num(r.linf) +
                        " bound=" + num(r.bounds.at("linf_bound")) + (pass ? " PASS" : " FAIL"));
  }
  const std::string path = out_dir(cfg) + "/sobolev_" + target + "_d" + std::to_string(spec.d) + "_s" +
                           std::to_string(spec.s) + "_k" + std::to_string(spec.k) + ".csv";
  csv.write(path);
  res.files = {path};
  res.exit_code = all ? kOk : kBoundFailure;
  return res;
}

CommandResult cmd_pou(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  const int d = get<int>(cfg, "d", 1);
  const int N = get<int>(cfg, "N", 8);
  const int k = get<int>(cfg, "k", 0);
  const double eps = get<double>(cfg, "eps", 1e-3);
  const int p = get<int>(cfg, "p", 2), q = get<int>(cfg, "q", 2);
  const int grid = get<int>(cfg, "grid", 64);
  const double fd_step = get<double>(cfg, "fd_step", -1.0);
  if (guard(cfg) && (d > 3 || N > 32)) throw ConfigError("pou: guardrail d <= 3, N <= 32 (use --override-guardrails)");
  if (grid < 64) throw ConfigError("pou: grid must be at least 64");
  const PartitionParams P = choose_alpha(d, N, k, eps, p, q);
  const AlphaCheck ac = check_alpha(P);
  const PartitionDiagnostics D = partition_diagnostics(P, grid, fd_step);
  Csv csv(seed, {"check", "d", "N", "k", "eps", "alpha", "measured", "bound", "pass"});
  auto add = [&](const std::string& name, double measured, double bound) {
    const bool ok = measured <= bound;
    csv.row({name, std::to_string(d), std::to_string(N), std::to_string(k), num(eps), num(P.alpha), num(measured), num(bound),
             ok ? "1" : "0"});
    return ok;
  };
  bool all = ac.ok;
  all = add("alpha_tail", ac.tail, eps) && all;
  all = add("alpha_derivative", ac.worst_deriv, eps) && all;
  all = add("telescoping", D.telescoping, 1e-14) && all;
  all = add("near_sum", D.near_worst, D.near_bound) && all;
  all = add("far_terms", D.far_worst, D.far_bound) && all;
  const std::string path = out_dir(cfg) + "/pou_d" + std::to_string(d) + "_N" + std::to_string(N) + "_k" +
                           std::to_string(k) + ".csv";
  csv.write(path);
  CommandResult res;
  res.files = {path};
  res.lines.push_back("pou: alpha=" + num(P.alpha) + " near=" + num(D.near_worst) + "/" + num(D.near_bound) +
                      " far=" + num(D.far_worst) + "/" + num(D.far_bound) + (all ? " PASS" : " FAIL"));
  res.exit_code = all ? kOk : kBoundFailure;
  return res;
}

CommandResult cmd_negsearch(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  const int restarts = get<int>(cfg, "restarts", 10000);
  const int refine = get<int>(cfg, "refine_iters", 200);
  const int grid = get<int>(cfg, "grid", 400);
  const double threshold = get<double>(cfg, "threshold", 0.95);
  if (restarts < 1 || refine < 0 || grid < 64) throw ConfigError("negsearch: need restarts >= 1, refine_iters >= 0, grid >= 64");
  const NegSearchResult r = theorem31_search(restarts, refine, grid, seed);
  const bool pass = r.best >= threshold;
  Csv csv(seed, {"restarts", "grid", "best", "best_smooth", "best_sign", "a", "b", "c", "e", "g", "b0", "sign_breakpoint",
                 "threshold", "pass"});
  std::vector<std::string> row{std::to_string(restarts), std::to_string(grid), num(r.best), num(r.best_smooth),
                               num(r.best_sign)};
  for (double v : r.smooth_params) row.push_back(num(v));
  row.insert(row.end(), {num(r.sign_breakpoint), num(threshold), pass ? "1" : "0"});
  csv.row(row);
  const std::string path = out_dir(cfg) + "/negsearch.csv";
  csv.write(path);
  CommandResult res;
  res.files = {path};
  res.lines.push_back("negsearch: best sup error = " + num(r.best) + (pass ? " PASS" : " FAIL"));
  res.exit_code = pass ? kOk : kBoundFailure;
  return res;
}

CommandResult cmd_verify(const Config& cfg) {
  const std::uint64_t seed = seed_of(cfg);
  const std::string path = get<std::string>(cfg, "net", "");
  if (path.empty()) throw ConfigError("verify: 'net' is required");
  Net net;
  try {
    net = load_net(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("verify: cannot load net: ") + e.what());
  }
  const int d = static_cast<int>(net.input_dim());
  const Box box = Box::cube(d, get<double>(cfg, "lo", 0.0), get<double>(cfg, "hi", 1.0));
  const double tol = get<double>(cfg, "tol", std::numeric_limits<double>::infinity());
  CommandResult res;
  Csv csv(seed, {"mode", "points", "k", "measured", "tol", "pass"});
  bool pass = true;
  if (cfg.contains("reference")) {
    Net ref;
    try {
      ref = load_net(get<std::string>(cfg, "reference", ""));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("verify: cannot load reference: ") + e.what());
    }
    if (ref.input_dim() != net.input_dim() || ref.output_dim() != net.output_dim())
      throw ConfigError("verify: net and reference shapes differ");
    const int samples = get<int>(cfg, "samples", 10000);
    const MatchResult m = exact_match([&](const VectorXd& x) -> VectorXd { return net.eval(x); },
                                      [&](const VectorXd& x) -> VectorXd { return ref.eval(x); }, uniform_sampler(box),
                                      samples, std::isfinite(tol) ? tol : 1e-10, nullptr, seed);
    pass = m.pass;
    csv.row({"reference", std::to_string(m.checked), "0", num(m.worst), num(std::isfinite(tol) ? tol : 1e-10), pass ? "1" : "0"});
    res.lines.push_back("verify vs reference: worst |diff| = " + num(m.worst) + (pass ? " PASS" : " FAIL"));
  } else {
    const std::string target = get<std::string>(cfg, "target", "");
    if (target.empty()) throw ConfigError("verify: give either 'reference' or 'target'");
    const int grid = get<int>(cfg, "grid", d == 1 ? 2000 : 64);
    const int k = get<int>(cfg, "k", 0);
    SobolevTarget f;
    try {
      f = named_target(target, d, get<double>(cfg, "c", 1.0));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const ScalarFn tf = [&f](const VectorXd& x) { return f(x); };
    const double err = sobolev_error(tf, scalar_output(net), k, box, grid, get<double>(cfg, "fd_step", -1.0));
    pass = err <= tol;
    csv.row({"target:" + target, std::to_string(grid), std::to_string(k), num(err), num(tol), pass ? "1" : "0"});
    res.lines.push_back("verify vs " + target + ": W^{" + std::to_string(k) + ",inf} error = " + num(err) +
                        (pass ? " PASS" : " FAIL"));
  }
  const std::string dir = out_dir(cfg);
  csv.write(dir + "/verify.csv");
  json report = csv.to_json();
  report["net"] = path;
  std::ofstream(dir + "/verify.json") << report.dump(1) << "\n";
  res.files = {dir + "/verify.csv", dir + "/verify.json"};
  res.exit_code = pass ? kOk : kBoundFailure;
  return res;
}

CommandResult run(const std::string& sub, const Config& cfg) {
  CommandResult res;
  try {
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = allowed_keys(sub);
    for (const auto& [k, v] : cfg.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError(sub + ": unknown config key '" + k + "'");
    if (sub == "compile") return cmd_compile(cfg);
    if (sub == "approx") return cmd_approx(cfg);
    if (sub == "sobolev") return cmd_sobolev(cfg);
    if (sub == "pou") return cmd_pou(cfg);
    if (sub == "negsearch") return cmd_negsearch(cfg);
    return cmd_verify(cfg);
  } catch (const ConfigError& e) {
    res.exit_code = kConfigError;
    res.lines.push_back(std::string("config error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    res.exit_code = kConfigError;
    res.lines.push_back(std::string("invalid argument: ") + e.what());
  }
  return res;
}

}  // namespace normnet::cli
