#include "normnet/cli.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

namespace {

struct Flag {
  const char* name;
  const char* help;
};

const std::map<std::string, std::vector<Flag>> kFlags = {
    {"compile",
     {{"--kind", "sign | phi | merge | lnls | shallow | deep | ffn"},
      {"--ns", "normalization group size"},
      {"--d", "input dimension"},
      {"--width", "hidden width, or number of LN parts for merge"},
      {"--depth", "number of hidden layers"},
      {"--seq-len", "sequence length for ffn"},
      {"--samples", "number of random inputs"},
      {"--tol", "exact-match tolerance"}}},
    {"approx",
     {{"--target", "identity | cos | abs | constant"},
      {"--eps", "tolerance or comma-separated list"},
      {"--method", "sign | delta"},
      {"--delta", "denominator offset for the delta staircase"},
      {"--ns", "normalization group size"},
      {"--c", "value of the constant target"}}},
    {"sobolev",
     {{"--d", "input dimension"},
      {"--s", "smoothness"},
      {"--k", "Sobolev order of the error"},
      {"--N", "cubes per axis, comma-separated"},
      {"--delta", "slack in the error bound"},
      {"--p", "activation exponent p"},
      {"--q", "activation exponent q"},
      {"--target", "sin2pi | exp | constant"},
      {"--fd-step", "finite-difference step"},
      {"--c", "value of the constant target"}}},
    {"pou",
     {{"--d", "input dimension"},
      {"--N", "cubes per axis"},
      {"--k", "Sobolev order"},
      {"--eps", "tolerance used to choose alpha"},
      {"--p", "activation exponent p"},
      {"--q", "activation exponent q"},
      {"--fd-step", "finite-difference step"}}},
    {"negsearch",
     {{"--restarts", "random restarts"}, {"--refine-iters", "golden-section steps per restart"}, {"--threshold", "pass level"}}},
    {"verify",
     {{"--net", "NetIR JSON file"},
      {"--reference", "second NetIR file to compare against"},
      {"--target", "named function to compare against"},
      {"--k", "Sobolev order"},
      {"--lo", "box lower corner"},
      {"--hi", "box upper corner"},
      {"--samples", "random samples for reference mode"},
      {"--tol", "pass tolerance"},
      {"--fd-step", "finite-difference step"},
      {"--c", "value of the constant target"}}},
};

std::string key_of(const std::string& flag) {
  std::string k = flag.substr(2);
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace normnet::cli;
  CLI::App app{"normnet: exact normalization-network compilers and approximation checks"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_path;
  std::map<std::string, bool> override_flag;
  std::map<std::string, CLI::App*> subs;

  for (const auto& sub : subcommands()) {
    CLI::App* s = app.add_subcommand(sub);
    subs[sub] = s;
    auto& v = values[sub];
    s->add_option("--config", config_path[sub], "JSON file with flat keys; flags override it");
    s->add_option("--seed", v["seed"], "random seed (u64)");
    s->add_option("--out", v["out"], "output directory");
    s->add_option("--grid", v["grid"], "grid intervals per axis");
    s->add_flag("--override-guardrails", override_flag[sub], "lift the desk-scale limits");
    for (const auto& f : kFlags.at(sub)) s->add_option(f.name, v[key_of(f.name)], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (const auto& [name, s] : subs) {
    if (!s->parsed()) continue;
    Config cfg = Config::object();
    try {
      if (!config_path[name].empty()) cfg = load_config_file(config_path[name]);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kConfigError;
    }
    for (const auto& [key, text] : values[name]) {
      const std::string flag = "--" + key;
      std::string dashed = flag;
      for (char& c : dashed)
        if (c == '_') c = '-';
      if (s->count(dashed) > 0) cfg[key] = parse_flag_value(text);
    }
    if (override_flag[name]) cfg["override_guardrails"] = true;
    if (cfg.contains("out") && !cfg["out"].is_string()) cfg["out"] = cfg["out"].dump();
    const CommandResult r = run(name, cfg);
    for (const auto& line : r.lines) (r.exit_code == kConfigError ? std::cerr : std::cout) << line << "\n";
    for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
    return r.exit_code;
  }
  return kConfigError;
}
