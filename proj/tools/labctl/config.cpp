#include "labctl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <type_traits>

#include "mfregret/errors.hpp"

namespace labctl {

using mfregret::InputError;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw InputError("config: " + key + " expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw InputError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw InputError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) throw InputError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
    kv.set(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string to_string(Scenario s) { return s == Scenario::periodic ? "periodic" : "nonlinear"; }

ExperimentConfig ExperimentConfig::from(const KeyValues& kv) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto dbl = [](double& dst) -> Setter { return [&dst](auto& k, auto& v) { dst = parse_double(k, v); }; };
  auto cnt = [](std::size_t& dst) -> Setter {
    return [&dst](auto& k, auto& v) { dst = static_cast<std::size_t>(parse_u64(k, v)); };
  };
  auto flag = [](bool& dst) -> Setter { return [&dst](auto& k, auto& v) { dst = parse_bool(k, v); }; };
  auto ou = [&](mfregret::OuParams& p, const std::string& prefix, std::map<std::string, Setter>& m) {
    m[prefix + ".rate"] = dbl(p.rate);
    m[prefix + ".mean"] = dbl(p.mean);
    m[prefix + ".vol"] = dbl(p.vol);
  };
  auto truncation = [](mfregret::TruncationSpec& t) -> Setter {
    return [&t](auto& k, auto& v) {
      const double level = parse_double(k, v);
      t.enabled = level > 0.0;
      t.level = level > 0.0 ? level : 1.0;
    };
  };

  std::optional<double> onpgd_trunc;
  std::map<std::string, Setter> m;
  m["experiment"] = [&](auto&, auto& v) { c.experiment = v; };
  m["scenario"] = [&](auto& k, auto& v) {
    if (v == "periodic") c.scenario = Scenario::periodic;
    else if (v == "nonlinear") c.scenario = Scenario::nonlinear;
    else throw InputError("config: " + k + " must be periodic or nonlinear");
  };
  m["trials"] = cnt(c.trials);
  m["seed"] = [&](auto& k, auto& v) { c.seed = parse_u64(k, v); };
  m["threads"] = cnt(c.threads);
  m["out"] = [&](auto&, auto& v) { c.out_dir = v; };

  m["data.dt"] = [&](auto& k, auto& v) { c.periodic.dt = c.nonlinear.dt = parse_double(k, v); };
  m["data.steps"] = [&](auto& k, auto& v) {
    c.periodic.steps = c.nonlinear.steps = static_cast<std::size_t>(parse_u64(k, v));
  };
  m["periodic.h"] = dbl(c.periodic.h);
  ou(c.periodic.covariate, "periodic.x", m);
  ou(c.periodic.noise, "periodic.xi", m);
  m["periodic.response_truncation"] = truncation(c.periodic.response);
  m["nonlinear.inputs"] = cnt(c.nonlinear.n_inputs);
  ou(c.nonlinear.covariate, "nonlinear.x", m);
  ou(c.nonlinear.noise, "nonlinear.xi", m);
  m["nonlinear.neurons"] = cnt(c.nonlinear.neurons);
  m["nonlinear.output_scale"] = dbl(c.nonlinear.output_scale);
  m["nonlinear.phi_rate"] = dbl(c.nonlinear.phi_rate);
  m["nonlinear.phi_vol"] = dbl(c.nonlinear.phi_vol);
  m["nonlinear.phi_sd"] = dbl(c.nonlinear.phi_sd);
  m["nonlinear.response_truncation"] = truncation(c.nonlinear.response);

  m["onpgd.particles"] = cnt(c.onpgd.particles);
  m["onpgd.lambda"] = dbl(c.onpgd.lambda);
  m["onpgd.beta"] = dbl(c.onpgd.beta);
  m["onpgd.self_interaction"] = flag(c.onpgd.self_interaction);
  m["onpgd.init_sd"] = [&](auto& k, auto& v) {
    if (v == "prior") c.onpgd.init_sd.reset();
    else c.onpgd.init_sd = parse_double(k, v);
  };
  m["onpgd.output_truncation"] = [&](auto& k, auto& v) { onpgd_trunc = parse_double(k, v); };

  m["is.n_is"] = cnt(c.is.n_is);
  m["is.root_tol"] = dbl(c.is.root_tol);
  m["is.max_bracket_expansions"] = cnt(c.is.max_bracket_expansions);
  m["is.ess_warn"] = dbl(c.is.ess_warn);
  m["is.corrupt_phi_sign"] = flag(c.is.corrupt_phi_sign);

  m["offline.iters"] = cnt(c.offline.iters);
  m["offline.learning_rate"] = dbl(c.offline.learning_rate);
  m["offline.lambda"] = dbl(c.offline.lambda);
  m["offline.particles"] = cnt(c.offline.particles);
  m["offline.init_sd"] = dbl(c.offline.init_sd);
  m["offline.divergence_threshold"] = dbl(c.offline.divergence_threshold);

  m["regret.eval_stride"] = cnt(c.eval_stride);
  m["regret.with_static"] = flag(c.with_static);
  m["regret.rho_samples"] = cnt(c.rho_samples);
  m["regret.oos"] = flag(c.sweep_oos);
  m["rho.damping"] = dbl(c.rho.damping);
  m["rho.tol"] = dbl(c.rho.tol);
  m["rho.max_iters"] = cnt(c.rho.max_iters);

  m["sweep.particles"] = [&](auto& k, auto& v) {
    c.sweep_particles.clear();
    for (const auto& s : split_list(v)) c.sweep_particles.push_back(static_cast<std::size_t>(parse_u64(k, s)));
  };
  m["sweep.beta"] = [&](auto& k, auto& v) {
    c.sweep_beta.clear();
    for (const auto& s : split_list(v)) c.sweep_beta.push_back(parse_double(k, s));
  };
  m["sweep.lambda"] = [&](auto& k, auto& v) {
    c.sweep_lambda.clear();
    for (const auto& s : split_list(v)) c.sweep_lambda.push_back(parse_double(k, s));
  };

  m["verify.instances"] = cnt(c.verify.instances);
  m["verify.n_is"] = cnt(c.verify.n_is);
  m["verify.grid_points"] = cnt(c.verify.grid_points);
  m["verify.grid_half_width"] = dbl(c.verify.grid_half_width);
  m["verify.fd_step"] = dbl(c.verify.fd_step);
  m["verify.gap_tol"] = dbl(c.verify.gap_tol);
  m["verify.dym_tol"] = dbl(c.verify.dym_tol);
  m["verify.is_tol"] = dbl(c.verify.is_tol);
  m["verify.constants_tol"] = dbl(c.verify.constants_tol);

  for (const auto& [key, value] : kv.entries()) {
    const auto it = m.find(key);
    if (it == m.end()) throw InputError("config: unknown key '" + key + "'");
    it->second(key, value);
  }

  if (onpgd_trunc) {
    const mfregret::TruncationSpec t{*onpgd_trunc > 0.0, *onpgd_trunc > 0.0 ? *onpgd_trunc : 1.0};
    c.onpgd.neuron = mfregret::Neuron(t);
  }
  // The offline baseline shares the online network unless told otherwise.
  if (!kv.has("offline.lambda")) c.offline.lambda = c.onpgd.lambda;
  if (!kv.has("offline.particles")) c.offline.particles = c.onpgd.particles;
  if (!kv.has("offline.init_sd")) {
    if (c.onpgd.init_sd || (c.onpgd.lambda > 0.0 && c.onpgd.beta > 0.0)) {
      c.offline.init_sd = c.onpgd.init_stddev();
    }
  }
  c.offline.neuron = c.onpgd.neuron;
  c.onpgd.dt = c.scenario == Scenario::periodic ? c.periodic.dt : c.nonlinear.dt;
  return c;
}

void ExperimentConfig::validate() const {
  if (trials == 0) throw InputError("config: trials must be >= 1");
  if (threads == 0) throw InputError("config: threads must be >= 1");
  periodic.validate();
  nonlinear.validate();
  onpgd.validate();
  is.validate();
  offline.validate();
  rho.validate();
  if (eval_stride == 0) throw InputError("config: regret.eval_stride must be >= 1");
  for (double b : sweep_beta) {
    if (!(b > 0.0)) throw InputError("config: sweep.beta values must be positive");
  }
  for (double l : sweep_lambda) {
    if (!(l > 0.0)) throw InputError("config: sweep.lambda values must be positive");
  }
  for (std::size_t n : sweep_particles) {
    if (n == 0) throw InputError("config: sweep.particles values must be >= 1");
  }
}

std::filesystem::path ExperimentConfig::output_root() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string ExperimentConfig::dump() const {
  std::ostringstream o;
  auto num = [](double v) { return shortest(v); };
  auto join = [&](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v[i])>>) s += shortest(v[i]);
      else s += std::to_string(v[i]);
    }
    return s;
  };
  o << "experiment = " << experiment << "\n"
    << "scenario = " << to_string(scenario) << "\n"
    << "trials = " << trials << "\n"
    << "seed = " << seed << "\n"
    << "data.dt = " << num(scenario == Scenario::periodic ? periodic.dt : nonlinear.dt) << "\n"
    << "data.steps = " << (scenario == Scenario::periodic ? periodic.steps : nonlinear.steps) << "\n"
    << "onpgd.particles = " << onpgd.particles << "\n"
    << "onpgd.lambda = " << num(onpgd.lambda) << "\n"
    << "onpgd.beta = " << num(onpgd.beta) << "\n"
    << "onpgd.self_interaction = " << (onpgd.self_interaction ? "true" : "false") << "\n"
    << "onpgd.init_sd = ";
  if (onpgd.init_sd) o << num(*onpgd.init_sd);
  else o << "prior";
  o << "\n"
    << "is.n_is = " << is.n_is << "\n"
    << "is.root_tol = " << num(is.root_tol) << "\n"
    << "offline.iters = " << offline.iters << "\n"
    << "offline.learning_rate = " << num(offline.learning_rate) << "\n"
    << "offline.lambda = " << num(offline.lambda) << "\n"
    << "offline.particles = " << offline.particles << "\n"
    << "offline.init_sd = " << num(offline.init_sd) << "\n"
    << "regret.eval_stride = " << eval_stride << "\n"
    << "regret.with_static = " << (with_static ? "true" : "false") << "\n"
    << "sweep.particles = " << join(sweep_particles) << "\n"
    << "sweep.beta = " << join(sweep_beta) << "\n"
    << "sweep.lambda = " << join(sweep_lambda) << "\n";
  return o.str();
}

}  // namespace labctl
