#include "hflow/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hflow/evolution.hpp"
#include "hflow/hermite.hpp"
#include "hflow/monotonicity.hpp"
#include "hflow/sde.hpp"
#include "hflow/sobolev.hpp"

namespace hflow {

using nlohmann::json;

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MonoCheck: return "mono-check";
    case ExperimentKind::NormEquiv: return "norm-equiv";
    case ExperimentKind::OrderReduction: return "order-reduction";
    case ExperimentKind::PdeSolve: return "pde-solve";
    case ExperimentKind::SpdeSimulate: return "spde-simulate";
    case ExperimentKind::Represent: return "represent";
    case ExperimentKind::AdjointCheck: return "adjoint-check";
  }
  throw std::invalid_argument("kind_name: unknown experiment kind");
}

ExperimentKind kind_from_name(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::MonoCheck, ExperimentKind::NormEquiv, ExperimentKind::OrderReduction,
        ExperimentKind::PdeSolve, ExperimentKind::SpdeSimulate, ExperimentKind::Represent,
        ExperimentKind::AdjointCheck}) {
    if (name == kind_name(kind)) return kind;
  }
  throw std::runtime_error("unknown experiment kind '" + name + "'");
}

double ExperimentConfig::tolerance_or_default() const {
  if (tolerance >= 0.0) return tolerance;
  switch (kind) {
    case ExperimentKind::MonoCheck: return 0.2;     // allowed sup growth per step
    case ExperimentKind::NormEquiv: return 0.2;     // allowed endpoint drift
    case ExperimentKind::OrderReduction: return 1e-8;
    case ExperimentKind::PdeSolve: return 1e-3;     // tail-estimate budget
    case ExperimentKind::SpdeSimulate: return 1e-9; // slack atop 3 pooled SE
    case ExperimentKind::Represent: return 1e-3;    // Galerkin tolerance atop 3 SE
    case ExperimentKind::AdjointCheck: return 1e-8;
  }
  return 1e-8;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

// ---- config parsing ---------------------------------------------------------

CoefficientFunction parse_entry(const json& j, int dim, const std::string& where) {
  if (j.is_number()) return CoefficientFunction::constant(j.get<double>());
  if (j.is_string()) {
    try {
      return CoefficientFunction::parse(j.get<std::string>(), dim);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  throw std::runtime_error(where + ": expected a number or a prefix-grammar string");
}

std::vector<CoefficientFunction> parse_field_array(const json& j, int dim, std::size_t count,
                                                   const std::string& where) {
  if (!j.is_array() || j.size() != count) {
    throw std::runtime_error(where + ": expected an array of " + std::to_string(count) +
                             " entries");
  }
  std::vector<CoefficientFunction> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(parse_entry(j[i], dim, where + "[" + std::to_string(i + 1) + "]"));
  }
  return out;
}

OperatorSpec parse_operator(const json& j) {
  if (!j.is_object()) throw std::runtime_error("operator: expected an object");
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    throw std::runtime_error("operator.dim: required integer");
  }
  const int dim = j["dim"].get<int>();
  if (dim < 1 || dim > kMaxDim) {
    throw std::runtime_error("operator.dim: must be between 1 and " + std::to_string(kMaxDim));
  }

  OperatorSpec spec;
  spec.dim = dim;
  const std::string form = j.value("form", std::string("standard"));
  if (form == "standard") {
    spec.form = OperatorSpec::Form::Standard;
  } else if (form == "adjoint") {
    spec.form = OperatorSpec::Form::Adjoint;
  } else {
    throw std::runtime_error("operator.form: expected \"standard\" or \"adjoint\"");
  }

  if (!j.contains("sigma") || !j["sigma"].is_array() ||
      j["sigma"].size() != static_cast<std::size_t>(dim)) {
    throw std::runtime_error("operator.sigma: expected " + std::to_string(dim) + " rows");
  }
  spec.sigma.clear();
  for (int r = 0; r < dim; ++r) {
    const json& row = j["sigma"][static_cast<std::size_t>(r)];
    std::vector<CoefficientFunction> parsed = parse_field_array(
        row, dim, static_cast<std::size_t>(dim),
        "operator.sigma[" + std::to_string(r + 1) + "]");
    for (auto& fn : parsed) spec.sigma.push_back(std::move(fn));
  }

  const auto zeros = [](std::size_t count) {
    return std::vector<CoefficientFunction>(count, CoefficientFunction());
  };
  const std::size_t d = static_cast<std::size_t>(dim);
  if (spec.form == OperatorSpec::Form::Standard) {
    spec.f = j.contains("f") ? parse_field_array(j["f"], dim, d, "operator.f") : zeros(d);
    spec.h = j.contains("h") ? parse_field_array(j["h"], dim, d, "operator.h") : zeros(d);
    spec.g = j.contains("g") ? parse_entry(j["g"], dim, "operator.g") : CoefficientFunction();
  } else {
    spec.b = j.contains("b") ? parse_field_array(j["b"], dim, d, "operator.b") : zeros(d);
  }
  // Form-mismatched extras are reported by validate(), but only if they parse.
  if (spec.form == OperatorSpec::Form::Adjoint) {
    if (j.contains("f")) spec.f = parse_field_array(j["f"], dim, d, "operator.f");
    if (j.contains("h")) spec.h = parse_field_array(j["h"], dim, d, "operator.h");
    if (j.contains("g")) spec.g = parse_entry(j["g"], dim, "operator.g");
  } else if (j.contains("b")) {
    spec.b = parse_field_array(j["b"], dim, d, "operator.b");
  }
  return spec;
}

template <class T>
std::vector<T> parse_number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected an array");
  std::vector<T> out;
  out.reserve(j.size());
  for (const json& v : j) {
    if (!v.is_number()) throw std::runtime_error(where + ": expected numbers");
    out.push_back(v.get<T>());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config: expected a JSON object");

  ExperimentConfig config;
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw std::runtime_error("kind: required string");
  }
  config.kind = kind_from_name(j["kind"].get<std::string>());

  if (!j.contains("operator")) throw std::runtime_error("operator: required object");
  config.spec = parse_operator(j["operator"]);

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw std::runtime_error("seed: expected a nonnegative integer");
    }
    const auto raw = j["seed"].get<std::int64_t>();
    if (raw < 0) throw std::runtime_error("seed: expected a nonnegative integer");
    config.seed = static_cast<std::uint64_t>(raw);
    config.seed_set = true;
  }

  if (config.kind == ExperimentKind::NormEquiv) config.orders = {1, 2};

  if (j.contains("trunc")) config.trunc = j["trunc"].get<int>();
  if (j.contains("truncations")) {
    config.truncations = parse_number_array<int>(j["truncations"], "truncations");
  }
  if (j.contains("orders")) config.orders = parse_number_array<int>(j["orders"], "orders");
  if (j.contains("trials")) config.trials = j["trials"].get<int>();
  if (j.contains("damping")) config.damping = j["damping"].get<double>();
  if (j.contains("dt")) config.dt = j["dt"].get<double>();
  if (j.contains("t_final")) config.t_final = j["t_final"].get<double>();
  if (j.contains("theta")) config.theta = j["theta"].get<double>();
  if (j.contains("scheme")) config.scheme = j["scheme"].get<std::string>();
  if (j.contains("snapshots")) {
    config.snapshots = parse_number_array<double>(j["snapshots"], "snapshots");
  }
  if (j.contains("initial")) {
    const json& init = j["initial"];
    if (!init.is_array()) throw std::runtime_error("initial: expected an array of [n, value]");
    config.initial.clear();
    for (const json& pair : init) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        throw std::runtime_error("initial: entries must be [flat_index, value] pairs");
      }
      config.initial.emplace_back(pair[0].get<std::size_t>(), pair[1].get<double>());
    }
  }
  if (j.contains("paths")) config.paths = j["paths"].get<int>();
  if (j.contains("pde_dt")) config.pde_dt = j["pde_dt"].get<double>();
  if (j.contains("nodes")) config.nodes = j["nodes"].get<int>();
  if (j.contains("field")) config.field = j["field"].get<std::string>();
  if (j.contains("beta")) config.beta = j["beta"].get<int>();
  if (j.contains("k")) config.k = j["k"].get<int>();
  if (j.contains("tolerance")) config.tolerance = j["tolerance"].get<double>();
  if (j.contains("out")) config.out_dir = j["out"].get<std::string>();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

namespace {

bool needs_sampler(ExperimentKind kind) {
  return kind == ExperimentKind::MonoCheck || kind == ExperimentKind::NormEquiv ||
         kind == ExperimentKind::OrderReduction || kind == ExperimentKind::AdjointCheck;
}

bool needs_time_grid(ExperimentKind kind) {
  return kind == ExperimentKind::PdeSolve || kind == ExperimentKind::SpdeSimulate ||
         kind == ExperimentKind::Represent;
}

}  // namespace

std::vector<std::string> validate(const ExperimentConfig& config) {
  std::vector<std::string> out;
  const auto add = [&out](const std::string& msg) { out.push_back(msg); };

  if (!config.seed_set) add("seed: required (reproducibility contract)");
  for (const std::string& msg : config.spec.validate()) add("operator." + msg);

  if (config.trunc < 0 || config.trunc > 64) add("trunc: must lie in [0, 64]");
  if (config.nodes < 0) add("nodes: must be nonnegative (0 = module default)");
  if (config.nodes > 300) add("nodes: quadrature rules above 300 nodes are not supported");
  if (config.nodes > 0 && config.nodes < config.trunc + 1) {
    add("nodes: aliasing guard requires nodes >= trunc + 1");
  }

  if (needs_sampler(config.kind)) {
    if (config.trials < 1) add("trials: must be positive");
    if (config.damping <= 0.0) add("damping: must be positive");
  }
  if (config.kind == ExperimentKind::MonoCheck || config.kind == ExperimentKind::NormEquiv) {
    if (config.truncations.empty()) add("truncations: need at least one value");
    for (std::size_t i = 0; i < config.truncations.size(); ++i) {
      const int n = config.truncations[i];
      if (n < 0 || n > 64) add("truncations: values must lie in [0, 64]");
      if (i > 0 && n <= config.truncations[i - 1]) {
        add("truncations: must be strictly increasing");
        break;
      }
    }
    if (config.nodes > 0 && !config.truncations.empty() &&
        config.nodes < config.truncations.back() + 1) {
      add("nodes: aliasing guard requires nodes >= largest truncation + 1");
    }
    for (int p : config.orders) {
      if (p < 0) add("orders: Sobolev orders must be nonnegative");
    }
    if (config.orders.empty()) add("orders: need at least one Sobolev order");
  }

  if (config.kind == ExperimentKind::OrderReduction) {
    if (config.spec.dim != 1) add("operator.dim: order-reduction runs are one-dimensional");
    if (config.beta < 0) add("beta: must be nonnegative");
    if (config.k < 1) add("k: must be at least 1");
    if (2 * config.k - 1 > kMaxDerivativeOrder) {
      add("k: 2k-1 exceeds the supported derivative order " +
          std::to_string(kMaxDerivativeOrder));
    }
    try {
      CoefficientFunction::parse(config.field, config.spec.dim);
    } catch (const std::exception& e) {
      add(std::string("field: ") + e.what());
    }
  }

  if (needs_time_grid(config.kind)) {
    if (config.dt <= 0.0) add("dt: must be positive");
    if (config.t_final <= 0.0) add("t_final: must be positive");
    if (config.dt > 0.0 && config.t_final > 0.0) {
      const double raw = config.t_final / config.dt;
      if (std::abs(raw - std::round(raw)) > 1e-9 * std::max(1.0, raw)) {
        add("t_final: must be a whole number of dt steps");
      }
    }
    const std::size_t box = box_size(config.spec.dim, config.trunc);
    for (const auto& [n, value] : config.initial) {
      (void)value;
      if (n >= box) {
        add("initial: flat index " + std::to_string(n) + " outside the truncation box");
        break;
      }
    }
    if (config.initial.empty()) add("initial: need at least one coefficient");
  }
  if (config.kind == ExperimentKind::PdeSolve) {
    if (config.scheme != "explicit" && config.scheme != "implicit" && config.scheme != "cn") {
      add("scheme: expected explicit | implicit | cn");
    }
  }
  if (config.kind == ExperimentKind::SpdeSimulate) {
    if (config.theta < 0.0 || config.theta > 1.0) add("theta: must lie in [0, 1]");
    if (config.paths < 2) add("paths: need at least 2 for a standard error");
    if (config.spec.form != OperatorSpec::Form::Adjoint) {
      add("operator.form: spde-simulate drives an adjoint-form pair");
    }
  }
  if (config.kind == ExperimentKind::Represent) {
    if (config.paths < 2) add("paths: need at least 2 for a standard error");
    if (config.pde_dt <= 0.0) add("pde_dt: must be positive");
    if (config.spec.form != OperatorSpec::Form::Adjoint) {
      add("operator.form: represent requires an adjoint-form (Fokker-Planck) operator");
    }
    if (config.pde_dt > 0.0 && config.t_final > 0.0) {
      const double raw = config.t_final / config.pde_dt;
      if (std::abs(raw - std::round(raw)) > 1e-9 * std::max(1.0, raw)) {
        add("t_final: must be a whole number of pde_dt steps");
      }
    }
  }
  if (config.kind == ExperimentKind::AdjointCheck &&
      config.spec.form != OperatorSpec::Form::Adjoint) {
    add("operator.form: adjoint-check starts from an adjoint-form spec");
  }
  return out;
}

namespace {

json operator_json(const OperatorSpec& spec) {
  json op;
  op["dim"] = spec.dim;
  op["form"] = spec.form == OperatorSpec::Form::Adjoint ? "adjoint" : "standard";
  json sigma = json::array();
  for (int r = 0; r < spec.dim; ++r) {
    json row = json::array();
    for (int c = 0; c < spec.dim; ++c) {
      row.push_back(spec.sigma[static_cast<std::size_t>(r) * spec.dim + c].text());
    }
    sigma.push_back(std::move(row));
  }
  op["sigma"] = std::move(sigma);
  const auto field_array = [](const std::vector<CoefficientFunction>& fns) {
    json arr = json::array();
    for (const CoefficientFunction& fn : fns) arr.push_back(fn.text());
    return arr;
  };
  if (spec.form == OperatorSpec::Form::Standard) {
    op["f"] = field_array(spec.f);
    op["h"] = field_array(spec.h);
    op["g"] = spec.g.text();
  } else {
    op["b"] = field_array(spec.b);
  }
  return op;
}

}  // namespace

std::string canonical_config(const ExperimentConfig& config) {
  json j;
  j["kind"] = kind_name(config.kind);
  j["seed"] = config.seed;
  j["operator"] = operator_json(config.spec);
  j["trunc"] = config.trunc;
  j["truncations"] = config.truncations;
  j["orders"] = config.orders;
  j["trials"] = config.trials;
  j["damping"] = config.damping;
  j["dt"] = config.dt;
  j["t_final"] = config.t_final;
  j["theta"] = config.theta;
  j["scheme"] = config.scheme;
  j["snapshots"] = config.snapshots;
  json init = json::array();
  for (const auto& [n, value] : config.initial) init.push_back(json::array({n, value}));
  j["initial"] = std::move(init);
  j["paths"] = config.paths;
  j["pde_dt"] = config.pde_dt;
  j["nodes"] = config.nodes;
  j["field"] = config.field;
  j["beta"] = config.beta;
  j["k"] = config.k;
  j["tolerance"] = config.tolerance_or_default();
  // out_dir deliberately omitted: where the report lands must not affect it.
  return j.dump();
}

std::uint64_t config_digest(const ExperimentConfig& config) {
  const std::string text = canonical_config(config);
  std::uint64_t hash = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

namespace {

// ---- experiment bodies ------------------------------------------------------

void add_metric(ExperimentReport& report, const std::string& name, double value) {
  report.metrics.emplace_back(name, value);
}

HermiteExpansion initial_state(const ExperimentConfig& config) {
  HermiteExpansion phi(config.spec.dim, config.trunc);
  for (const auto& [n, value] : config.initial) phi.flat(n) = value;
  return phi;
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "explicit") return Scheme::Explicit;
  if (name == "implicit") return Scheme::Implicit;
  return Scheme::CrankNicolson;
}

void run_mono_check(const ExperimentConfig& config, ExperimentReport& report) {
  ExpansionSampler sampler{config.spec.dim, config.truncations.back(), config.damping,
                           config.seed};
  const double growth = config.tolerance_or_default();
  bool pass = true;
  for (int p : config.orders) {
    MonotonicityReport rep =
        estimate_constant(config.spec, p, sampler, config.trials,
                          std::span<const int>(config.truncations), config.nodes, growth);
    for (std::size_t ti = 0; ti < rep.truncations.size(); ++ti) {
      const int n = rep.truncations[ti];
      add_metric(report, "sup_ratio_p" + std::to_string(p) + "_N" + std::to_string(n),
                 rep.sup_ratio[ti]);
      add_metric(report, "sup_abs_ratio_p" + std::to_string(p) + "_N" + std::to_string(n),
                 rep.sup_abs_ratio[ti]);
      for (int s = 0; s < config.trials; ++s) {
        report.ratio_rows.push_back({static_cast<std::uint64_t>(s), n, p,
                                     rep.ratios[ti][static_cast<std::size_t>(s)]});
      }
    }
    add_metric(report, "bounded_p" + std::to_string(p), rep.bounded_growth ? 1.0 : 0.0);
    pass = pass && rep.bounded_growth;
  }
  report.pass = pass;
}

void run_norm_equiv(const ExperimentConfig& config, ExperimentReport& report) {
  ExpansionSampler sampler{config.spec.dim, config.truncations.back(), config.damping,
                           config.seed};
  const double drift_tol = config.tolerance_or_default();
  bool pass = true;
  for (int p : config.orders) {
    EquivalenceReport rep = equivalence_sweep(sampler, p, config.trials,
                                              std::span<const int>(config.truncations));
    for (std::size_t ti = 0; ti < rep.truncations.size(); ++ti) {
      const int n = rep.truncations[ti];
      add_metric(report, "ratio_min_p" + std::to_string(p) + "_N" + std::to_string(n),
                 rep.ratio_min[ti]);
      add_metric(report, "ratio_max_p" + std::to_string(p) + "_N" + std::to_string(n),
                 rep.ratio_max[ti]);
      for (int s = 0; s < config.trials; ++s) {
        report.ratio_rows.push_back({static_cast<std::uint64_t>(s), n, p,
                                     rep.ratios[ti][static_cast<std::size_t>(s)]});
      }
    }
    const double drift = max_drift(rep);
    add_metric(report, "max_drift_p" + std::to_string(p), drift);
    pass = pass && drift < drift_tol;
  }
  report.pass = pass;
}

void run_order_reduction(const ExperimentConfig& config, ExperimentReport& report) {
  ExpansionSampler sampler{config.spec.dim, config.trunc, config.damping, config.seed};
  HermiteExpansion phi = sampler(0);
  const CoefficientFunction f = CoefficientFunction::parse(config.field, config.spec.dim);
  OrderReductionResult res =
      order_reduction_check(f, config.beta, config.k, phi, config.nodes);
  add_metric(report, "lhs", res.lhs);
  add_metric(report, "rhs", res.rhs);
  add_metric(report, "abs_error", res.abs_error);
  report.pass = res.abs_error <= config.tolerance_or_default();
}

void run_pde_solve(const ExperimentConfig& config, ExperimentReport& report) {
  EvolutionResult res = solve_pde(config.spec, initial_state(config), config.trunc,
                                  config.t_final, config.dt,
                                  scheme_from_name(config.scheme),
                                  std::span<const double>(config.snapshots), config.nodes);
  for (std::size_t s = 0; s < res.states.size(); ++s) {
    const HermiteExpansion& state = res.states[s];
    const std::size_t box = box_size(state.dim(), state.truncation());
    for (std::size_t n = 0; n < box; ++n) {
      report.trajectory_rows.push_back({res.times[s], n, state.flat(n)});
    }
  }
  const HermiteExpansion& last = res.states.back();
  add_metric(report, "endpoint_coeff0", last.flat(0));
  add_metric(report, "endpoint_norm", norm0(last));
  add_metric(report, "tail_estimate", res.tail_estimate);
  report.pass = res.tail_estimate <= config.tolerance_or_default();
}

void run_spde_simulate(const ExperimentConfig& config, ExperimentReport& report) {
  const HermiteExpansion phi0 = initial_state(config);
  EnsembleResult ens =
      ensemble_mean(config.spec, phi0, config.trunc, config.t_final, config.dt,
                    config.paths, config.seed, config.theta, config.nodes);

  // Deterministic twin with the same theta discretization: the ensemble mean
  // estimates exactly this iteration, so the gap is pure Monte Carlo error.
  EvolutionResult det;
  {
    ThetaStepper stepper(config.spec, config.trunc, config.dt, config.theta, config.nodes);
    const int steps = static_cast<int>(std::llround(config.t_final / config.dt));
    const std::size_t box = box_size(config.spec.dim, config.trunc);
    Eigen::VectorXd u(static_cast<Eigen::Index>(box));
    for (std::size_t i = 0; i < box; ++i) u[static_cast<Eigen::Index>(i)] = phi0.flat(i);
    double tail = 0.0;
    for (int kstep = 0; kstep < steps; ++kstep) u = stepper.step_deterministic(u, &tail);
    det.times = {config.t_final};
    HermiteExpansion state(config.spec.dim, config.trunc);
    for (std::size_t i = 0; i < box; ++i) state.flat(i) = u[static_cast<Eigen::Index>(i)];
    det.states.push_back(std::move(state));
    det.tail_estimate = tail;
  }

  HermiteExpansion diff = ens.mean;
  diff -= det.states.back();
  const double diff_norm = norm0(diff);
  add_metric(report, "diff_norm", diff_norm);
  add_metric(report, "pooled_se", ens.pooled_se);
  add_metric(report, "tail_mean", ens.tail_mean);
  add_metric(report, "mean_coeff0", ens.mean.flat(0));

  const std::size_t box = box_size(config.spec.dim, config.trunc);
  for (std::size_t n = 0; n < box; ++n) {
    report.ensemble_rows.push_back({n, ens.mean.flat(n), ens.stderr_[n]});
  }
  if (!config.snapshots.empty()) {
    const int steps = static_cast<int>(std::llround(config.t_final / config.dt));
    BrownianPath path(config.spec.dim, config.dt, steps, config.seed, 0u);
    EvolutionResult traj = solve_spde(config.spec, phi0, config.trunc, path, config.theta,
                                      std::span<const double>(config.snapshots), config.nodes);
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
      for (std::size_t n = 0; n < box; ++n) {
        report.trajectory_rows.push_back({traj.times[s], n, traj.states[s].flat(n)});
      }
    }
  }
  report.pass = diff_norm <= 3.0 * ens.pooled_se + config.tolerance_or_default();
}

void run_represent(const ExperimentConfig& config, ExperimentReport& report) {
  const HermiteExpansion phi = initial_state(config);
  PairingResult mc = mc_pairing(config.spec, phi, phi, config.t_final, config.dt,
                                config.paths, config.seed, config.nodes);
  EvolutionResult det = solve_pde(config.spec, phi, config.trunc, config.t_final,
                                  config.pde_dt, Scheme::CrankNicolson, {}, config.nodes);
  const double galerkin = inner0(det.states.back(), phi);
  const double diff = std::abs(mc.estimate - galerkin);
  add_metric(report, "estimate", mc.estimate);
  add_metric(report, "stderr", mc.stderr_);
  add_metric(report, "galerkin", galerkin);
  add_metric(report, "diff", diff);
  report.pairing_rows.push_back({mc.t, mc.estimate, mc.stderr_, mc.paths, mc.seed});
  report.pass = diff <= 3.0 * mc.stderr_ + config.tolerance_or_default();
}

void run_adjoint_check(const ExperimentConfig& config, ExperimentReport& report) {
  ExpansionSampler sampler{config.spec.dim, config.trunc, config.damping, config.seed};
  AdjointCheckResult res =
      adjoint_equivalence_check(config.spec, sampler, config.trials, config.nodes);
  add_metric(report, "max_rel_error", res.max_rel_error);
  report.pass = res.max_rel_error < config.tolerance_or_default();
}

}  // namespace

ExperimentReport run(const ExperimentConfig& config) {
  const std::vector<std::string> problems = validate(config);
  if (!problems.empty()) {
    std::string joined = "invalid config:";
    for (const std::string& p : problems) joined += "\n  " + p;
    throw std::runtime_error(joined);
  }

  ExperimentReport report;
  report.kind = config.kind;
  report.digest = config_digest(config);
  const auto start = std::chrono::steady_clock::now();
  switch (config.kind) {
    case ExperimentKind::MonoCheck: run_mono_check(config, report); break;
    case ExperimentKind::NormEquiv: run_norm_equiv(config, report); break;
    case ExperimentKind::OrderReduction: run_order_reduction(config, report); break;
    case ExperimentKind::PdeSolve: run_pde_solve(config, report); break;
    case ExperimentKind::SpdeSimulate: run_spde_simulate(config, report); break;
    case ExperimentKind::Represent: run_represent(config, report); break;
    case ExperimentKind::AdjointCheck: run_adjoint_check(config, report); break;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::string digest_hex(std::uint64_t digest) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

}  // namespace

void write_outputs(const ExperimentReport& report, const ExperimentConfig& config,
                   const std::string& dir) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);

  {
    std::string csv = "metric,value\n";
    for (const auto& [name, value] : report.metrics) {
      csv += name + "," + format_double(value) + "\n";
    }
    write_file(base / "report.csv", csv);
  }

  if (!report.ratio_rows.empty()) {
    std::string csv = "sample_id,N,p,ratio\n";
    for (const RatioRow& row : report.ratio_rows) {
      csv += std::to_string(row.sample) + "," + std::to_string(row.trunc) + "," +
             std::to_string(row.p) + "," + format_double(row.ratio) + "\n";
    }
    write_file(base / "ratios.csv", csv);
  }
  if (!report.trajectory_rows.empty()) {
    std::string csv = "time,n,coeff\n";
    for (const TrajectoryRow& row : report.trajectory_rows) {
      csv += format_double(row.time) + "," + std::to_string(row.n) + "," +
             format_double(row.coeff) + "\n";
    }
    write_file(base / "trajectory.csv", csv);
  }
  if (!report.ensemble_rows.empty()) {
    std::string csv = "n,mean,stderr\n";
    for (const EnsembleRow& row : report.ensemble_rows) {
      csv += std::to_string(row.n) + "," + format_double(row.mean) + "," +
             format_double(row.se) + "\n";
    }
    write_file(base / "ensemble.csv", csv);
  }
  if (!report.pairing_rows.empty()) {
    std::string csv = "t,estimate,stderr,M,seed\n";
    for (const PairingRow& row : report.pairing_rows) {
      csv += format_double(row.t) + "," + format_double(row.estimate) + "," +
             format_double(row.se) + "," + std::to_string(row.paths) + "," +
             std::to_string(row.seed) + "\n";
    }
    write_file(base / "pairing.csv", csv);
  }

  {
    std::string text;
    text += "kind: " + std::string(kind_name(report.kind)) + "\n";
    text += "digest: " + digest_hex(report.digest) + "\n";
    text += "verdict: " + std::string(report.pass ? "PASS" : "FAIL") + "\n";
    text += "wall_seconds: " + format_double(report.wall_seconds) + "\n";
    for (const auto& [name, value] : report.metrics) {
      text += "metric " + name + " = " + format_double(value) + "\n";
    }
    text += "config-json: " + canonical_config(config) + "\n";
    write_file(base / "summary.txt", text);
  }
}

ReplayResult replay(const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw std::runtime_error("cannot open summary '" + summary_path + "'");

  std::map<std::string, std::string> recorded;
  std::string recorded_digest, recorded_verdict, config_text;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("metric ", 0) == 0) {
      const std::size_t eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      recorded[line.substr(7, eq - 7)] = line.substr(eq + 3);
    } else if (line.rfind("digest: ", 0) == 0) {
      recorded_digest = line.substr(8);
    } else if (line.rfind("verdict: ", 0) == 0) {
      recorded_verdict = line.substr(9);
    } else if (line.rfind("config-json: ", 0) == 0) {
      config_text = line.substr(13);
    }
  }
  if (config_text.empty()) {
    throw std::runtime_error("summary has no embedded config-json line");
  }

  ExperimentConfig config = parse_config(config_text);
  ReplayResult result;
  result.report = run(config);

  if (digest_hex(result.report.digest) != recorded_digest) {
    result.mismatches.push_back("digest: recorded " + recorded_digest + ", replay " +
                                digest_hex(result.report.digest));
  }
  const std::string verdict = result.report.pass ? "PASS" : "FAIL";
  if (verdict != recorded_verdict) {
    result.mismatches.push_back("verdict: recorded " + recorded_verdict + ", replay " +
                                verdict);
  }
  std::map<std::string, std::string> fresh;
  for (const auto& [name, value] : result.report.metrics) {
    fresh[name] = format_double(value);
  }
  for (const auto& [name, value] : recorded) {
    auto it = fresh.find(name);
    if (it == fresh.end()) {
      result.mismatches.push_back("metric " + name + ": missing from replay");
    } else if (it->second != value) {
      result.mismatches.push_back("metric " + name + ": recorded " + value + ", replay " +
                                  it->second);
    }
  }
  for (const auto& [name, value] : fresh) {
    (void)value;
    if (recorded.find(name) == recorded.end()) {
      result.mismatches.push_back("metric " + name + ": missing from summary");
    }
  }
  result.match = result.mismatches.empty();
  return result;
}

}  // namespace hflow
