#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hflow/operators.hpp"

namespace hflow {

enum class ExperimentKind {
  MonoCheck,
  NormEquiv,
  OrderReduction,
  PdeSolve,
  SpdeSimulate,
  Represent,
  AdjointCheck,
};

const char* kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);  // throws on unknown names

// One experiment, fully determined by (kind, operator, numbers, seed).  Every
// field has a kind-appropriate default except `kind`, `operator`, and `seed`,
// which the config file must provide.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::MonoCheck;
  OperatorSpec spec;
  std::uint64_t seed = 0;
  bool seed_set = false;

  int trunc = 16;                        // N for single-truncation experiments
  std::vector<int> truncations = {16, 32};  // sweep grid (mono-check, norm-equiv)
  std::vector<int> orders = {0, 1, 2};   // Sobolev orders p for sweeps
  int trials = 200;                      // samples per truncation
  double damping = 3.0;                  // sampler spectral damping

  double dt = 1e-3;                      // time step (pde/spde/mc)
  double t_final = 1.0;
  double theta = 0.5;                    // spde implicitness
  std::string scheme = "cn";             // pde scheme: explicit | implicit | cn
  std::vector<double> snapshots;         // trajectory dump times (pde/spde)
  std::vector<std::pair<std::size_t, double>> initial = {{0, 1.0}};  // flat coeffs

  int paths = 1000;                      // M for Monte Carlo kinds
  double pde_dt = 1e-3;                  // Galerkin step for the represent cross-check
  int nodes = 0;                         // quadrature override (0 = per-module default)

  std::string field = "x1";              // order-reduction multiplier f
  int beta = 0;                          // order-reduction derivative offset
  int k = 1;                             // order-reduction reduces 2k-1 derivatives

  double tolerance = -1.0;               // verdict tolerance; -1 = kind default
  std::string out_dir;                   // optional output directory

  double tolerance_or_default() const;
};

// Parse a JSON config file (see README for the schema).  Throws
// std::runtime_error with a descriptive message on malformed input.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Field-level diagnostics; empty iff the config is runnable.
std::vector<std::string> validate(const ExperimentConfig& config);

// Canonical serialization: every effective field in sorted-key JSON.  Replay
// runs from this text, and the digest is the FNV-1a hash of it.
std::string canonical_config(const ExperimentConfig& config);
std::uint64_t config_digest(const ExperimentConfig& config);

struct RatioRow {
  std::uint64_t sample = 0;
  int trunc = 0;
  int p = 0;
  double ratio = 0.0;
};
struct TrajectoryRow {
  double time = 0.0;
  std::size_t n = 0;
  double coeff = 0.0;
};
struct EnsembleRow {
  std::size_t n = 0;
  double mean = 0.0;
  double se = 0.0;
};
struct PairingRow {
  double t = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  int paths = 0;
  std::uint64_t seed = 0;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::MonoCheck;
  std::uint64_t digest = 0;
  bool pass = false;
  double wall_seconds = 0.0;  // informational; excluded from replay comparison
  std::vector<std::pair<std::string, double>> metrics;  // ordered, named

  std::vector<RatioRow> ratio_rows;            // mono-check, norm-equiv
  std::vector<TrajectoryRow> trajectory_rows;  // pde-solve, spde-simulate
  std::vector<EnsembleRow> ensemble_rows;      // spde-simulate
  std::vector<PairingRow> pairing_rows;        // represent
};

// Validates, dispatches to the owning module, and fills the report.  Throws
// std::runtime_error when validate() is non-empty.
ExperimentReport run(const ExperimentConfig& config);

// Write report.csv, summary.txt, and the kind-specific CSVs into `dir`
// (created if missing).  The summary embeds the canonical config for replay.
void write_outputs(const ExperimentReport& report, const ExperimentConfig& config,
                   const std::string& dir);

struct ReplayResult {
  bool match = false;
  std::vector<std::string> mismatches;  // metric-level diffs, empty on match
  ExperimentReport report;              // the fresh re-run
};

// Re-run the experiment embedded in a summary.txt and compare every metric
// bitwise (via 17-significant-digit decimal round trip).
ReplayResult replay(const std::string& summary_path);

// Shared formatting used by every CSV/summary writer: shortest decimal that
// round-trips a double (printf %.17g).
std::string format_double(double value);

}  // namespace hflow
