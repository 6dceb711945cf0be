// Timing comparison of the OpenMP kernels against their serial references.
// Prints one table row per kernel: serial seconds, parallel seconds, speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hflow/evolution.hpp"
#include "hflow/monotonicity.hpp"
#include "hflow/operators.hpp"
#include "hflow/parallel.hpp"
#include "hflow/sde.hpp"
#include "hflow/sobolev.hpp"

using namespace hflow;

namespace {

double time_once(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void row(const std::string& name, const std::function<void()>& serial,
         const std::function<void()>& parallel) {
  const double s = time_once(serial);
  const double p = time_once(parallel);
  std::printf("%-24s %10.3fs %10.3fs %8.2fx\n", name.c_str(), s, p, s / p);
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--threads") threads = std::atoi(argv[i + 1]);
  }
  if (threads > 0) set_threads(threads);
  std::printf("threads: %d\n", max_threads());
  std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

  const OperatorSpec pair = OperatorSpec::standard(
      1, {CoefficientFunction::parse("(add 1 (mul 0.5 (sin x1)))", 1)},
      {CoefficientFunction::parse("x1", 1)},
      {CoefficientFunction::parse("(tanh x1)", 1)},
      CoefficientFunction::parse("(cos x1)", 1));
  const OperatorSpec translation = OperatorSpec::adjoint(
      1, {CoefficientFunction::constant(1.0)}, {CoefficientFunction()});

  {
    const ExpansionSampler sampler{1, 32, 3.0, 42};
    const std::vector<int> truncs = {16, 32};
    row("equivalence_sweep",
        [&] { equivalence_sweep_reference(sampler, 2, 200, truncs); },
        [&] { equivalence_sweep(sampler, 2, 200, truncs); });
  }
  row("assemble",
      [&] { assemble_reference(pair, 40); },
      [&] { assemble(pair, 40); });
  {
    const ExpansionSampler sampler{1, 32, 3.0, 42};
    const std::vector<int> truncs = {16, 32};
    row("estimate_constant",
        [&] { estimate_constant_reference(pair, 1, sampler, 100, truncs); },
        [&] { estimate_constant(pair, 1, sampler, 100, truncs); });
  }
  {
    HermiteExpansion phi0(1, 16);
    phi0.flat(0) = 1.0;
    row("ensemble_mean",
        [&] { ensemble_mean_reference(translation, phi0, 16, 0.5, 1e-3, 400, 42); },
        [&] { ensemble_mean(translation, phi0, 16, 0.5, 1e-3, 400, 42); });
  }
  {
    HermiteExpansion phi(1, 16);
    phi.flat(0) = 1.0;
    row("mc_pairing",
        [&] { mc_pairing_reference(translation, phi, phi, 2.0, 0.01, 4000, 42); },
        [&] { mc_pairing(translation, phi, phi, 2.0, 0.01, 4000, 42); });
  }
  return 0;
}
