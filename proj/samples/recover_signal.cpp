// Recover a random signal from the moduli of 8n Gaussian measurements.
#include <iostream>

#include <fmt/format.h>

#include "phaseforge.hpp"

int main() {
  using namespace phaseforge;
  const std::size_t n = 32;
  const std::size_t m = 8 * n;
  const RngSeed seed{2024};

  const ProblemInstance inst = make_instance(n, m, seed);
  const ComplexVector z0 = truncated_spectral_init(inst.matrix(), inst.measurements(), 200, derive_seed(seed, {1}));
  fmt::print("initial relative error: {:.3e}\n", dist_up_to_phase(inst.signal(), z0) / norm(inst.signal()));

  const SolverRun result = run(inst.matrix(), inst.measurements(), z0, StoppingCriteria{}, inst.signal());
  fmt::print("stopped after {} iterations ({}), relative error {:.3e}\n", result.iterations_used,
             to_string(result.stop_reason), *result.final_error());
  return result.stop_reason == StopReason::Success ? 0 : 1;
}
