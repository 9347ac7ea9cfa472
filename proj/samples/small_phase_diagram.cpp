// Empirical success probability for n = 8 across a few oversampling ratios.
#include <iostream>

#include <fmt/format.h>

#include "phaseforge.hpp"

int main() {
  using namespace phaseforge;
  GridConfig config;
  config.n_values = {8};
  config.m_over_n_values = {2, 3, 4, 6, 8};
  config.trials_per_cell = 40;
  config.base_seed = RngSeed{1};

  const GridResult result = run_grid(config);
  for (const CellResult& cell : result.cells) {
    fmt::print("m/n = {:<4} success = {:.2f}  mean iterations = {:.1f}\n", cell.ratio, cell.success_probability,
               cell.mean_iterations);
  }
  std::cout << grid_to_csv(result);
}
