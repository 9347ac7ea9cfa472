#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "phaseforge/experiments.hpp"

using namespace phaseforge;

namespace {

GridConfig small_config() {
  GridConfig c;
  c.n_values = {4, 6};
  c.m_over_n_values = {3, 8};
  c.trials_per_cell = 4;
  c.base_seed = RngSeed{21};
  return c;
}

std::size_t count_lines(const std::string& s) {
  std::size_t lines = 0;
  for (char c : s) lines += c == '\n';
  return lines;
}

}  // namespace

TEST(GridConfig, Validation) {
  GridConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.trials_per_cell = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.m_over_n_values = {0.05};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.init_kind = InitKind::Supplied;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(GridConfig::derived_m(16, 1.5), 24u);
  EXPECT_EQ(GridConfig::derived_m(10, 0.25), 3u);
}

TEST(RunTrial, ExtremeOversamplingSucceeds) {
  const TrialRecord r = run_trial(4, 400, InitKind::TruncatedSpectral, {}, RngSeed{1});
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.stop_reason, "success");
  EXPECT_LE(r.final_relative_error, 1e-5);
  EXPECT_LE(r.final_stagnation_residual, 1e-6);
}

TEST(RunTrial, SquareSystemFails) {
  int successes = 0;
  for (std::uint64_t s = 0; s < 20; ++s) successes += run_trial(16, 16, InitKind::TruncatedSpectral, {}, RngSeed{s}).success;
  EXPECT_EQ(successes, 0);
}

TEST(RunTrial, SameSeedSameRecord) {
  TrialRecord a = run_trial(8, 40, InitKind::RandomSphere, {}, RngSeed{5}, kDefaultSuccessThreshold, 200, 3);
  TrialRecord b = run_trial(8, 40, InitKind::RandomSphere, {}, RngSeed{5}, kDefaultSuccessThreshold, 200, 3);
  a.wall_time = b.wall_time = 0.0;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.trial_index, 3u);
}

TEST(RunGrid, SingleCellSingleTrial) {
  GridConfig c;
  c.n_values = {4};
  c.m_over_n_values = {6};
  c.trials_per_cell = 1;
  const GridResult r = run_grid(c, 1);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.cells[0].records.size(), 1u);
  EXPECT_EQ(r.cells[0].m, 24u);
}

TEST(RunGrid, CellsCanonicalAndConsistent) {
  GridConfig c = small_config();
  c.n_values = {6, 4};
  c.m_over_n_values = {8, 3};
  const GridResult r = run_grid(c, 2);
  ASSERT_EQ(r.cells.size(), 4u);
  for (std::size_t i = 1; i < r.cells.size(); ++i) {
    EXPECT_TRUE(std::pair(r.cells[i - 1].n, r.cells[i - 1].m) < std::pair(r.cells[i].n, r.cells[i].m));
  }
  for (const CellResult& cell : r.cells) {
    std::size_t successes = 0;
    for (std::size_t t = 0; t < cell.records.size(); ++t) {
      const TrialRecord& rec = cell.records[t];
      EXPECT_EQ(rec.trial_index, t);
      EXPECT_EQ(rec.success, rec.final_relative_error <= c.success_threshold);
      if (rec.success) EXPECT_LE(rec.final_stagnation_residual, 1e-6);
      successes += rec.success;
    }
    EXPECT_EQ(cell.successes, successes);
    EXPECT_EQ(cell.success_probability, double(successes) / double(c.trials_per_cell));
  }
}

TEST(RunGrid, IndependentOfWorkerCount) {
  const GridConfig c = small_config();
  const GridResult one = run_grid(c, 1);
  const GridResult eight = run_grid(c, 8);
  EXPECT_EQ(grid_to_csv(one), grid_to_csv(eight));
  EXPECT_EQ(grid_to_json(one, false).dump(), grid_to_json(eight, false).dump());
}

TEST(RunGrid, TrialSeedDerivation) {
  EXPECT_EQ(trial_seed(RngSeed{1}, 4, 12, 0).value, trial_seed(RngSeed{1}, 4, 12, 0).value);
  EXPECT_NE(trial_seed(RngSeed{1}, 4, 12, 0).value, trial_seed(RngSeed{1}, 4, 12, 1).value);
  EXPECT_NE(trial_seed(RngSeed{1}, 4, 12, 0).value, trial_seed(RngSeed{1}, 12, 4, 0).value);
}

TEST(RunGrid, SuccessRisesWithOversampling) {
  GridConfig c;
  c.n_values = {16};
  c.m_over_n_values = {2, 3, 4, 5, 6, 8};
  c.trials_per_cell = 100;
  c.base_seed = RngSeed{8};
  const GridResult r = run_grid(c);
  int inversions = 0;
  for (std::size_t i = 1; i < r.cells.size(); ++i) {
    const double drop = r.cells[i - 1].success_probability - r.cells[i].success_probability;
    if (drop > 0.0) {
      ++inversions;
      EXPECT_LE(drop, 0.05);
    }
  }
  EXPECT_LE(inversions, 1);
}

TEST(RunGrid, BothInitialisationsAgreeAtTheExtremes) {
  for (InitKind kind : {InitKind::TruncatedSpectral, InitKind::RandomSphere}) {
    GridConfig c;
    c.n_values = {16};
    c.m_over_n_values = {2, 8};
    c.trials_per_cell = 200;
    c.init_kind = kind;
    c.base_seed = RngSeed{3};
    const GridResult r = run_grid(c);
    EXPECT_LE(r.cells[0].success_probability, 0.5) << to_string(kind);
    EXPECT_GE(r.cells[1].success_probability, 0.9) << to_string(kind);
  }
}

TEST(Export, CsvShape) {
  const GridResult r = run_grid(small_config(), 1);
  const std::string csv = grid_to_csv(r);
  EXPECT_EQ(count_lines(csv), r.cells.size() + 1);
  EXPECT_TRUE(csv.starts_with("n,m,ratio,init_kind,trials,successes,success_probability,mean_iterations\n"));
  GridResult empty;
  EXPECT_EQ(count_lines(grid_to_csv(empty)), 1u);
}

TEST(Export, JsonRoundTrip) {
  const GridResult r = run_grid(small_config(), 1);
  EXPECT_EQ(grid_from_json(grid_to_json(r)), r);
  EXPECT_EQ(grid_from_json(nlohmann::json::parse(grid_to_json(r).dump())), r);
  EXPECT_THROW(grid_from_json(nlohmann::json{{"format", "other"}}), std::invalid_argument);
}

TEST(Export, WritesFilesWithDefaultName) {
  const GridResult r = run_grid(small_config(), 1);
  EXPECT_EQ(default_grid_filename(InitKind::RandomSphere, RngSeed{9}, ExportFormat::Csv), "grid_random_9.csv");
  const auto dir = std::filesystem::temp_directory_path() / "phaseforge_export_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / default_grid_filename(r.config.init_kind, r.config.base_seed, ExportFormat::Json);
  export_grid(r, path, ExportFormat::Json);
  std::ifstream in(path);
  EXPECT_EQ(grid_from_json(nlohmann::json::parse(in)), r);
  EXPECT_THROW(export_grid(r, dir / "missing" / "x.csv", ExportFormat::Csv), std::runtime_error);
  std::filesystem::remove_all(dir);
}
