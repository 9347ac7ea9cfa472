#include <cmath>

#include <gtest/gtest.h>

#include "phaseforge/theory_checks.hpp"

using namespace phaseforge;

TEST(SuiteNames, RoundTrip) {
  for (LemmaId id : kAllLemmas) EXPECT_EQ(lemma_from_suite_name(suite_name(id)), id);
  EXPECT_FALSE(lemma_from_suite_name("nonsense").has_value());
}

TEST(PhaseDifference, WorkedExample) {
  const PhaseDifferenceTerms t = phase_difference_terms(Complex{1, 0}, Complex{0, 0.1});
  EXPECT_NEAR(t.lhs, 0.0997, 1e-4);
  EXPECT_NEAR(t.rhs, 0.12, 1e-15);
}

TEST(PhaseDifference, ZeroReferenceBoundIsTwo) {
  for (Complex z : {Complex{0, 0}, Complex{1e-6, 0}, Complex{-3, 4}, Complex{0, -1e6}}) {
    const PhaseDifferenceTerms t = phase_difference_terms(Complex{}, z);
    EXPECT_EQ(t.rhs, 2.0);
    EXPECT_LE(t.lhs, 2.0 + 1e-15);
  }
}

TEST(PhaseDifference, AntipodalPerturbation) {
  const PhaseDifferenceTerms t = phase_difference_terms(Complex{2, 1}, Complex{-2, -1});
  // z0 + z = 0 and phase(0) = 1.
  EXPECT_NEAR(t.lhs, std::abs(Complex{1, 0} - phase(Complex{2, 1})), 1e-15);
  EXPECT_EQ(t.rhs, 2.0);
  EXPECT_LE(t.lhs, t.rhs);
}

TEST(PhaseDifference, SampledPairsNeverViolate) {
  const LemmaReport r = check_phase_difference_lemma(200000, RngSeed{4});
  EXPECT_EQ(r.violations, 0u);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.worst_ratio, 1.0 + 1e-12);
  EXPECT_THROW(check_phase_difference_lemma(0, RngSeed{1}), std::invalid_argument);
}

TEST(SingularValues, DefaultDimensionsPass) {
  const LemmaReport r = check_singular_value_bounds(200, 10, 0.3, 50, RngSeed{1});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_FALSE(r.vacuous);
}

TEST(SingularValues, SingleColumn) {
  const LemmaReport r = check_singular_value_bounds(400, 1, 0.1, 100, RngSeed{2});
  EXPECT_GE(r.observations.at("mean_sigma_min_over_sqrt_m"), 0.95);
  EXPECT_LE(r.observations.at("mean_sigma_max_over_sqrt_m"), 1.05);
  EXPECT_EQ(r.observations.at("mean_sigma_min_over_sqrt_m"), r.observations.at("mean_sigma_max_over_sqrt_m"));
}

TEST(SingularValues, ZeroDeviationIsVacuous) {
  const LemmaReport r = check_singular_value_bounds(50, 5, 0.0, 5, RngSeed{3});
  EXPECT_TRUE(r.vacuous);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.observations.at("probability_bound"), 2.0);
}

TEST(SingularValues, RequiresTallMatrix) {
  EXPECT_THROW(check_singular_value_bounds(5, 5, 0.1, 1, RngSeed{1}), std::invalid_argument);
}

TEST(SubsetFractions, EdgeCases) {
  const RealVector abs_ax0{3.0, 1.0, 2.0, 0.5};
  EXPECT_NEAR(smallest_subset_fraction(abs_ax0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(smallest_subset_fraction(abs_ax0, 0.25), 0.5 / norm(abs_ax0), 1e-15);
  const ComplexVector y{{3, 0}, {0, 4}, {1, 0}, {0, 0}};
  // ceil(0.01 * 4) - 1 = 0 entries: the empty subset.
  EXPECT_EQ(largest_subset_fraction(y, 0.01), 0.0);
  EXPECT_NEAR(largest_subset_fraction(y, 0.5), 4.0 / norm(y), 1e-15);
  EXPECT_NEAR(dominated_modulus_mass(abs_ax0, ComplexVector{{3, 0}, {0, 0}, {0, 2.5}, {0, 0}}), std::sqrt(13.0), 1e-15);
}

TEST(SubsetFractions, FullSubsetExceedsBound) {
  // With S = every row the ratio is 1 and beta^{3/2} e^{-1/2} < 1 holds.
  EXPECT_GT(1.0, std::pow(0.01, 1.5) * std::exp(-0.5));
}

TEST(SmallModulus, DefaultDimensionsPass) {
  const SmallModulusReports r = check_small_modulus_lemma(400, 8, 0.01, 30, RngSeed{5});
  EXPECT_TRUE(r.small_modulus.pass);
  EXPECT_TRUE(r.large_entries.pass);
  EXPECT_TRUE(r.first_term.pass);
  EXPECT_EQ(r.small_modulus.violations + r.large_entries.violations + r.first_term.violations, 0u);
  EXPECT_TRUE(r.small_modulus.lower_bound);
  EXPECT_THROW(check_small_modulus_lemma(400, 8, 0.02, 1, RngSeed{1}), std::invalid_argument);
  EXPECT_THROW(check_small_modulus_lemma(400, 8, 0.0, 1, RngSeed{1}), std::invalid_argument);
}

TEST(ImaginaryPart, DefaultDimensionsPass) {
  const LemmaReport r = check_imaginary_part_lemma(800, 8, 20, RngSeed{6});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.worst_ratio, 0.8);
  EXPECT_GE(r.observations.at("worst_case_search_ratio"), r.worst_ratio - 1e-9);
}

TEST(ImaginaryPart, RotatedSignalImageIsPurelyImaginary) {
  // v = i Ax0 has ratio exactly 1, which is why it is excluded from the check.
  const ProblemInstance inst = make_instance(4, 200, RngSeed{7});
  const ComplexVector ax0 = inst.matrix().apply(inst.signal());
  EXPECT_NEAR(imaginary_part_ratio(Complex{0, 1} * ax0, ax0), 1.0, 1e-12);
  EXPECT_NEAR(imaginary_part_ratio(ax0, ax0), 0.0, 1e-12);
}

TEST(ImaginaryPart, OneDimensionalRangeIsVacuous) {
  const LemmaReport r = check_imaginary_part_lemma(50, 1, 5, RngSeed{1});
  EXPECT_TRUE(r.vacuous);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(check_imaginary_part_lemma(100, 8, 1, RngSeed{1}), std::invalid_argument);
}

TEST(ProjectionConcentration, LowerTailWithinBudget) {
  const LemmaReport r = check_projection_concentration(5, 100, 0.1, 10000, RngSeed{8});
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.bound, std::exp(5.0 * (1.0 - 0.1 + std::log(0.1))), 1e-15);
  EXPECT_LE(r.violation_frequency(), r.bound + 0.02);
}

TEST(ProjectionConcentration, UpperTailAndNearCertainRegime) {
  EXPECT_TRUE(check_projection_concentration(5, 100, 3.0, 5000, RngSeed{9}).pass);
  const LemmaReport near = check_projection_concentration(99, 100, 0.99, 2000, RngSeed{10});
  EXPECT_TRUE(near.pass);
}

TEST(ProjectionConcentration, ParameterChecks) {
  EXPECT_THROW(check_projection_concentration(5, 100, 1.0, 10, RngSeed{1}), std::invalid_argument);
  EXPECT_THROW(check_projection_concentration(5, 100, 0.0, 10, RngSeed{1}), std::invalid_argument);
  EXPECT_THROW(check_projection_concentration(5, 5, 0.5, 10, RngSeed{1}), std::invalid_argument);
}

TEST(Contraction, StrictAtDefaultDimensions) {
  const LemmaReport r = measure_contraction_factor(320, 16, 0.05, 100, RngSeed{11});
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.worst_ratio, 1.0);
  EXPECT_LE(r.observations.at("mean_ratio"), 0.9);
}

TEST(Contraction, TinyPerturbationLimit) {
  const LemmaReport r = measure_contraction_factor(320, 16, 1e-8, 20, RngSeed{12});
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(std::isfinite(r.observations.at("mean_ratio")));
  EXPECT_THROW(measure_contraction_factor(320, 16, 0.0, 1, RngSeed{1}), std::invalid_argument);
  EXPECT_THROW(measure_contraction_factor(320, 16, 0.2, 1, RngSeed{1}), std::invalid_argument);
}

TEST(RunVerification, CanonicalOrderAndJobIndependence) {
  VerifyOptions opts;
  opts.seed = RngSeed{3};
  opts.samples = 10;
  opts.jobs = 1;
  const std::vector<LemmaId> asked{LemmaId::LocalContraction, LemmaId::PhaseDifference, LemmaId::LargeEntriesSubset};
  const auto one = run_verification(asked, opts);
  opts.jobs = 4;
  const auto four = run_verification(asked, opts);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].lemma_id, LemmaId::PhaseDifference);
  EXPECT_EQ(one[1].lemma_id, LemmaId::LargeEntriesSubset);
  EXPECT_EQ(one[2].lemma_id, LemmaId::LocalContraction);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(to_json(one[i]).dump(), to_json(four[i]).dump());
}

TEST(LemmaReportJson, Fields) {
  const LemmaReport r = check_phase_difference_lemma(100, RngSeed{1});
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j.at("lemma_id"), "lemma2");
  EXPECT_EQ(j.at("samples"), 100);
  EXPECT_EQ(j.at("pass"), true);
}
