#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "phaseforge/altproj.hpp"
#include "phaseforge/problem.hpp"
#include "phaseforge/spectral_init.hpp"

using namespace phaseforge;

namespace {

ComplexVector perturb(const ComplexVector& x0, double relative, RngSeed seed) {
  Engine e = make_engine(seed);
  const ComplexVector u = sample_complex_gaussian(x0.size(), e);
  return x0 + Complex{relative * norm(x0) / norm(u), 0.0} * u;
}

double max_abs_diff(const ComplexVector& a, const ComplexVector& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

}  // namespace

TEST(StoppingCriteria, Validation) {
  EXPECT_THROW(StoppingCriteria(0), std::invalid_argument);
  EXPECT_THROW(StoppingCriteria(10, 0.0), std::invalid_argument);
  EXPECT_THROW(StoppingCriteria(10, 1e-7, -1.0), std::invalid_argument);
  EXPECT_THROW(StoppingCriteria(10, 1e-7, 1e-6, 1.0), std::invalid_argument);
  const StoppingCriteria d;
  EXPECT_EQ(d.max_iters(), 1000u);
  EXPECT_EQ(d.success_tol(), 1e-7);
}

TEST(StopReason, StringRoundTrip) {
  for (StopReason r : {StopReason::Success, StopReason::MaxIters, StopReason::Stagnated}) {
    EXPECT_EQ(stop_reason_from_string(to_string(r)), r);
  }
  EXPECT_THROW(stop_reason_from_string("nope"), std::invalid_argument);
}

TEST(ApStep, SignalIsFixedPoint) {
  const ProblemInstance inst = make_instance(16, 128, RngSeed{1});
  const ComplexVector out = ap_step(inst.matrix(), inst.measurements(), inst.signal());
  EXPECT_LE(norm(out - inst.signal()), 1e-10 * norm(inst.signal()));
}

TEST(ApStep, GlobalPhaseOfSignalIsFixedPoint) {
  const ProblemInstance inst = make_instance(16, 128, RngSeed{2});
  const ComplexVector x = std::polar(1.0, 2.1) * inst.signal();
  EXPECT_LE(norm(ap_step(inst.matrix(), inst.measurements(), x) - x), 1e-10);
}

TEST(ApStep, OneByOneHandComputation) {
  const DenseComplexMatrix a(1, 1, {Complex{1, 0}});
  const ComplexVector out = ap_step(a, RealVector{1.0}, ComplexVector{{0, 1}});
  EXPECT_NEAR(std::abs(out[0] - Complex(0, 1)), 0.0, 1e-15);
}

TEST(ApStep, InputValidation) {
  const ProblemInstance inst = make_instance(4, 16, RngSeed{3});
  EXPECT_THROW(ap_step(inst.matrix(), RealVector(15, 1.0), inst.signal()), DimensionError);
  EXPECT_THROW(ap_step(inst.matrix(), inst.measurements(), ComplexVector(5)), DimensionError);
  RealVector neg = inst.measurements();
  neg[0] = -1.0;
  EXPECT_THROW(ap_step(inst.matrix(), neg, inst.signal()), std::invalid_argument);
}

TEST(ApStep, PhaseEquivarianceAndScaleInvariance) {
  const ProblemInstance inst = make_instance(8, 64, RngSeed{4});
  Engine e = make_engine(RngSeed{5});
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int k = 0; k < 20; ++k) {
    const ComplexVector z = sample_complex_gaussian(8, e);
    const ComplexVector base = ap_step(inst.matrix(), inst.measurements(), z);
    const Complex rot = std::polar(1.0, angle(e));
    EXPECT_LE(max_abs_diff(ap_step(inst.matrix(), inst.measurements(), rot * z), rot * base), 1e-12);
    EXPECT_LE(max_abs_diff(ap_step(inst.matrix(), inst.measurements(), Complex{scale(e), 0} * z), base), 1e-12);
  }
}

TEST(ApStep, ContractsNearSolutionInNearlyAllTrials) {
  int contracted = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const ProblemInstance inst = make_instance(16, 320, derive_seed(RngSeed{77}, {t}));
    const ComplexVector x = perturb(inst.signal(), 0.05, derive_seed(RngSeed{78}, {t}));
    const double before = dist_up_to_phase(inst.signal(), x);
    const double after = dist_up_to_phase(inst.signal(), ap_step(inst.matrix(), inst.measurements(), x));
    if (after < before) ++contracted;
  }
  EXPECT_GE(contracted, 990);
}

TEST(StagnationResidual, ZeroAtSolution) {
  const ProblemInstance inst = make_instance(8, 64, RngSeed{6});
  EXPECT_LE(stagnation_residual(inst.matrix(), inst.measurements(), inst.matrix().apply(inst.signal())), 1e-10);
}

TEST(StagnationResidual, PositiveOffRange) {
  const ProblemInstance inst = make_instance(8, 64, RngSeed{7});
  Engine e = make_engine(RngSeed{8});
  EXPECT_GT(stagnation_residual(inst.matrix(), inst.measurements(), sample_complex_gaussian(64, e)), 1e-3);
}

TEST(StagnationResidual, SmallAtLimitOfLongRun) {
  const ProblemInstance inst = make_instance(8, 48, RngSeed{9});
  ComplexVector z = random_sphere_init(8, RngSeed{10});
  for (int k = 0; k < 500; ++k) z = ap_step(inst.matrix(), inst.measurements(), z);
  EXPECT_LE(stagnation_residual(inst.matrix(), inst.measurements(), inst.matrix().apply(z)), 1e-6);
}

TEST(StagnationResidual, ZeroMeasurementsRejected) {
  const ProblemInstance inst = make_instance(2, 4, RngSeed{1});
  EXPECT_THROW(stagnation_residual(inst.matrix(), RealVector(4, 0.0), ComplexVector(4)), std::invalid_argument);
}

TEST(ModulusSetDistance, ZeroOnConstraintSet) {
  const ProblemInstance inst = make_instance(4, 16, RngSeed{2});
  EXPECT_NEAR(modulus_set_distance(inst.measurements(), inst.matrix().apply(inst.signal())), 0.0, 1e-12);
}

TEST(Run, StartingAtSolutionSucceedsImmediately) {
  const ProblemInstance inst = make_instance(16, 128, RngSeed{11});
  const SolverRun r = run(inst.matrix(), inst.measurements(), inst.signal(), {}, inst.signal());
  EXPECT_EQ(r.stop_reason, StopReason::Success);
  EXPECT_EQ(r.iterations_used, 1u);
  EXPECT_EQ(r.error_trace->size(), 1u);
}

TEST(Run, TraceLengthsAndSuccessImpliesRecovery) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ProblemInstance inst = make_instance(16, 160, RngSeed{200 + s});
    const ComplexVector z0 = truncated_spectral_init(inst.matrix(), inst.measurements(), 200, RngSeed{s});
    const SolverRun r = run(inst.matrix(), inst.measurements(), z0, {}, inst.signal());
    ASSERT_TRUE(r.error_trace.has_value());
    EXPECT_EQ(r.error_trace->size(), r.iterations_used);
    EXPECT_EQ(r.stagnation_residual_trace.size(), r.iterations_used);
    if (r.stop_reason == StopReason::Success) {
      EXPECT_LE(*r.final_error(), 1e-7);
      EXPECT_LE(dist_up_to_phase(inst.signal(), r.final_iterate), 1e-7 * norm(inst.signal()));
    }
  }
}

TEST(Run, WithoutGroundTruthStopsOnStagnation) {
  const ProblemInstance inst = make_instance(8, 80, RngSeed{12});
  const ComplexVector z0 = truncated_spectral_init(inst.matrix(), inst.measurements(), 200, RngSeed{1});
  const SolverRun r = run(inst.matrix(), inst.measurements(), z0);
  EXPECT_FALSE(r.error_trace.has_value());
  EXPECT_EQ(r.stop_reason, StopReason::Stagnated);
  EXPECT_LE(dist_up_to_phase(inst.signal(), r.final_iterate), 1e-6);
}

TEST(Run, MaxItersRespected) {
  const ProblemInstance inst = make_instance(16, 48, RngSeed{13});
  const SolverRun r = run(inst.matrix(), inst.measurements(), random_sphere_init(16, RngSeed{1}), StoppingCriteria(3),
                          inst.signal());
  EXPECT_LE(r.iterations_used, 3u);
}

TEST(Run, BoundednessAndMonotoneConstraintDistance) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ProblemInstance inst = make_instance(8, 32, RngSeed{300 + s});
    const double nb = norm(inst.measurements());
    ComplexVector z = random_sphere_init(8, RngSeed{s});
    double prev = INFINITY;
    for (int k = 0; k < 60; ++k) {
      z = ap_step(inst.matrix(), inst.measurements(), z);
      const ComplexVector y = inst.matrix().apply(z);
      EXPECT_LE(norm(y), nb + 1e-9);
      const double d = modulus_set_distance(inst.measurements(), y);
      EXPECT_LE(d, prev + 1e-10) << "step " << k;
      prev = d;
    }
  }
}

TEST(Run, GeometricDecayFromSpectralInit) {
  int geometric = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const ProblemInstance inst = make_instance(16, 320, derive_seed(RngSeed{31}, {t}));
    const ComplexVector z0 = truncated_spectral_init(inst.matrix(), inst.measurements(), 200, derive_seed(RngSeed{32}, {t}));
    const SolverRun r = run(inst.matrix(), inst.measurements(), z0, {}, inst.signal());
    const auto& e = *r.error_trace;
    bool ok = r.stop_reason == StopReason::Success;
    for (std::size_t k = 0; ok && k + 1 < e.size(); ++k) ok = e[k + 1] <= 0.9 * e[k];
    if (ok) ++geometric;
  }
  EXPECT_GE(geometric, 190);
}

TEST(Run, RejectsZeroMeasurementsAndGroundTruth) {
  const ProblemInstance inst = make_instance(2, 8, RngSeed{1});
  EXPECT_THROW(run(inst.matrix(), RealVector(8, 0.0), inst.signal()), std::invalid_argument);
  EXPECT_THROW(run(inst.matrix(), inst.measurements(), inst.signal(), {}, ComplexVector(2)), std::invalid_argument);
}
