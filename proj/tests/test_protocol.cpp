#include <gtest/gtest.h>

#include <cmath>

#include "rfmag/errors.hpp"
#include "rfmag/protocol.hpp"

using namespace rfmag;

namespace {

ExperimentConfig entangled_config() {
  ExperimentConfig c;
  c.ensemble.n_atoms_per_cell = 3.6e11;
  c.ensemble.t2_dark = 16e-3;
  c.ensemble.gamma_swap = 112.9;
  c.ensemble.gamma_extra = 150.0;
  c.probe1.duration = 2e-3;
  c.probe1.mode_sign = ModeSign::rising;
  c.probe2.duration = 3e-3;
  c.rf.duration = 0.44e-3;
  c.delay = 0.0;
  return c;
}

const PulsePrediction& find(const std::vector<PulsePrediction>& p, const std::string& id) {
  for (const auto& x : p) {
    if (x.pulse_id == id) return x;
  }
  throw std::out_of_range(id);
}

SequenceStep probe_step(const std::string& id, const ProbeParams& p) {
  SequenceStep s;
  s.kind = StepKind::probe;
  s.id = id;
  s.probe = p;
  return s;
}

SequenceStep pump_step() { return SequenceStep{}; }

}  // namespace

TEST(Sequence, StepLayout) {
  const auto c = entangled_config();
  const auto pn = build_sequence(c, ProtocolKind::pn);
  ASSERT_EQ(pn.size(), 3u);
  EXPECT_EQ(pn[0].kind, StepKind::pump);
  EXPECT_EQ(pn[1].kind, StepKind::rf);
  EXPECT_EQ(pn[2].id, "readout");
  const auto ent = build_sequence(c, ProtocolKind::entangled);
  ASSERT_EQ(ent.size(), 5u);
  EXPECT_EQ(ent[1].id, "probe1");
  EXPECT_EQ(ent[4].id, "probe2");
  const auto un = build_sequence(c, ProtocolKind::unentangled);
  ASSERT_EQ(un.size(), 5u);
  EXPECT_EQ(un[1].kind, StepKind::delay);
  EXPECT_DOUBLE_EQ(un[1].duration, c.probe1.duration);
}

TEST(Protocol, ZeroCouplingReadsShotNoise) {
  auto c = entangled_config();
  c.ensemble.gamma_swap = 0.0;
  const CompiledProtocol pn(c, ProtocolKind::pn);
  const auto pred = pn.predict();
  EXPECT_NEAR(pred.back().var_c, 0.5, 1e-12);
  EXPECT_NEAR(pred.back().var_s, 0.5, 1e-12);
  EXPECT_NEAR(pred.back().mean_c, 0.0, 1e-12);
}

TEST(Protocol, PnReadoutVarianceMatchesPrediction) {
  const auto c = entangled_config();
  const CompiledProtocol pn(c, ProtocolKind::pn);
  const auto pred = pn.predict().back();
  const auto summary = summarize(monte_carlo(pn, 100000, 21, 1)).at("readout");
  EXPECT_NEAR(*summary.s2c.variance, pred.var_c, 3 * *summary.s2c.variance_stderr);
  EXPECT_NEAR(*summary.s2s.variance, pred.var_s, 3 * *summary.s2s.variance_stderr);
  EXPECT_NEAR(summary.s2c.mean, pred.mean_c, 3 * *summary.s2c.mean_stderr);
}

TEST(MonteCarlo, BitIdenticalAcrossWorkersAndSerial) {
  const CompiledProtocol ent(entangled_config(), ProtocolKind::entangled);
  const auto a = monte_carlo(ent, 500, 5, 1);
  const auto b = monte_carlo(ent, 500, 5, 2);
  const auto s = monte_carlo_serial(ent, 500, 5);
  ASSERT_EQ(a.records.size(), 500u);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    for (std::size_t k = 0; k < a.records[i].outcomes.size(); ++k) {
      EXPECT_EQ(a.records[i].outcomes[k].s2c, b.records[i].outcomes[k].s2c);
      EXPECT_EQ(a.records[i].outcomes[k].s2s, s.records[i].outcomes[k].s2s);
    }
  }
  const auto other = monte_carlo(ent, 10, 6, 1);
  EXPECT_NE(other.records[0].outcomes[0].s2c, a.records[0].outcomes[0].s2c);
}

TEST(MonteCarlo, SingleShotHasNoVariance) {
  const CompiledProtocol pn(entangled_config(), ProtocolKind::pn);
  const auto s = summarize(monte_carlo(pn, 1, 1, 1)).at("readout");
  EXPECT_EQ(s.s2c.n, 1u);
  EXPECT_FALSE(s.s2c.variance.has_value());
  EXPECT_FALSE(s.s2c.mean_stderr.has_value());
}

TEST(BackAction, TwoCellEntanglingPulseReducesReadoutVariance) {
  const auto c = entangled_config();
  const auto ent = CompiledProtocol(c, ProtocolKind::entangled).predict();
  const auto un = CompiledProtocol(c, ProtocolKind::unentangled).predict();
  EXPECT_LT(find(ent, "probe2").var_c, find(un, "probe2").var_c);
  EXPECT_LT(find(ent, "probe2").var_s, find(un, "probe2").var_s);
}

TEST(BackAction, OneCellFirstPulseAddsNoise) {
  auto c = entangled_config();
  c.ensemble.n_cells = 1;
  const std::vector<SequenceStep> with{pump_step(), probe_step("probe1", c.probe1),
                                       probe_step("probe2", c.probe2)};
  const std::vector<SequenceStep> without{pump_step(), probe_step("probe2", c.probe2)};
  const auto w = CompiledProtocol(c, with).predict();
  const auto wo = CompiledProtocol(c, without).predict();
  // Without a second cell the measured and the back-action quadratures rotate
  // into each other, so the first pulse leaves more noise, not less.
  EXPECT_GT(find(w, "probe2").var_c + find(w, "probe2").var_s,
            find(wo, "probe2").var_c + find(wo, "probe2").var_s);
}

TEST(Protocol, RfResponseUnchangedByEntanglingPulse) {
  auto c = entangled_config();
  c.rf.amplitude = 1e-12;
  const auto ent = CompiledProtocol(c, ProtocolKind::entangled).predict();
  const auto un = CompiledProtocol(c, ProtocolKind::unentangled).predict();
  EXPECT_GT(std::abs(find(un, "probe2").mean_c), 1.0);
  EXPECT_NEAR(find(ent, "probe2").mean_c, find(un, "probe2").mean_c, 1e-9);
  EXPECT_NEAR(find(ent, "probe2").mean_s, find(un, "probe2").mean_s, 1e-9);
}

TEST(Protocol, PumpResetsState) {
  const auto c = entangled_config();
  const std::vector<SequenceStep> twice{pump_step(), probe_step("a", c.probe1), pump_step(),
                                        probe_step("b", c.probe2)};
  const std::vector<SequenceStep> once{pump_step(), probe_step("b", c.probe2)};
  const auto t = CompiledProtocol(c, twice).predict();
  const auto o = CompiledProtocol(c, once).predict();
  EXPECT_NEAR(find(t, "b").var_c, find(o, "b").var_c, 1e-12);
  EXPECT_NEAR(find(t, "b").atom_var_z, find(o, "b").atom_var_z, 1e-12);
  Rng r1 = shot_rng(3, 0);
  const ShotRecord rec = CompiledProtocol(c, twice).run(r1);
  EXPECT_EQ(rec.outcomes.size(), 2u);
  EXPECT_THROW(rec.outcome("missing"), std::out_of_range);
}

TEST(Protocol, QuadraturesUncorrelated) {
  const auto c = entangled_config();
  for (auto kind : {ProtocolKind::pn, ProtocolKind::entangled, ProtocolKind::unentangled}) {
    for (const auto& p : CompiledProtocol(c, kind).predict()) {
      EXPECT_NEAR(p.cov_cs, 0.0, 1e-12);
    }
  }
}

TEST(Protocol, DelayFarBeyondT2ReturnsToFloor) {
  auto c = entangled_config();
  c.delay = 50 * c.ensemble.t2_dark;
  const auto ent = CompiledProtocol(c, ProtocolKind::entangled).predict();
  const auto un = CompiledProtocol(c, ProtocolKind::unentangled).predict();
  EXPECT_NEAR(find(ent, "probe2").var_c, find(un, "probe2").var_c, 1e-9);
}

TEST(Protocol, EntangledNeedsTwoCells) {
  auto c = entangled_config();
  c.ensemble.n_cells = 1;
  EXPECT_THROW(CompiledProtocol(c, ProtocolKind::entangled), ConfigError);
  EXPECT_THROW(CompiledProtocol(c, ProtocolKind::calibration), ConfigError);
  EXPECT_NO_THROW(CompiledProtocol(c, ProtocolKind::pn));
}

TEST(Protocol, TimeDomainAgreesWithModeLevel) {
  auto c = entangled_config();
  c.probe2.duration = 0.2e-3;
  c.rf.amplitude = 0.3e-12;
  const CompiledProtocol mode(c, ProtocolKind::pn);
  c.readout_path = ReadoutPath::time_domain;
  const CompiledProtocol td(c, ProtocolKind::pn);
  const auto a = summarize(monte_carlo(mode, 10000, 8, 1)).at("readout");
  const auto b = summarize(monte_carlo(td, 10000, 9, 1)).at("readout");
  const double se_c = std::hypot(*a.s2c.mean_stderr, *b.s2c.mean_stderr);
  const double se_s = std::hypot(*a.s2s.mean_stderr, *b.s2s.mean_stderr);
  EXPECT_GT(std::abs(a.s2c.mean), 10 * se_c);
  EXPECT_NEAR(a.s2c.mean, b.s2c.mean, 3 * se_c);
  EXPECT_NEAR(a.s2s.mean, b.s2s.mean, 3 * se_s);
  EXPECT_NEAR(*b.s2c.variance / *a.s2c.variance, 1.0, 0.05);
  EXPECT_NEAR(*b.s2s.variance / *a.s2s.variance, 1.0, 0.05);
}

TEST(Protocol, TimeDomainNeedsCarrier) {
  auto c = entangled_config();
  c.readout_path = ReadoutPath::time_domain;
  c.b_dc = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

namespace {

ExperimentConfig calibration_config(double s3c) {
  ExperimentConfig c;
  c.ensemble.gamma_swap = 338.7;
  c.ensemble.gamma_extra = 0.0;
  c.probe1.duration = 1e-3;
  c.probe2.duration = 1e-3;
  c.probe1.s3c_displacement = s3c;
  return c;
}

}  // namespace

TEST(Calibration, RecoversKappaSquared) {
  const auto c = calibration_config(1.0);
  const double kappa2 = std::pow(coupling_constant(338.7, 1e-3, c.probe1.xi_squared), 2);
  EXPECT_NEAR(kappa2, 3.1, 0.01);
  const auto r = run_calibration_protocol(c, 10000, 3, 1);
  EXPECT_NEAR(r.expected, kappa2, 1e-9);
  EXPECT_NEAR(r.kappa_squared, kappa2, 3 * r.std_error);
  EXPECT_LT(r.std_error, 0.1);
}

TEST(Calibration, ZeroCouplingGivesZero) {
  auto c = calibration_config(1.0);
  c.ensemble.gamma_swap = 0.0;
  const auto r = run_calibration_protocol(c, 4000, 4, 1);
  EXPECT_NEAR(r.expected, 0.0, 1e-12);
  EXPECT_NEAR(r.kappa_squared, 0.0, 3 * r.std_error);
}

TEST(Calibration, RawMeanLinearInDisplacement) {
  std::vector<CalibrationResult> r;
  for (double s : {1.0, 2.0, 3.0}) r.push_back(run_calibration_protocol(calibration_config(s), 2000, 5, 1));
  const double step = r[1].raw_mean - r[0].raw_mean;
  EXPECT_NEAR(r[2].raw_mean - r[1].raw_mean, step, 1e-9);
  EXPECT_NEAR(step, r[0].expected * std::sqrt(calibration_config(1).probe2.eta_detection), 1e-9);
  EXPECT_NEAR(r[1].std_error, 0.5 * r[0].std_error, 1e-9);
}

TEST(Calibration, NeedsDisplacement) {
  EXPECT_THROW(CompiledProtocol(calibration_config(0.0), ProtocolKind::calibration), ConfigError);
}

namespace {

QuadratureState random_two_cell_state(std::uint64_t seed) {
  Rng rng = shot_rng(seed, 0);
  Eigen::MatrixXd a(4, 4);
  Eigen::VectorXd m(4);
  for (int i = 0; i < 4; ++i) {
    m(i) = standard_normal(rng);
    for (int j = 0; j < 4; ++j) a(i, j) = standard_normal(rng);
  }
  Eigen::MatrixXd cov = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4);
  return QuadratureState::make(atomic_modes(CellConfig::two), m, cov);
}

}  // namespace

TEST(SpinFlip, DoubleFlipIsIdentity) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto s = random_two_cell_state(seed);
    const auto back = spin_flip(spin_flip(s));
    EXPECT_TRUE(back.mean().isApprox(s.mean(), 1e-14));
    EXPECT_TRUE(back.cov().isApprox(s.cov(), 1e-14));
    EXPECT_EQ(back.labels(), s.labels());
  }
}

TEST(SpinFlip, MovesMinusSectorToPlus) {
  auto s = QuadratureState::vacuum(atomic_modes(CellConfig::two));
  s = displace(s, modes::y_minus, 1.7);
  const auto f = spin_flip(s);
  EXPECT_DOUBLE_EQ(f.mean()(f.index_of(modes::y_plus)), 1.7);
  EXPECT_DOUBLE_EQ(f.mean()(f.index_of(modes::y_minus)), 0.0);
}

TEST(SpinFlip, PreservesCovarianceSpectrum) {
  const auto s = random_two_cell_state(9);
  const auto f = spin_flip(s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(s.cov()), b(f.cov());
  EXPECT_TRUE(a.eigenvalues().isApprox(b.eigenvalues(), 1e-12));
}

TEST(SpinFlip, RejectsOneCellState) {
  EXPECT_THROW(spin_flip(QuadratureState::vacuum(atomic_modes(CellConfig::one))), std::out_of_range);
}

TEST(Ensemble, ValuesFollowRecordOrder) {
  const CompiledProtocol ent(entangled_config(), ProtocolKind::entangled);
  const auto e = monte_carlo(ent, 20, 2, 1);
  const auto v = e.values("probe2", true);
  ASSERT_EQ(v.size(), 20u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], e.records[i].outcome("probe2").s2c);
  EXPECT_EQ(summarize(e).size(), 2u);
}
