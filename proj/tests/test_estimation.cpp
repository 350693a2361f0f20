#include <doctest.h>

#include <cmath>

#include "swchan/errors.hpp"
#include "swchan/estimation.hpp"

using namespace swchan;

namespace {

const ChannelSpec kNse{ChannelKind::NSE, 3, 1, 2};

Codebook rate_two_thirds() {
  Codebook cb = best_codebook(kNse, 3);
  cb.verified = verify_zero_error(cb);
  return cb;
}

SpectralResult spectral(const ChannelSpec& spec) { return perron_frobenius(enumerate_states(spec)); }

}  // namespace

TEST_CASE("plant parsing and validation") {
  const PlantSpec p = PlantSpec::parse("a=1.2,l=1,vmax=0.01");
  CHECK(p.eigenvalues == std::vector<double>{1.2});
  CHECK(p.v_max == 0.01);
  CHECK(p.h_lin(2) == doctest::Approx(std::log2(1.2)));
  CHECK(PlantSpec::parse(p.to_string()).eigenvalues == p.eigenvalues);
  const PlantSpec d = PlantSpec::parse("a=2:0.5:-3");
  CHECK(d.h_lin(2) == doctest::Approx(1.0 + std::log2(3.0)));
  CHECK_THROWS_AS(PlantSpec::parse("a=1"), ConfigError);
  CHECK_THROWS_AS(PlantSpec::parse("a=-1"), ConfigError);
  CHECK_THROWS_AS(PlantSpec::parse("l=2"), ConfigError);
  CHECK_THROWS_AS(PlantSpec::parse("a=2,zz=1"), ConfigError);
  CHECK_THROWS_AS(PlantSpec::parse("a=2,vmax=-1"), ConfigError);
  CHECK_THROWS_AS(PlantSpec::from_matrix({{1.5, 1}, {0, 2}}, 1, 0, 0), ConfigError);
  CHECK(PlantSpec::from_matrix({{1.5, 0}, {0, 2}}, 1, 0, 0).eigenvalues.size() == 2);
  nlohmann::json j = d;
  CHECK(j.get<PlantSpec>().eigenvalues == d.eigenvalues);
}

TEST_CASE("feasibility verdicts on (3,1) NSE") {
  const SpectralResult s = spectral(kNse);
  CHECK(classify_feasibility(PlantSpec::parse("a=1.05"), kNse, s).verdict == Verdict::AchievableBySufficientCondition);
  CHECK(classify_feasibility(PlantSpec::parse("a=2"), kNse, s).verdict == Verdict::InfeasibleByNecessaryCondition);
  const FeasibilityVerdict mid = classify_feasibility(PlantSpec::parse("a=1.2"), kNse, s);
  CHECK(mid.verdict == Verdict::Indeterminate);
  CHECK(mid.sufficient_threshold == doctest::Approx(0.1152).epsilon(5e-3));
  CHECK(mid.necessary_threshold == doctest::Approx(2.0 / 3));
  // Exactly on the necessary threshold: 2^(2/3).
  CHECK(classify_feasibility(PlantSpec{{std::pow(2.0, 2.0 / 3)}}, kNse, s).verdict == Verdict::Indeterminate);
}

TEST_CASE("verdicts never improve as |a| grows") {
  for (const ChannelSpec spec : {kNse, ChannelSpec{ChannelKind::NSS, 5, 1, 3}, ChannelSpec{ChannelKind::NSS, 4, 2, 3}}) {
    const SpectralResult s = spectral(spec);
    auto rank = [](Verdict v) {
      return v == Verdict::AchievableBySufficientCondition ? 0 : v == Verdict::Indeterminate ? 1 : 2;
    };
    int prev = 0;
    for (double a = 1.001; a < 6.0; a *= 1.01) {
      const int r = rank(classify_feasibility(PlantSpec{{a}}, spec, s).verdict);
      CHECK(r >= prev);
      prev = r;
    }
    CHECK(rank(classify_feasibility(PlantSpec{{0.5}}, spec, s).verdict) <= 1);
  }
}

TEST_CASE("NSS classification never claims tightness") {
  const ChannelSpec spec{ChannelKind::NSS, 5, 1, 3};
  const FeasibilityVerdict v = classify_feasibility(PlantSpec::parse("a=1.1"), spec, spectral(spec));
  CHECK_FALSE(v.tight);
  CHECK(v.sufficient_threshold < v.necessary_threshold);
}

TEST_CASE("contraction factors of the coder-estimator") {
  const PlantSpec p = PlantSpec::parse("a=1.2,vmax=0.01");
  CHECK(block_contraction(p, rate_two_thirds()) == doctest::Approx(0.432));
  CHECK(block_contraction(p, repetition_code(kNse)) == doctest::Approx(0.864));
  CHECK(block_contraction(PlantSpec::parse("a=2"), rate_two_thirds()) == doctest::Approx(2.0));
}

TEST_CASE("bounded error and soundness for a = 1.2 under every adversary") {
  const Codebook cb = rate_two_thirds();
  const PlantSpec p = PlantSpec::parse("a=1.2,l=1,vmax=0.01");
  std::vector<AdversaryPolicy> advs = {AdversaryPolicy::greedy(), AdversaryPolicy::random_admissible(3),
                                       AdversaryPolicy::block_targeted(3, 1), AdversaryPolicy::scripted({})};
  for (auto& adv : advs)
    for (NoiseKind noise : {NoiseKind::Extremal, NoiseKind::Uniform, NoiseKind::Zero}) {
      EstimationOptions o;
      o.noise = {noise, 11};
      const EstimationTrace tr = run_estimation(p, kNse, cb, adv, 10'000, o);
      CHECK(tr.sound);
      CHECK(tr.sup_error < 2.0);
      for (const auto& st : tr.steps) {
        REQUIRE(st.contained);
        REQUIRE(st.err == std::abs(st.e[0]));
        REQUIRE(st.lo[0] <= st.hi[0]);
      }
      // Absolute coordinates keep enough precision early on to see e = x - xhat.
      for (std::size_t t = 0; t < 60; ++t)
        CHECK(static_cast<double>(tr.steps[t].x[0] - tr.steps[t].xhat[0]) ==
              doctest::Approx(tr.steps[t].e[0]).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("repetition code still contracts at a = 1.2") {
  Codebook rep = repetition_code(kNse);
  rep.verified = true;
  auto adv = AdversaryPolicy::greedy();
  const EstimationTrace tr = run_estimation(PlantSpec::parse("a=1.2,vmax=0.01"), kNse, rep, adv, 3000);
  CHECK(tr.sound);
  CHECK(tr.sup_error < 2.0);
  // Steady state of r -> 0.864 r + 0.01 (1 + 1.2 + 1.44).
  CHECK(tr.errors.back() <= 0.0364 / (1 - 0.864) + 1e-9);
}

TEST_CASE("error doubles every block at a = 2") {
  const ErrorEnvelope env = adversarial_error_growth(PlantSpec::parse("a=2,vmax=0.01"), kNse, rate_two_thirds(), 150);
  CHECK(env.sound);
  REQUIRE(env.block_growth.size() == 50);
  for (double g : env.block_growth) CHECK(g >= 1.9);
  CHECK(env.adversaries.size() == 5);
}

TEST_CASE("envelope edge cases") {
  const ErrorEnvelope zero = adversarial_error_growth(PlantSpec::parse("a=1.05,l=3"), kNse, rate_two_thirds(), 0);
  CHECK(zero.envelope == std::vector<double>{3.0});
  const ErrorEnvelope calm = adversarial_error_growth(PlantSpec::parse("a=1.05,vmax=0.01"), kNse, rate_two_thirds(), 600);
  CHECK(*std::max_element(calm.envelope.begin(), calm.envelope.end()) < 1.2);
}

TEST_CASE("stable and diagonal plants") {
  auto adv = AdversaryPolicy::greedy();
  const EstimationTrace stable = run_estimation(PlantSpec::parse("a=0.5,vmax=0.1"), kNse, rate_two_thirds(), adv, 500);
  CHECK(stable.sound);
  CHECK(stable.sup_error <= 1.0);

  const ChannelSpec wide{ChannelKind::NSE, 2, 1, 4};
  Codebook cb = best_codebook(wide, 4);
  cb.verified = verify_zero_error(cb);
  REQUIRE(cb.size() >= 16);
  auto adv2 = AdversaryPolicy::random_admissible(5);
  const EstimationTrace diag = run_estimation(PlantSpec::parse("a=1.3:-1.2:0.4,vmax=0.01,wmax=0.01"), wide, cb, adv2, 4000);
  CHECK(diag.sound);
  CHECK(diag.contraction < 1.0);
  CHECK(diag.sup_error < 5.0);
  std::size_t product = 1;
  for (std::size_t c : diag.cells_per_mode) product *= c;
  CHECK(product <= cb.size());
}

TEST_CASE("measurement noise keeps the estimator sound") {
  auto adv = AdversaryPolicy::random_admissible(9);
  EstimationOptions o;
  o.noise = {NoiseKind::Uniform, 4};
  o.initial = InitialPlacement::Uniform;
  const EstimationTrace tr =
      run_estimation(PlantSpec::parse("a=1.1,vmax=0.02,wmax=0.05"), kNse, rate_two_thirds(), adv, 5000, o);
  CHECK(tr.sound);
  CHECK(tr.sup_error < 3.0);
}

TEST_CASE("rejects unusable codebooks") {
  Codebook bad;
  bad.spec = kNse;
  bad.t = 3;
  bad.codewords = {0, 1};
  auto adv = AdversaryPolicy::greedy();
  CHECK_THROWS_AS(run_estimation(PlantSpec::parse("a=1.2"), kNse, bad, adv, 10), ConfigError);
  CHECK_THROWS_AS(run_estimation(PlantSpec::parse("a=1.2"), ChannelSpec{ChannelKind::NSE, 3, 1, 3}, rate_two_thirds(),
                                 adv, 10),
                  ConfigError);
}

TEST_CASE("necessity certificate") {
  const auto div = necessity_certificate(PlantSpec::parse("a=2"), 2, 2.0 / 3, 30, 1.0);
  CHECK(div.diverges);
  CHECK(div.bound == doctest::Approx(std::pow(2.0, 10.0)));
  const auto conv = necessity_certificate(PlantSpec::parse("a=1.2"), 2, 2.0 / 3, 30, 1.0);
  CHECK_FALSE(conv.diverges);
  CHECK(conv.bound < 1.0);
  const auto open = necessity_certificate(PlantSpec::parse("a=1.5"), 2, 0.0, 4, 2.0);
  CHECK(open.bound == doctest::Approx(2.0 * std::pow(1.5, 4)));
  // At R = 1 - d/n the certificate diverges exactly when h_lin exceeds it.
  for (double a = 1.01; a < 3.0; a += 0.01) {
    const PlantSpec p{{a}};
    CHECK(necessity_certificate(p, 2, 2.0 / 3, 10, 1.0).diverges == (p.h_lin(2) > 2.0 / 3));
  }
  CHECK_THROWS_AS(necessity_certificate(PlantSpec::parse("a=2:3"), 2, 0.5, 1, 1), ConfigError);
}

TEST_CASE("trace CSV layout") {
  auto adv = AdversaryPolicy::greedy();
  const EstimationTrace tr = run_estimation(PlantSpec::parse("a=1.2"), kNse, rate_two_thirds(), adv, 6);
  const std::string csv = trace_csv(tr);
  CHECK(csv.rfind("t,x,xhat,err,interval_lo,interval_hi,channel_event\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.find("erasure") != std::string::npos);
}
