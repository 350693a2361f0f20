#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "swchan/capacity.hpp"
#include "swchan/errors.hpp"

using namespace swchan;

TEST_CASE("gains of the reduced recursion") {
  const GainGraph g(enumerate_states({ChannelKind::NSE, 3, 1, 2}));
  REQUIRE(g.exact());
  for (std::size_t i = 0; i < g.graph().edges().size(); ++i)
    CHECK(g.integer_gain()[i] == (g.graph().edges()[i].label ? 0 : 1));

  const GainGraph h(enumerate_states({ChannelKind::NSS, 3, 1, 3}));
  CHECK(!h.exact());
  for (std::size_t i = 0; i < h.graph().edges().size(); ++i) {
    const double want = h.graph().edges()[i].label ? 1.0 - std::log(2.0) / std::log(3.0) : 1.0;
    CHECK(h.log_gain()[i] == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("first DP steps on (3,1) NSE") {
  const GainGraph g(enumerate_states({ChannelKind::NSE, 3, 1, 2}));
  const DPTrajectory t = dp_capacity(g, 12);
  CHECK(t.w[1] == std::vector<double>{0, 1, 1, 0});
  CHECK(t.w[2] == std::vector<double>{1, 2, 1, 1});
  CHECK(t.w[3][1] == 2);
  CHECK_THROWS_AS(dp_capacity(g, 3), ConfigError);
}

TEST_CASE("DP values equal the minimum gain over admissible patterns") {
  for (const ChannelSpec spec : {ChannelSpec{ChannelKind::NSE, 3, 1, 2}, ChannelSpec{ChannelKind::NSE, 4, 2, 2},
                                 ChannelSpec{ChannelKind::NSS, 3, 1, 3}}) {
    const GainGraph g(enumerate_states(spec));
    const int k_max = std::max<int>(9, static_cast<int>(g.size()));
    const DPTrajectory t = dp_capacity(g, k_max);
    const double err_gain = spec.kind == ChannelKind::NSE ? 0.0 : 1.0 - std::log(spec.q - 1.0) / std::log(spec.q);
    for (int k = 1; k <= 8; ++k)
      for (StateIndex s = 0; s < g.size(); ++s) {
        const auto& w = g.graph().state(s).window;
        const double want = oracle::min_path_gain(spec, oracle::Word(w.begin(), w.end()), k,
                                                  [&](int l) { return l ? err_gain : 1.0; });
        CHECK(t.w[k][s] == doctest::Approx(want).epsilon(1e-12));
      }
  }
}

TEST_CASE("(3,1) NSE minimum mean cycle and witness") {
  const GainGraph g(enumerate_states({ChannelKind::NSE, 3, 1, 2}));
  const MeanCycle m = min_mean_cycle(g);
  REQUIRE(m.exact_value);
  CHECK(*m.exact_value == Rational(2, 3));
  CHECK(m.cycle == std::vector<StateIndex>{1, 2, 3});
  CHECK(m.cycle_gains == std::vector<double>{1, 1, 0});
}

TEST_CASE("(5,2) NSE witness is a 5-cycle with two erasures") {
  const MeanCycle m = min_mean_cycle(GainGraph(enumerate_states({ChannelKind::NSE, 5, 2, 2})));
  CHECK(*m.exact_value == Rational(3, 5));
  CHECK(m.cycle.size() == 5);
  CHECK(std::count(m.cycle_gains.begin(), m.cycle_gains.end(), 0.0) == 2);
}

TEST_CASE("mean cycle agrees with exhaustive simple-cycle search") {
  for (int n = 1; n <= 5; ++n)
    for (int d = 0; d <= n; ++d) {
      const ChannelSpec spec{ChannelKind::NSE, n, d, 2};
      const MeanCycle m = min_mean_cycle(GainGraph(enumerate_states(spec)));
      CHECK(*m.exact_value == oracle::min_mean_cycle_nse(spec));
      // The witness really attains the value.
      double sum = 0;
      for (double x : m.cycle_gains) sum += x;
      CHECK(sum / m.cycle.size() == doctest::Approx(m.value));
    }
}

TEST_CASE("closed forms") {
  CHECK(*closed_form_c0f({ChannelKind::NSE, 7, 3, 2}).exact_value == Rational(4, 7));
  const ClosedForm c = closed_form_c0f({ChannelKind::NSS, 5, 1, 3});
  CHECK(c.flag == BoundFlag::UpperBound);
  CHECK(c.value == doctest::Approx(1.0 - 0.2 * std::log(2.0) / std::log(3.0)));
  const ClosedForm z = closed_form_c0f({ChannelKind::NSS, 4, 2, 3});
  CHECK(z.value == 0.0);
  CHECK(z.flag == BoundFlag::Exact);
}

TEST_CASE("analyze_capacity report") {
  const CapacityReport r = analyze_capacity({ChannelKind::NSE, 3, 1, 2});
  CHECK(r.iterations == 40);
  CHECK(r.c0f == doctest::Approx(2.0 / 3.0));
  CHECK(r.flag == BoundFlag::Exact);
  CHECK(std::abs(r.c0f_dp - r.c0f) <= 4.0 / 40 + 1e-12);
  const auto j = to_json(r);
  CHECK(j["c0f_mmc"]["num"] == 2);
  CHECK(j["c0f_mmc"]["den"] == 3);
  CHECK(j["flag"] == "exact");

  const CapacityReport s = analyze_capacity({ChannelKind::NSS, 4, 2, 3});
  CHECK(s.c0f == 0.0);
  CHECK(s.flag == BoundFlag::Exact);
  const CapacityReport u = analyze_capacity({ChannelKind::NSS, 5, 1, 3});
  CHECK(u.flag == BoundFlag::UpperBound);
}

TEST_CASE("reduced recursion identities on NSE") {
  for (int n = 2; n <= 7; ++n)
    for (int d = 1; d < n; ++d) {
      const GainGraph g(enumerate_states({ChannelKind::NSE, n, d, 2}));
      const DPTrajectory t = dp_capacity(g, std::max<int>(static_cast<int>(g.size()), 2 * n + d + 4));
      CHECK(verify_sm_recurrence(g, t));
    }
}

TEST_CASE("serial and parallel DP agree") {
  const GainGraph g(enumerate_states({ChannelKind::NSS, 6, 2, 3}));
  const auto a = dp_capacity(g, static_cast<int>(g.size()), kernels::Exec::Serial);
  const auto b = dp_capacity(g, static_cast<int>(g.size()), kernels::Exec::Parallel);
  CHECK(a.w == b.w);
  CHECK(a.argmin_state == b.argmin_state);
  CHECK(min_mean_cycle(g, kernels::Exec::Serial).value == min_mean_cycle(g, kernels::Exec::Parallel).value);
}

TEST_CASE("simplex DP step matches the reduced step for q = 2") {
  const ChannelSpec spec{ChannelKind::NSE, 3, 1, 2};
  const StateGraph graph = enumerate_states(spec);
  const GainGraph g(graph);
  std::vector<double> w(graph.size(), 0.0);
  std::vector<double> lin(graph.size(), 1.0);
  for (int k = 0; k < 6; ++k) {
    w = reduced_dp_step(g, w);
    lin = simplex_dp_step(graph, lin, 100);
    for (StateIndex s = 0; s < graph.size(); ++s) CHECK(std::log2(lin[s]) == doctest::Approx(w[s]).epsilon(1e-9));
  }
}

TEST_CASE("unconstrained windows still give one strongly connected class") {
  CHECK_NOTHROW(min_mean_cycle(GainGraph(enumerate_states({ChannelKind::NSE, 2, 2, 2}))));
}
