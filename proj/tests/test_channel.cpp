#include <doctest.h>

#include "oracles.hpp"
#include "swchan/channel.hpp"
#include "swchan/errors.hpp"

using namespace swchan;

namespace {

std::vector<std::string> words(const StateGraph& g) {
  std::vector<std::string> out;
  for (const ChannelState& s : g.states()) out.push_back(window_word(s, g.spec().kind));
  return out;
}

oracle::Word as_word(const ChannelState& s) { return oracle::Word(s.window.begin(), s.window.end()); }

}  // namespace

TEST_CASE("spec validation and parsing") {
  CHECK_NOTHROW(ChannelSpec{ChannelKind::NSE, 3, 1, 2}.validate());
  CHECK_THROWS_AS(ChannelSpec({ChannelKind::NSE, 3, 5, 2}).validate(), ConfigError);
  CHECK_THROWS_AS(ChannelSpec({ChannelKind::NSS, 0, 0, 2}).validate(), ConfigError);
  CHECK_THROWS_AS(ChannelSpec({ChannelKind::NSS, 3, 1, 1}).validate(), ConfigError);
  CHECK_THROWS_WITH_AS(ChannelSpec({ChannelKind::NSE, 3, 5, 2}).validate(), doctest::Contains("budget exceeds window"),
                       ConfigError);

  const ChannelSpec s = ChannelSpec::parse("nss:4,1,3");
  CHECK(s == ChannelSpec{ChannelKind::NSS, 4, 1, 3});
  CHECK(ChannelSpec::parse(s.to_string()) == s);
  CHECK(ChannelSpec::parse("nse:3,1").q == 2);
  CHECK_THROWS_AS(ChannelSpec::parse("xyz:3,1,2"), ConfigError);
  CHECK_THROWS_AS(ChannelSpec::parse("nse:3,a,2"), ConfigError);
  CHECK_THROWS_AS(ChannelSpec::parse("nse:3,4,2"), ConfigError);

  nlohmann::json j = s;
  CHECK(j.get<ChannelSpec>() == s);
}

TEST_CASE("(3,1) NSE states and transitions") {
  const StateGraph g = enumerate_states({ChannelKind::NSE, 3, 1, 2});
  CHECK(words(g) == std::vector<std::string>{"ooo", "oo*", "o*o", "*oo"});
  CHECK(g.out_degree(0) == 2);
  CHECK(g.out_degree(1) == 1);
  CHECK(g.out_degree(2) == 1);
  CHECK(g.out_degree(3) == 2);
  CHECK(*g.successor(0, 0) == 0);
  CHECK(*g.successor(0, 1) == 1);
  CHECK(*g.successor(1, 0) == 2);
  CHECK(!g.successor(1, 1));
  CHECK(*g.successor(2, 0) == 3);
  CHECK(*g.successor(3, 0) == 0);
  CHECK(*g.successor(3, 1) == 1);
  CHECK(transitions_from(g, 0).cls == StateClass::Branching);
  CHECK(transitions_from(g, 1).cls == StateClass::Forced);
  CHECK(g.strongly_connected());
  CHECK(g.adjacency_matrix() == std::vector<std::vector<int>>{{1, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {1, 1, 0, 0}});
}

TEST_CASE("(3,1) NSS q=3 has seven windows") {
  const StateGraph g = enumerate_states({ChannelKind::NSS, 3, 1, 3});
  CHECK(words(g) == std::vector<std::string>{"ooo", "oo1", "oo2", "o1o", "o2o", "1oo", "2oo"});
  CHECK(g.out_degree(0) == 3);
  CHECK(*g.successor(0, 1) == 1);
  CHECK(*g.successor(0, 2) == 2);
}

TEST_CASE("state sets match brute-force enumeration and the ball volume") {
  for (auto kind : {ChannelKind::NSE, ChannelKind::NSS})
    for (int q : {2, 3})
      for (int n = 1; n <= 6; ++n)
        for (int d = 0; d <= n; ++d) {
          const ChannelSpec spec{kind, n, d, q};
          if (kind == ChannelKind::NSE && q != 2) continue;
          const StateGraph g = enumerate_states(spec);
          std::set<oracle::Word> got;
          for (const auto& s : g.states()) got.insert(as_word(s));
          CHECK(got == oracle::states(spec));
          CHECK(g.size() == ball_volume(n, d, spec.error_alphabet()));
          // Every edge is the shift of its source by its label.
          for (const Edge& e : g.edges()) CHECK(g.state(e.from).shifted(e.label) == g.state(e.to));
          CHECK(std::is_sorted(g.states().begin(), g.states().end()));
        }
}

TEST_CASE("admissible patterns agree with direct window checks") {
  for (const ChannelSpec spec : {ChannelSpec{ChannelKind::NSE, 3, 1, 2}, ChannelSpec{ChannelKind::NSS, 3, 1, 3},
                                 ChannelSpec{ChannelKind::NSE, 4, 2, 2}}) {
    const StateGraph g = enumerate_states(spec);
    for (StateIndex s = 0; s < g.size(); ++s) {
      const auto got = admissible_patterns(g, s, 5);
      const auto want = oracle::patterns(spec, as_word(g.state(s)), 5);
      std::set<oracle::Word> a, b(want.begin(), want.end());
      for (const auto& p : got) a.insert(oracle::Word(p.begin(), p.end()));
      CHECK(a == b);
      CHECK(got.size() == want.size());
    }
  }
}

TEST_CASE("runtime enforces the window budget") {
  const ChannelSpec spec{ChannelKind::NSE, 3, 1, 2};
  ChannelRuntime ch(spec, true);
  auto greedy = AdversaryPolicy::greedy();
  std::vector<int> out;
  for (int i = 0; i < 4; ++i) out.push_back(ch.step(0, greedy));
  CHECK(out == std::vector<int>{kErased, 0, 0, kErased});
  CHECK(ch.overrides() == 0);

  ChannelRuntime ch2(spec, true);
  auto always = AdversaryPolicy::scripted({1, 1, 1, 1, 1, 1});
  int erased = 0;
  for (int i = 0; i < 6; ++i) erased += ch2.step(1, always) == kErased;
  CHECK(erased == 2);
  CHECK(ch2.overrides() == 4);
  CHECK(ch2.history().size() == 6);
  CHECK(ch2.history()[1].overridden);
  CHECK_THROWS_AS(ch2.step(2, always), ConfigError);
}

TEST_CASE("NSS runtime adds the error modulo q") {
  const ChannelSpec spec{ChannelKind::NSS, 3, 1, 3};
  ChannelRuntime ch(spec);
  auto adv = AdversaryPolicy::scripted({2, 0, 0, 1});
  CHECK(ch.step(2, adv) == 1);
  CHECK(ch.step(2, adv) == 2);
  CHECK(ch.step(2, adv) == 2);
  CHECK(ch.step(2, adv) == 0);
}

TEST_CASE("random adversary never needs an override and stays admissible") {
  for (const ChannelSpec spec : {ChannelSpec{ChannelKind::NSE, 5, 2, 2}, ChannelSpec{ChannelKind::NSS, 4, 1, 3}}) {
    ChannelRuntime ch(spec, true);
    auto adv = AdversaryPolicy::random_admissible(42);
    for (int i = 0; i < 2000; ++i) ch.step(i % spec.q, adv);
    CHECK(ch.overrides() == 0);
    oracle::Word labels;
    for (const auto& ev : ch.history()) labels.push_back(ev.error);
    CHECK(oracle::admissible(spec, oracle::Word(static_cast<std::size_t>(spec.n), 0), labels));
  }
}

TEST_CASE("block-targeted adversary hits the start of each block") {
  const ChannelSpec spec{ChannelKind::NSE, 3, 1, 2};
  ChannelRuntime ch(spec, true);
  auto adv = AdversaryPolicy::block_targeted(3, 1);
  for (int i = 0; i < 9; ++i) ch.step(0, adv);
  for (int i = 0; i < 9; ++i) CHECK(ch.history()[i].error == (i % 3 == 0 ? 1 : 0));
}

TEST_CASE("finite memory with m = n") {
  CHECK(verify_finite_memory({ChannelKind::NSE, 2, 1, 2}, 4));
  CHECK(verify_finite_memory({ChannelKind::NSS, 2, 1, 2}, 4));
  CHECK(verify_finite_memory({ChannelKind::NSE, 3, 1, 2}, 5));
  CHECK_THROWS_AS(verify_finite_memory({ChannelKind::NSS, 6, 3, 4}, 12), ResourceCapError);
}

TEST_CASE("state cap and exports") {
  CHECK_THROWS_AS(enumerate_states({ChannelKind::NSE, 3, 1, 2}, 3), ResourceCapError);
  const StateGraph g = enumerate_states({ChannelKind::NSE, 3, 1, 2});
  const std::string dot = to_dot(g);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("red") != std::string::npos);
  const auto j = to_json(g);
  CHECK(j["states"].size() == 4);
  CHECK(j["edges"].size() == 6);
}
