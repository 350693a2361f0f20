// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "swchan/capacity.hpp"
#include "swchan/entropy.hpp"
#include "swchan/estimation.hpp"
#include "swchan/oracle.hpp"

using namespace swchan;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << what;
    ok = ok && cond;
  }
};

const ChannelSpec kNse31{ChannelKind::NSE, 3, 1, 2};

// Real root of x^3 - x^2 - c above 1, by bisection.
double cubic_root(double c) {
  double lo = 1.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid - mid * mid - c > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

void states_and_words(Check& c) {
  const StateGraph nse = enumerate_states(kNse31);
  std::vector<std::string> words;
  for (const auto& s : nse.states()) words.push_back(window_word(s, ChannelKind::NSE));
  c.expect(words == std::vector<std::string>{"ooo", "oo*", "o*o", "*oo"}, "(3,1) NSE words");
  const StateGraph nss = enumerate_states({ChannelKind::NSS, 3, 1, 3});
  c.expect(nss.size() == 7, "(3,1) NSS q=3 has 7 windows");
  for (int n = 1; n <= 8; ++n)
    for (int d = 0; d <= n; ++d)
      for (int q : {2, 3}) {
        for (ChannelKind kind : {ChannelKind::NSE, ChannelKind::NSS}) {
          const ChannelSpec spec{kind, n, d, q};
          const std::size_t size = enumerate_states(spec).size();
          const int alphabet = kind == ChannelKind::NSE ? 2 : q;
          c.expect(size == ball_volume(n, d, alphabet), "|S| = V for " + spec.to_string());
          if (n <= 6) c.expect(size == oracle::states(spec).size(), "|S| brute force for " + spec.to_string());
        }
      }
}

void nse_capacity(Check& c) {
  for (int n = 1; n <= 8; ++n)
    for (int d = 0; d < n; ++d) {
      const ChannelSpec spec{ChannelKind::NSE, n, d, 2};
      const CapacityReport r = analyze_capacity(spec);
      c.expect(r.mmc.exact_value && *r.mmc.exact_value == Rational(n - d, n), "mmc = 1 - d/n for " + spec.to_string());
      const double bound = static_cast<double>(enumerate_states(spec).size()) / r.iterations;
      c.expect(r.iterations >= 10 * static_cast<int>(enumerate_states(spec).size()), "k = 10|S|");
      c.expect(std::abs(r.c0f_dp - r.mmc.value) <= bound, "DP gap for " + spec.to_string());
    }
}

void nss_capacity(Check& c) {
  for (int q : {3, 4, 5})
    for (int n = 1; n <= 6; ++n)
      for (int d = 0; d < n; ++d) {
        const ChannelSpec spec{ChannelKind::NSS, n, d, q};
        const MeanCycle m = min_mean_cycle(GainGraph(enumerate_states(spec)));
        const double expected = 1.0 - (static_cast<double>(d) / n) * std::log(q - 1.0) / std::log(q);
        c.expect(std::abs(m.value - expected) < 1e-9, "NSS mmc for " + spec.to_string());
        if (2 * d >= n) c.expect(closed_form_c0f(spec).value == 0.0, "c0f = 0 for " + spec.to_string());
      }
}

void lower_bound(Check& c) {
  const SpectralResult s = perron_frobenius(enumerate_states(kNse31));
  c.expect(std::abs(s.lambda_pf - cubic_root(1.0)) < 1e-10, "lambda vs x^3 - x^2 - 1");
  c.expect(s.residual < 1e-9, "residual");
  const LowerBound b = c0_lower_bound(kNse31, s);
  c.expect(std::abs(b.value - 0.1152) < 5e-4, "lower bound 0.1152");
  const SpectralResult s3 = perron_frobenius(enumerate_states({ChannelKind::NSS, 3, 1, 3}));
  c.expect(std::abs(s3.lambda_pf - cubic_root(2.0)) < 1e-10, "lambda vs x^3 - x^2 - 2");
  c.detail << "lambda=" << s.lambda_pf << " bound=" << b.value;
}

void counts(Check& c) {
  for (const ChannelSpec spec : {kNse31, ChannelSpec{ChannelKind::NSS, 3, 1, 2}, ChannelSpec{ChannelKind::NSS, 3, 1, 3}}) {
    const StateGraph g = enumerate_states(spec);
    for (int N = 0; N <= 12; ++N) {
      const auto all = count_outputs_all(g, N);
      for (StateIndex s = 0; s < g.size(); ++s) {
        const auto& w = g.state(s).window;
        const auto brute = oracle::patterns(spec, oracle::Word(w.begin(), w.end()), N).size();
        c.expect(all[s] == brute, "count N=" + std::to_string(N) + " for " + spec.to_string());
      }
    }
  }
}

void codebooks(Check& c) {
  const Codebook cb = best_codebook(kNse31, 3);
  c.expect(cb.size() == 4 && cb.exact, "4 codewords");
  c.expect(std::abs(cb.rate() - 2.0 / 3) < 1e-12, "rate 2/3");
  c.expect(verify_zero_error(cb), "zero-error verification");
  for (int n = 1; n <= 5; ++n) {
    const Codebook rep = repetition_code({ChannelKind::NSE, n, n - 1, 2});
    c.expect(std::abs(rep.rate() - 1.0 / n) < 1e-12 && verify_zero_error(rep), "repetition n=" + std::to_string(n));
  }
  c.detail << "codewords=";
  for (const auto& w : cb.words()) c.detail << w << ' ';
}

void rates_below_capacity(Check& c) {
  for (const ChannelSpec spec : {kNse31, ChannelSpec{ChannelKind::NSE, 2, 1, 2}, ChannelSpec{ChannelKind::NSE, 4, 1, 2},
                                 ChannelSpec{ChannelKind::NSE, 4, 2, 2}, ChannelSpec{ChannelKind::NSE, 5, 2, 2}}) {
    double best = 0.0;
    for (int t = 1; t <= 6; ++t) best = std::max(best, best_codebook(spec, t).rate());
    c.expect(best <= 1.0 - static_cast<double>(spec.d) / spec.n + 1e-12, "oracle rate above c0f for " + spec.to_string());
  }
  const double lb = c0_lower_bound(kNse31, perron_frobenius(enumerate_states(kNse31))).value;
  c.expect(best_codebook(kNse31, 3).rate() >= lb, "oracle rate below the lower bound");
}

void maximin(Check& c) {
  for (const ChannelSpec spec : {kNse31, ChannelSpec{ChannelKind::NSS, 3, 1, 2}})
    for (const MaximinRow& r : c0_via_maximin(spec, 3))
      c.expect(r.agrees, "maximin t=" + std::to_string(r.t) + " for " + spec.to_string());
}

void estimation(Check& c) {
  Codebook cb = best_codebook(kNse31, 3);
  cb.verified = verify_zero_error(cb);
  const PlantSpec stable_enough = PlantSpec::parse("a=1.2,l=1,vmax=0.01");
  double sup = 0.0;
  for (auto adv : {AdversaryPolicy::greedy(), AdversaryPolicy::random_admissible(1),
                   AdversaryPolicy::random_admissible(2)}) {
    EstimationOptions o;
    o.noise = {NoiseKind::Extremal, 1};
    o.keep_steps = false;
    const EstimationTrace tr = run_estimation(stable_enough, kNse31, cb, adv, 3000, o);
    c.expect(tr.sound, "a=1.2 sound against " + adv.description());
    sup = std::max(sup, tr.sup_error);
  }
  c.expect(sup < 2.0, "a=1.2 bounded");
  const ErrorEnvelope env = adversarial_error_growth(PlantSpec::parse("a=2,vmax=0.01"), kNse31, cb, 150);
  c.expect(env.block_growth.size() == 50, "50 blocks");
  double min_growth = 1e9;
  for (double g : env.block_growth) min_growth = std::min(min_growth, g);
  c.expect(min_growth >= 1.9, "a=2 growth");
  for (double a = 1.01; a < 3.0; a += 0.01) {
    const PlantSpec p{{a}};
    c.expect(necessity_certificate(p, 2, 2.0 / 3, 10, 1.0).diverges == (std::log2(a) > 2.0 / 3),
             "certificate at a=" + std::to_string(a));
  }
  c.detail << "sup(a=1.2)=" << sup << " min growth(a=2)=" << min_growth;
}

void finite_memory(Check& c) {
  c.expect(verify_finite_memory({ChannelKind::NSE, 2, 1, 2}, 4), "(2,1) NSE");
  c.expect(verify_finite_memory({ChannelKind::NSS, 2, 1, 2}, 4), "(2,1) NSS");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
      {"state enumeration and window words", states_and_words},
      {"NSE feedback capacity 1 - d/n and DP convergence", nse_capacity},
      {"NSS capacity upper bound and c0f = 0 for d >= n/2", nss_capacity},
      {"Perron-Frobenius eigenvalue and lower bound", lower_bound},
      {"exact output counts vs brute force", counts},
      {"rate-2/3 codebook and repetition codes", codebooks},
      {"oracle rates between the lower bound and c0f", rates_below_capacity},
      {"maximin information agrees with the maximum codebook", maximin},
      {"coder-estimator stability, growth and certificate", estimation},
      {"finite-memory property", finite_memory},
  };
  int failures = 0;
  int id = 1;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    std::printf("criterion %2d %s: %s", id++, c.ok ? "PASS" : "FAIL", name);
    const std::string detail = c.detail.str();
    if (!detail.empty()) std::printf(" (%s)", detail.c_str());
    std::printf("\n");
    failures += !c.ok;
  }
  return failures == 0 ? 0 : 1;
}
