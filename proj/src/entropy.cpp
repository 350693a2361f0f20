#include "swchan/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace swchan {

namespace {

kernels::Csr<char> pattern_csr(const StateGraph& graph) {
  kernels::Csr<char> a;
  a.offsets.assign(graph.size() + 1, 0);
  for (StateIndex s = 0; s < graph.size(); ++s) a.offsets[s + 1] = a.offsets[s] + graph.out_degree(s);
  for (const Edge& e : graph.edges()) a.targets.push_back(e.to);
  return a;
}

double log_q(double x, int q) { return std::log(x) / std::log(static_cast<double>(q)); }

}  // namespace

SpectralResult perron_frobenius(const StateGraph& graph, double tol, int max_iter, kernels::Exec exec) {
  if (!graph.strongly_connected())
    throw AnalysisError("perron_frobenius: transition matrix of " + graph.spec().to_string() + " is reducible");

  SpectralResult r;
  const std::size_t n = graph.size();
  r.d_min = static_cast<double>(n ? graph.out_degree(0) : 0);
  for (StateIndex s = 0; s < n; ++s) {
    const double deg = static_cast<double>(graph.out_degree(s));
    r.d_min = std::min(r.d_min, deg);
    r.d_max = std::max(r.d_max, deg);
    r.d_ave += deg;
  }
  r.d_ave /= static_cast<double>(n);

  const auto a = pattern_csr(graph);
  std::vector<double> v(n, 1.0);
  std::vector<double> av(n);
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    kernels::adjacency_matvec(exec, a, v, av);
    double lo = av[0] / v[0];
    double hi = lo;
    for (std::size_t i = 1; i < n; ++i) {
      const double ratio = av[i] / v[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    r.lower = lo;
    r.upper = hi;
    r.iterations = it + 1;
    if (hi - lo < tol) {
      converged = true;
      break;
    }
    double top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = 0.5 * (v[i] + av[i] / hi);
      top = std::max(top, v[i]);
    }
    for (double& x : v) x /= top;
  }
  if (!converged) throw AnalysisError("perron_frobenius: no convergence within the iteration cap");

  r.lambda_pf = 0.5 * (r.lower + r.upper);
  const double top = *std::max_element(v.begin(), v.end());
  for (double& x : v) x /= top;
  kernels::adjacency_matvec(exec, a, v, av);
  for (std::size_t i = 0; i < n; ++i) r.residual = std::max(r.residual, std::abs(av[i] - r.lambda_pf * v[i]));
  if (*std::min_element(v.begin(), v.end()) <= 0.0)
    throw AnalysisError("perron_frobenius: eigenvector is not strictly positive");
  r.eigenvector = std::move(v);
  r.h_ch = log_q(r.lambda_pf, graph.spec().q);
  r.d_ave_below_lambda = r.d_ave <= r.lambda_pf;
  return r;
}

std::vector<BigCount> count_outputs_all(const StateGraph& graph, int N) {
  if (N < 0) throw ConfigError("count_outputs: horizon must be non-negative");
  std::vector<BigCount> cur(graph.size(), 1);
  std::vector<BigCount> next(graph.size());
  for (int k = 0; k < N; ++k) {
    for (StateIndex s = 0; s < graph.size(); ++s) {
      BigCount acc = 0;
      for (const Edge& e : graph.out_edges(s)) acc += cur[e.to];
      next[s] = std::move(acc);
    }
    cur.swap(next);
  }
  return cur;
}

BigCount count_outputs(const StateGraph& graph, StateIndex s0, int N) {
  if (s0 >= graph.size()) throw ConfigError("count_outputs: state index out of range");
  return count_outputs_all(graph, N)[s0];
}

OutputCountResult output_growth(const StateGraph& graph, const SpectralResult& spectral, int N) {
  if (N < 0) throw ConfigError("output_growth: horizon must be non-negative");
  OutputCountResult out;
  out.N = N;
  out.beta_bound = 0.0;
  out.beta_floor = std::numeric_limits<double>::infinity();
  std::vector<BigCount> cur(graph.size(), 1);
  std::vector<BigCount> next(graph.size());
  for (int k = 0;; ++k) {
    const double scale = std::pow(spectral.lambda_pf, k);
    for (const BigCount& c : cur) {
      const double ratio = c.convert_to<double>() / scale;
      out.beta_bound = std::max(out.beta_bound, ratio);
      out.beta_floor = std::min(out.beta_floor, ratio);
    }
    if (k == N) break;
    for (StateIndex s = 0; s < graph.size(); ++s) {
      BigCount acc = 0;
      for (const Edge& e : graph.out_edges(s)) acc += cur[e.to];
      next[s] = std::move(acc);
    }
    cur.swap(next);
  }
  out.counts_by_state = std::move(cur);
  return out;
}

LowerBound c0_lower_bound(const ChannelSpec& spec, const SpectralResult& spectral) {
  const double ratio = static_cast<double>(spec.d) / spec.n;
  LowerBound b;
  if (spec.kind == ChannelKind::NSE) {
    b.value = 1.0 - ratio - spectral.h_ch;
  } else {
    b.value = 1.0 - 2.0 * spectral.h_ch;
    b.appendix_variant = 1.0 - ratio - 2.0 * spectral.h_ch;
  }
  return b;
}

double degree_bound_estimate(const StateGraph& graph) {
  const ChannelSpec& spec = graph.spec();
  if (spec.kind != ChannelKind::NSE) throw ConfigError("degree_bound_estimate applies to NSE channels only");
  std::size_t d_max = 0;
  for (StateIndex s = 0; s < graph.size(); ++s) d_max = std::max(d_max, graph.out_degree(s));
  if (spec.d >= 1 && d_max != 2) throw AnalysisError("NSE state graph with d >= 1 must have maximum out-degree 2");
  return 1.0 - static_cast<double>(spec.d) / spec.n - log_q(static_cast<double>(d_max), spec.q);
}

nlohmann::json to_json(const SpectralResult& s, const LowerBound& b) {
  nlohmann::json j;
  j["lambda_pf"] = s.lambda_pf;
  j["h_ch"] = s.h_ch;
  j["residual"] = s.residual;
  j["bracket"] = {s.lower, s.upper};
  j["d_min"] = s.d_min;
  j["d_ave"] = s.d_ave;
  j["d_max"] = s.d_max;
  j["d_ave_below_lambda"] = s.d_ave_below_lambda;
  j["iterations"] = s.iterations;
  j["lower_bound"] = b.value;
  j["lower_bound_display"] = std::max(0.0, b.value);
  if (b.appendix_variant)
    j["lower_bound_appendix_variant"] = *b.appendix_variant;
  else
    j["lower_bound_appendix_variant"] = nullptr;
  return j;
}

}  // namespace swchan
