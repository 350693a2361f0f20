#include "swchan/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace swchan {

namespace {

double log_base(double value, int q) { return std::log(value) / std::log(static_cast<double>(q)); }

}  // namespace

GainGraph::GainGraph(StateGraph graph) : graph_(std::move(graph)) {
  const ChannelSpec& spec = graph_.spec();
  const auto edges = graph_.edges();
  log_gain_.reserve(edges.size());
  if (spec.kind == ChannelKind::NSE) {
    std::vector<std::int64_t> exact;
    exact.reserve(edges.size());
    for (const Edge& e : edges) exact.push_back(e.label != 0 ? 0 : 1);
    for (std::int64_t v : exact) log_gain_.push_back(static_cast<double>(v));
    integer_gain_ = std::move(exact);
  } else {
    const double error_gain = 1.0 - log_base(spec.q - 1.0, spec.q);
    for (const Edge& e : edges) log_gain_.push_back(e.label != 0 ? error_gain : 1.0);
  }

  forward_.offsets.assign(graph_.size() + 1, 0);
  for (StateIndex s = 0; s < graph_.size(); ++s) forward_.offsets[s + 1] = forward_.offsets[s] + graph_.out_degree(s);
  forward_.targets.reserve(edges.size());
  for (const Edge& e : edges) forward_.targets.push_back(e.to);
  forward_.weights = log_gain_;
}

double GainGraph::max_gain() const {
  return log_gain_.empty() ? 0.0 : *std::max_element(log_gain_.begin(), log_gain_.end());
}

std::vector<double> reduced_dp_step(const GainGraph& g, std::span<const double> w_prev, kernels::Exec exec,
                                    std::vector<StateIndex>* argmin) {
  if (w_prev.size() != g.size()) throw ConfigError("reduced_dp_step: one value per state required");
  std::vector<double> out(g.size());
  if (argmin) {
    argmin->assign(g.size(), 0);
    kernels::min_plus_step<double>(exec, g.forward(), w_prev, out, *argmin);
  } else {
    kernels::min_plus_step<double>(exec, g.forward(), w_prev, out);
  }
  return out;
}

DPTrajectory dp_capacity(const GainGraph& g, int k_max, kernels::Exec exec) {
  if (k_max < static_cast<int>(g.size()))
    throw ConfigError("dp_capacity: k_max must be at least the number of states");
  DPTrajectory traj;
  traj.k_max = k_max;
  traj.w.reserve(static_cast<std::size_t>(k_max) + 1);
  traj.w.emplace_back(g.size(), 0.0);
  traj.argmin_state.push_back(0);
  traj.rate_estimates.push_back(0.0);
  for (int k = 1; k <= k_max; ++k) {
    traj.w.push_back(reduced_dp_step(g, traj.w.back(), exec));
    const auto& row = traj.w.back();
    const auto it = std::min_element(row.begin(), row.end());
    traj.argmin_state.push_back(static_cast<StateIndex>(it - row.begin()));
    traj.rate_estimates.push_back(*it / k);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Minimum mean cycle

namespace {

template <typename W>
struct Ratio {
  W num{};
  std::int64_t den = 0;  // 0 marks "unset"
};

template <typename W>
bool ratio_less(const Ratio<W>& a, const Ratio<W>& b) {
  if constexpr (std::is_integral_v<W>)
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  else
    return a.num * static_cast<double>(b.den) < b.num * static_cast<double>(a.den);
}

template <typename W>
kernels::Csr<W> reverse_csr(const StateGraph& graph, const std::vector<W>& gains) {
  kernels::Csr<W> rev;
  const auto edges = graph.edges();
  rev.offsets.assign(graph.size() + 1, 0);
  for (const Edge& e : edges) ++rev.offsets[e.to + 1];
  for (std::size_t i = 0; i < graph.size(); ++i) rev.offsets[i + 1] += rev.offsets[i];
  rev.targets.resize(edges.size());
  rev.weights.resize(edges.size());
  std::vector<std::size_t> fill(rev.offsets.begin(), rev.offsets.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::size_t slot = fill[edges[i].to]++;
    rev.targets[slot] = edges[i].from;
    rev.weights[slot] = gains[i];
  }
  return rev;
}

// Karp: lambda* = min_v max_{0<=k<N} (D_N(v) - D_k(v)) / (N - k), where D_k(v)
// is the lightest k-edge walk ending at v. Two passes keep memory at O(N).
template <typename W>
Ratio<W> karp(const StateGraph& graph, const std::vector<W>& gains, kernels::Exec exec) {
  constexpr W inf = std::numeric_limits<W>::max();
  const auto rev = reverse_csr(graph, gains);
  const std::size_t n = graph.size();

  std::vector<W> cur(n, W{0});
  std::vector<W> next(n);
  for (std::size_t k = 1; k <= n; ++k) {
    kernels::min_plus_step<W>(exec, rev, cur, next);
    cur.swap(next);
  }
  const std::vector<W> dn = cur;

  std::vector<Ratio<W>> worst(n);
  std::fill(cur.begin(), cur.end(), W{0});
  for (std::size_t k = 0; k < n; ++k) {
    const auto count = static_cast<std::int64_t>(n);
    const auto span_len = static_cast<std::int64_t>(n - k);
#pragma omp parallel for schedule(static) if (exec == kernels::Exec::Parallel)
    for (std::int64_t v = 0; v < count; ++v) {
      if (dn[v] == inf || cur[v] == inf) continue;
      Ratio<W> cand{dn[v] - cur[v], span_len};
      if (worst[v].den == 0 || ratio_less(worst[v], cand)) worst[v] = cand;
    }
    kernels::min_plus_step<W>(exec, rev, cur, next);
    cur.swap(next);
  }

  Ratio<W> best;
  for (const auto& r : worst)
    if (r.den != 0 && (best.den == 0 || ratio_less(r, best))) best = r;
  return best;
}

// A cycle in the subgraph of edges that are tight under shortest-path
// potentials for the reweighted gains; every such cycle has mean lambda*.
std::vector<StateIndex> tight_cycle(const StateGraph& graph, const std::function<double(std::size_t)>& reduced,
                                    double eps) {
  const std::size_t n = graph.size();
  const auto edges = graph.edges();
  std::vector<double> pot(n, 0.0);
  for (std::size_t round = 0; round <= n; ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const double cand = pot[edges[i].from] + reduced(i);
      if (cand < pot[edges[i].to] - eps) {
        pot[edges[i].to] = cand;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<std::vector<StateIndex>> tight(n);
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (pot[edges[i].from] + reduced(i) - pot[edges[i].to] <= eps) tight[edges[i].from].push_back(edges[i].to);

  // Iterative DFS; the first back edge closes a cycle.
  std::vector<int> color(n, 0);
  std::vector<StateIndex> stack;
  std::vector<std::size_t> cursor(n, 0);
  for (StateIndex root = 0; root < n; ++root) {
    if (color[root] != 0) continue;
    stack.push_back(root);
    color[root] = 1;
    while (!stack.empty()) {
      const StateIndex u = stack.back();
      if (cursor[u] == tight[u].size()) {
        color[u] = 2;
        stack.pop_back();
        continue;
      }
      const StateIndex v = tight[u][cursor[u]++];
      if (color[v] == 1) {
        auto it = std::find(stack.begin(), stack.end(), v);
        std::vector<StateIndex> cycle(it, stack.end());
        std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
        return cycle;
      }
      if (color[v] == 0) {
        color[v] = 1;
        stack.push_back(v);
      }
    }
  }
  throw AnalysisError("min_mean_cycle: no tight cycle found");
}

}  // namespace

MeanCycle min_mean_cycle(const GainGraph& g, kernels::Exec exec) {
  const StateGraph& graph = g.graph();
  if (!graph.strongly_connected())
    throw AnalysisError("min_mean_cycle: state graph of " + g.spec().to_string() + " is not strongly connected");

  MeanCycle result;
  std::function<double(std::size_t)> reduced;
  double eps = 0.0;
  if (g.exact()) {
    const auto r = karp<std::int64_t>(graph, g.integer_gain(), exec);
    const Rational lambda(r.num, r.den);
    result.exact_value = lambda;
    result.value = lambda.to_double();
    reduced = [&g, lambda](std::size_t i) {
      return static_cast<double>(g.integer_gain()[i] * lambda.den() - lambda.num());
    };
  } else {
    const auto r = karp<double>(graph, g.log_gain(), exec);
    result.value = r.num / static_cast<double>(r.den);
    const double lambda = result.value;
    reduced = [&g, lambda](std::size_t i) { return g.log_gain()[i] - lambda; };
    eps = 1e-9;
  }

  result.cycle = tight_cycle(graph, reduced, eps);
  for (std::size_t i = 0; i < result.cycle.size(); ++i) {
    const StateIndex from = result.cycle[i];
    const StateIndex to = result.cycle[(i + 1) % result.cycle.size()];
    const auto out = graph.out_edges(from);
    const std::size_t base = static_cast<std::size_t>(out.data() - graph.edges().data());
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (out[j].to == to) {
        result.cycle_gains.push_back(g.log_gain()[base + j]);
        break;
      }
    }
  }
  return result;
}

std::string to_string(BoundFlag flag) { return flag == BoundFlag::Exact ? "exact" : "upper_bound"; }

ClosedForm closed_form_c0f(const ChannelSpec& spec) {
  spec.validate();
  ClosedForm cf;
  if (spec.kind == ChannelKind::NSE) {
    cf.exact_value = Rational(spec.n - spec.d, spec.n);
    cf.value = cf.exact_value->to_double();
    cf.flag = BoundFlag::Exact;
  } else if (2 * spec.d >= spec.n) {
    cf.exact_value = Rational(0);
    cf.value = 0.0;
    cf.flag = BoundFlag::Exact;
  } else {
    cf.value = 1.0 - static_cast<double>(spec.d) / spec.n * log_base(spec.q - 1.0, spec.q);
    if (spec.q == 2) cf.exact_value = Rational(1);
    cf.flag = BoundFlag::UpperBound;
  }
  return cf;
}

bool verify_sm_recurrence(const GainGraph& g, const DPTrajectory& traj) {
  const ChannelSpec& spec = g.spec();
  if (spec.kind != ChannelKind::NSE) throw ConfigError("verify_sm_recurrence applies to NSE channels only");
  const int n = spec.n;
  const int d = spec.d;
  if (traj.k_max < 2 * n + d) throw ConfigError("verify_sm_recurrence: trajectory needs k_max >= 2n + d");

  std::vector<StateIndex> full_budget;
  if (d >= 1)
    for (StateIndex s = 0; s < g.size(); ++s)
      if (g.graph().state(s).error_count() == d) full_budget.push_back(s);

  for (int k = 2 * n; k <= traj.k_max; ++k)
    for (StateIndex s : full_budget)
      if (traj.w[k][s] != (n - d) + traj.w[k - n][s]) return false;

  constexpr StateIndex clear = StateGraph::clear_state();
  for (int k = 0; k <= traj.k_max; ++k) {
    const auto& row = traj.w[k];
    if (row[clear] != *std::min_element(row.begin(), row.end())) return false;
  }
  for (int k = 0; k <= d; ++k)
    if (traj.w[k][clear] != 0.0) return false;
  return true;
}

std::vector<double> simplex_dp_step(const StateGraph& graph, std::span<const double> w_prev_linear,
                                    int resolution) {
  const ChannelSpec& spec = graph.spec();
  const int q = spec.q;
  if (resolution < 1) throw ConfigError("simplex_dp_step: resolution must be positive");
  if (w_prev_linear.size() != graph.size()) throw ConfigError("simplex_dp_step: one value per state required");

  std::vector<double> best(graph.size(), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(q), 0);
  auto evaluate = [&] {
    double max_p = 0.0;
    double min_p = 1.0;
    for (int c : counts) {
      const double p = static_cast<double>(c) / resolution;
      max_p = std::max(max_p, p);
      min_p = std::min(min_p, p);
    }
    for (StateIndex s = 0; s < graph.size(); ++s) {
      double worst = std::numeric_limits<double>::infinity();
      for (const Edge& e : graph.out_edges(s)) {
        double mass;  // max_y sum_{x in G(y,s'|s)} P(x)
        if (e.label == 0)
          mass = max_p;
        else if (spec.kind == ChannelKind::NSE)
          mass = 1.0;
        else
          mass = 1.0 - min_p;
        worst = std::min(worst, w_prev_linear[e.to] / mass);
      }
      best[s] = std::max(best[s], worst);
    }
  };
  auto compose = [&](auto&& self, int pos, int left) -> void {
    if (pos == q - 1) {
      counts[pos] = left;
      evaluate();
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[pos] = c;
      self(self, pos + 1, left - c);
    }
  };
  compose(compose, 0, resolution);
  return best;
}

CapacityReport analyze_capacity(const ChannelSpec& spec, int k_max, kernels::Exec exec) {
  GainGraph g(enumerate_states(spec));
  CapacityReport report;
  report.spec = spec;
  report.iterations = k_max > 0 ? k_max : static_cast<int>(10 * g.size());
  report.iterations = std::max(report.iterations, static_cast<int>(g.size()));
  const DPTrajectory traj = dp_capacity(g, report.iterations, exec);
  report.c0f_dp = traj.final_estimate();
  report.mmc = min_mean_cycle(g, exec);
  report.closed = closed_form_c0f(spec);
  report.convergence_gap = std::abs(report.c0f_dp - report.mmc.value);
  if (spec.kind == ChannelKind::NSE) {
    report.c0f = report.mmc.value;
    report.flag = BoundFlag::Exact;
  } else if (2 * spec.d >= spec.n) {
    report.c0f = 0.0;
    report.flag = BoundFlag::Exact;
  } else {
    report.c0f = report.mmc.value;
    report.flag = BoundFlag::UpperBound;
  }
  return report;
}

nlohmann::json to_json(const CapacityReport& r) {
  nlohmann::json j;
  j["channel"] = r.spec;
  j["iterations"] = r.iterations;
  j["c0f_dp"] = r.c0f_dp;
  if (r.mmc.exact_value)
    j["c0f_mmc"] = {{"num", r.mmc.exact_value->num()}, {"den", r.mmc.exact_value->den()}};
  else
    j["c0f_mmc"] = r.mmc.value;
  if (r.closed.exact_value)
    j["c0f_closed"] = {{"num", r.closed.exact_value->num()}, {"den", r.closed.exact_value->den()}};
  else
    j["c0f_closed"] = r.closed.value;
  j["c0f"] = r.c0f;
  j["flag"] = to_string(r.flag);
  j["closed_flag"] = to_string(r.closed.flag);
  j["witness_cycle"] = r.mmc.cycle;
  j["witness_gains"] = r.mmc.cycle_gains;
  j["convergence_gap"] = r.convergence_gap;
  j["float_tolerance"] = 1e-9;
  return j;
}

}  // namespace swchan
