#pragma once

// Zero-error feedback capacity of sliding-window channels: the reduced
// min-plus recursion in the log_q domain, its exact minimum-mean-cycle limit
// and the closed forms.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "swchan/channel.hpp"
#include "swchan/kernels.hpp"
#include "swchan/rational.hpp"

namespace swchan {

/// State graph with the per-edge log_q gain of the reduced recursion.
/// NSE: erasure edge 0, clear edge 1 (held exactly as integers).
/// NSS: error edge 1 - log_q(q-1), clear edge 1.
class GainGraph {
 public:
  explicit GainGraph(StateGraph graph);

  const StateGraph& graph() const { return graph_; }
  const ChannelSpec& spec() const { return graph_.spec(); }
  std::size_t size() const { return graph_.size(); }

  /// Gains indexed like graph().edges().
  const std::vector<double>& log_gain() const { return log_gain_; }
  bool exact() const { return integer_gain_.has_value(); }
  const std::vector<std::int64_t>& integer_gain() const { return *integer_gain_; }
  double max_gain() const;

  /// Successor lists (row = source) with gains, for the forward recursion.
  const kernels::Csr<double>& forward() const { return forward_; }

 private:
  StateGraph graph_;
  std::vector<double> log_gain_;
  std::optional<std::vector<std::int64_t>> integer_gain_;
  kernels::Csr<double> forward_;
};

/// w(s) = min over successors s' of [g(s,s') + w_prev(s')]; ties go to the
/// lowest successor index. `argmin` (optional) receives the chosen successor.
std::vector<double> reduced_dp_step(const GainGraph& g, std::span<const double> w_prev,
                                    kernels::Exec exec = kernels::Exec::Parallel,
                                    std::vector<StateIndex>* argmin = nullptr);

struct DPTrajectory {
  int k_max = 0;
  /// w[k][s] = log_q W(k, s); w[0] is all zeros.
  std::vector<std::vector<double>> w;
  /// argmin_state[k] = lowest-index state attaining min_s w[k][s].
  std::vector<StateIndex> argmin_state;
  /// rate_estimates[k] = min_s w[k][s] / k (entry 0 is unused and set to 0).
  std::vector<double> rate_estimates;

  double final_estimate() const { return rate_estimates.back(); }
};

/// Runs the recursion k_max times from W(0, .) = 1. Requires k_max >= |S|.
DPTrajectory dp_capacity(const GainGraph& g, int k_max, kernels::Exec exec = kernels::Exec::Parallel);

struct MeanCycle {
  double value = 0.0;
  /// Set when every gain is an integer (NSE).
  std::optional<Rational> exact_value;
  /// Simple cycle attaining the minimum, rotated to start at its lowest index.
  std::vector<StateIndex> cycle;
  /// Gain on each edge of `cycle` (cycle[i] -> cycle[i+1 mod L]).
  std::vector<double> cycle_gains;
};

/// Minimum over directed cycles of mean log-gain (Karp's recursion, exact in
/// rationals for NSE). Throws AnalysisError when the graph is not strongly
/// connected.
MeanCycle min_mean_cycle(const GainGraph& g, kernels::Exec exec = kernels::Exec::Parallel);

enum class BoundFlag { Exact, UpperBound };
std::string to_string(BoundFlag flag);

struct ClosedForm {
  double value = 0.0;
  std::optional<Rational> exact_value;
  BoundFlag flag = BoundFlag::Exact;
};

/// NSE: 1 - d/n (exact). NSS: 1 - (d/n) log_q(q-1) as an upper bound when
/// d < n/2, and exactly 0 otherwise.
ClosedForm closed_form_c0f(const ChannelSpec& spec);

/// Checks on an NSE trajectory: w(k,s) = (n-d) + w(k-n,s) on the states at full
/// budget for every k >= 2n; the all-clear state attains min_s w(k,s) for every
/// k; and w(k, all-clear) = 0 for k <= d. Needs k_max >= 2n + d.
bool verify_sm_recurrence(const GainGraph& g, const DPTrajectory& traj);

/// One step of the unreduced recursion, in the linear domain:
///   W(s) = max_P min_{s'} W_prev(s') / max_y sum_{x in G(y,s'|s)} P(x),
/// maximizing over input distributions P on a simplex grid with the given
/// resolution. G is {y} on clean edges, the whole alphabet on NSE erasures and
/// the alphabet minus y on NSS errors. Only meant for spot checks on tiny q.
std::vector<double> simplex_dp_step(const StateGraph& graph, std::span<const double> w_prev_linear,
                                    int resolution);

struct CapacityReport {
  ChannelSpec spec;
  int iterations = 0;
  double c0f_dp = 0.0;
  MeanCycle mmc;
  ClosedForm closed;
  /// Reported capacity: the exact mean-cycle value for NSE; for NSS the
  /// mean-cycle value as an upper bound, or exactly 0 once d >= n/2.
  double c0f = 0.0;
  BoundFlag flag = BoundFlag::Exact;
  double convergence_gap = 0.0;
};

/// Full capacity analysis; k_max defaults to 10 |S| when 0.
CapacityReport analyze_capacity(const ChannelSpec& spec, int k_max = 0,
                                kernels::Exec exec = kernels::Exec::Parallel);

/// {c0f_dp, c0f_mmc:{num,den} | float, c0f_closed, flag, witness_cycle,
///  convergence_gap, ...}
nlohmann::json to_json(const CapacityReport& report);

}  // namespace swchan
