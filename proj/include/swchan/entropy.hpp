#pragma once

// Perron-Frobenius eigenvalue and topological entropy of the channel state
// graph, exact output-sequence counts and the entropy-based lower bounds on
// the zero-error capacity.

#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "swchan/channel.hpp"
#include "swchan/kernels.hpp"

namespace swchan {

using BigCount = boost::multiprecision::cpp_int;

struct SpectralResult {
  double lambda_pf = 0.0;
  /// log_q(lambda_pf), q taken from the channel spec.
  double h_ch = 0.0;
  /// ||A v - lambda v||_inf with max_i v_i = 1.
  double residual = 0.0;
  /// Collatz-Wielandt bracket min_i (Av)_i/v_i <= lambda <= max_i (Av)_i/v_i
  /// at termination.
  double lower = 0.0;
  double upper = 0.0;
  /// Out-degree statistics. d_min <= lambda_pf <= d_max always holds for a
  /// nonnegative matrix; d_ave <= lambda_pf holds for undirected graphs but
  /// can fail on these directed graphs, so it is reported, not enforced.
  double d_min = 0.0;
  double d_ave = 0.0;
  double d_max = 0.0;
  bool d_ave_below_lambda = false;
  std::vector<double> eigenvector;
  int iterations = 0;
};

/// Power iteration on (I + A)/2, i.e. the average of two successive iterates
/// of A, which converges for periodic irreducible matrices too. Stops when the
/// Collatz-Wielandt bracket is narrower than `tol`. Throws AnalysisError for a
/// reducible graph or when `max_iter` is exhausted.
SpectralResult perron_frobenius(const StateGraph& graph, double tol = 1e-12, int max_iter = 2'000'000,
                                kernels::Exec exec = kernels::Exec::Parallel);

/// z_0 A^N 1 for every initial state: the number of N-step state trajectories,
/// equivalently of admissible error patterns of length N.
std::vector<BigCount> count_outputs_all(const StateGraph& graph, int N);
BigCount count_outputs(const StateGraph& graph, StateIndex s0, int N);

struct OutputCountResult {
  int N = 0;
  std::vector<BigCount> counts_by_state;
  /// max / min over k <= N and states of count_k(s) / lambda^k.
  double beta_bound = 0.0;
  double beta_floor = 0.0;
};

OutputCountResult output_growth(const StateGraph& graph, const SpectralResult& spectral, int N);

struct LowerBound {
  /// NSE: 1 - d/n - h_ch. NSS: 1 - 2 h_ch.
  double value = 0.0;
  /// NSS only: 1 - d/n - 2 h_ch, the form reached at the end of the proof.
  std::optional<double> appendix_variant;
};

/// Raw values; may be negative.
LowerBound c0_lower_bound(const ChannelSpec& spec, const SpectralResult& spectral);

/// 1 - d/n - log_q(d_max) for an NSE graph (d_max = 2 whenever d >= 1).
double degree_bound_estimate(const StateGraph& graph);

/// {lambda_pf, h_ch, residual, d_ave, d_max, lower_bound, lower_bound_appendix_variant, ...}
nlohmann::json to_json(const SpectralResult& spectral, const LowerBound& bound);

}  // namespace swchan
