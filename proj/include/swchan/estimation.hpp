#pragma once

// State estimation of diagonal LTI plants over sliding-window channels:
// an interval coder-estimator driven by a zero-error codebook, feasibility
// classification from the entropy and capacity bounds, and the counting
// certificate for necessity.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "swchan/capacity.hpp"
#include "swchan/channel.hpp"
#include "swchan/entropy.hpp"
#include "swchan/oracle.hpp"

namespace swchan {

/// x(t+1) = A x(t) + v(t), y(t) = x(t) + w(t), with A diagonal, |v_i| <= v_max,
/// |w_i| <= w_max and x(0) in the box of radius l around the origin.
struct PlantSpec {
  std::vector<double> eigenvalues;
  double l = 1.0;
  double v_max = 0.0;
  double w_max = 0.0;

  /// Rejects empty plants, non-finite values, negative bounds and modes on
  /// the unit circle.
  void validate() const;
  bool unstable() const;
  /// Sum over |lambda_i| >= 1 of log_q |lambda_i|.
  double h_lin(int q) const;
  /// "a=1.2,l=1,vmax=0.01,wmax=0"; a diagonal plant lists modes as a=2:0.5.
  static PlantSpec parse(const std::string& text);
  /// Accepts a square matrix only if it is diagonal.
  static PlantSpec from_matrix(const std::vector<std::vector<double>>& a, double l, double v_max, double w_max);
  std::string to_string() const;
};

void to_json(nlohmann::json& j, const PlantSpec& p);
void from_json(const nlohmann::json& j, PlantSpec& p);

enum class Verdict { AchievableBySufficientCondition, InfeasibleByNecessaryCondition, Indeterminate };
std::string to_string(Verdict v);

struct FeasibilityVerdict {
  Verdict verdict = Verdict::Indeterminate;
  double h_lin = 0.0;
  double h_ch = 0.0;
  /// Achievable when h_lin < sufficient_threshold (NSE: 1 - d/n - h_ch,
  /// NSS: 1 - 2 h_ch).
  double sufficient_threshold = 0.0;
  /// Infeasible when h_lin > necessary_threshold (the zero-error feedback
  /// capacity, or its upper bound for NSS).
  double necessary_threshold = 0.0;
  bool tight = false;  // true only when both thresholds coincide
};

/// Strict comparisons; values within `tie_tolerance` of a threshold count as
/// equal and give Indeterminate.
FeasibilityVerdict classify_feasibility(const PlantSpec& plant, const ChannelSpec& spec,
                                        const SpectralResult& spectral, double tie_tolerance = 1e-12);

nlohmann::json to_json(const FeasibilityVerdict& v);

enum class NoiseKind { Extremal, Uniform, Zero };
std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& text);

struct NoiseModel {
  NoiseKind kind = NoiseKind::Extremal;
  std::uint64_t seed = 1;
};

enum class InitialPlacement { Edge, Center, Uniform };

struct EstimationOptions {
  NoiseModel noise;
  InitialPlacement initial = InitialPlacement::Edge;
  std::uint64_t initial_seed = 7;
  bool keep_steps = true;
};

/// Absolute values are long double: the uncontrolled plant state grows like
/// |a|^t and leaves double range within a few thousand steps. The error e is
/// computed in error coordinates and stays exact at any horizon.
struct EstimationStep {
  std::uint64_t t = 0;
  std::vector<long double> x;
  std::vector<long double> xhat;
  std::vector<long double> lo;
  std::vector<long double> hi;
  std::vector<double> e;  // x_i - xhat_i
  double err = 0.0;       // max_i |e_i|
  ChannelEvent event;
  bool contained = true;
};

struct EstimationTrace {
  std::size_t block_length = 0;
  std::size_t cells = 0;
  /// Cells assigned to each mode; their product is at most the codebook size.
  std::vector<std::size_t> cells_per_mode;
  /// max_i |lambda_i|^tau / cells_i.
  double contraction = 0.0;
  std::vector<EstimationStep> steps;
  /// Error at every step, kept even when steps are dropped.
  std::vector<double> errors;
  double sup_error = 0.0;
  bool sound = true;
  std::uint64_t overrides = 0;
};

/// Runs the interval coder-estimator for `horizon` steps. The encoder sees
/// y(k tau) at the start of block k, splits the current box into cells and
/// sends the cell index as a codeword over the next tau channel uses; after
/// the block both sides shrink the box to the decoded cell and propagate it
/// through the dynamics. Throws ConfigError for an unverifiable codebook or a
/// mismatched spec, AnalysisError if decoding ever fails.
EstimationTrace run_estimation(const PlantSpec& plant, const ChannelSpec& spec, const Codebook& codebook,
                               AdversaryPolicy& adversary, std::uint64_t horizon,
                               const EstimationOptions& options = {});

/// Per-block radius factor max_i |lambda_i|^tau / cells_i for this codebook.
double block_contraction(const PlantSpec& plant, const Codebook& codebook);

struct NecessityCertificate {
  /// l |a|^t q^(-R t): worst-case |e(t)| for any scheme sending q^(R t)
  /// messages by time t.
  double bound = 0.0;
  double log_bound = 0.0;  // natural log of bound
  double exponent = 0.0;   // log_q |a| - R
  bool diverges = false;
};

NecessityCertificate necessity_certificate(const PlantSpec& plant, int q, double rate, std::uint64_t t, double l);

struct ErrorEnvelope {
  std::vector<double> envelope;  // max error over the suite at each step
  std::vector<std::string> adversaries;
  /// envelope at block ends and the ratio between consecutive block ends.
  std::vector<double> block_envelope;
  std::vector<double> block_growth;
  bool sound = true;
};

/// Runs the estimator against greedy, random(seed 1..3) and block-targeted
/// adversaries (independent runs, fanned out in parallel) and reduces to the
/// per-step maximum. horizon 0 gives the initial error alone.
ErrorEnvelope adversarial_error_growth(const PlantSpec& plant, const ChannelSpec& spec, const Codebook& codebook,
                                       std::uint64_t horizon, const EstimationOptions& options = {});

std::string trace_csv(const EstimationTrace& trace);
nlohmann::json to_json(const EstimationTrace& trace);
nlohmann::json to_json(const NecessityCertificate& c);

}  // namespace swchan
