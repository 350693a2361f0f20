#pragma once

// Sliding-window erasure (NSE) and symmetric (NSS) channels as finite-state
// machines: state enumeration, labeled transition graph and a runtime channel
// driven by an adversary.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swchan/errors.hpp"

namespace swchan {

enum class ChannelKind { NSE, NSS };

std::string to_string(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& text);

/// The (n, d, q) triple: at most d errors in every window of n channel uses
/// over a q-ary input alphabet.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::NSE;
  int n = 1;
  int d = 0;
  int q = 2;

  /// Throws ConfigError unless n >= 1, 0 <= d <= n and q >= 2.
  void validate() const;

  /// Number of distinct per-use error labels (label 0 is always "no error").
  int error_alphabet() const { return kind == ChannelKind::NSE ? 2 : q; }

  std::string to_string() const;
  /// Inverse of to_string: "nse:3,1,2"; q defaults to 2 when omitted.
  static ChannelSpec parse(const std::string& text);

  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;
};

void to_json(nlohmann::json& j, const ChannelSpec& spec);
void from_json(const nlohmann::json& j, ChannelSpec& spec);

/// Output symbol used for an NSE erasure; serialized as "*".
inline constexpr int kErased = -1;

using ErrorLabel = std::uint8_t;
using StateIndex = std::uint32_t;

/// The last n error events. Index 0 is the oldest use, index n-1 the newest.
/// NSE entries are 0 (clear) or 1 (erased); NSS entries are the additive
/// error value in Z_q.
struct ChannelState {
  std::vector<ErrorLabel> window;

  int error_count() const;
  /// Window after one more use with error `label`.
  ChannelState shifted(ErrorLabel label) const;

  friend bool operator==(const ChannelState&, const ChannelState&) = default;
  friend auto operator<=>(const ChannelState&, const ChannelState&) = default;
};

/// Window word: 'o' for a clean slot, '*' for an NSE erasure, the digit v for
/// an NSS error of value v (e.g. "oo*", "o2o").
std::string window_word(const ChannelState& state, ChannelKind kind);

ChannelState all_clear(const ChannelSpec& spec);

struct Edge {
  StateIndex from;
  StateIndex to;
  ErrorLabel label;
};

/// Admissible windows of a channel plus every labeled transition. Immutable
/// once built. States are indexed in lexicographic order of the window, so
/// index 0 is always the all-clear state.
class StateGraph {
 public:
  StateGraph(ChannelSpec spec, std::vector<ChannelState> states, std::vector<Edge> edges);

  const ChannelSpec& spec() const { return spec_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<ChannelState>& states() const { return states_; }
  const ChannelState& state(StateIndex s) const { return states_.at(s); }
  static constexpr StateIndex clear_state() { return 0; }

  /// All edges, grouped by source state and ordered by label.
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Edge> out_edges(StateIndex s) const;
  std::size_t out_degree(StateIndex s) const { return out_edges(s).size(); }

  std::optional<StateIndex> find(const ChannelState& state) const;
  std::optional<StateIndex> successor(StateIndex s, ErrorLabel label) const;

  /// 0/1 transition matrix; entry (s, s') is 1 iff some edge s -> s'.
  std::vector<std::vector<int>> adjacency_matrix() const;
  bool strongly_connected() const;

 private:
  ChannelSpec spec_;
  std::vector<ChannelState> states_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
};

/// V_r^n(q) = sum_{i<=r} C(n,i) (q-1)^i, the Hamming-ball volume.
std::uint64_t ball_volume(int n, int r, int q);

/// Enumerates every admissible window and transition. Throws ConfigError for
/// invalid specs and ResourceCapError past `max_states`.
StateGraph enumerate_states(const ChannelSpec& spec, std::size_t max_states = 1u << 22);

/// Branching states (S_I) still admit another error; forced states (S_II)
/// have a single error-free successor.
enum class StateClass { Branching, Forced };

struct Transitions {
  std::vector<std::pair<ErrorLabel, StateIndex>> successors;
  StateClass cls = StateClass::Forced;
};

Transitions transitions_from(const StateGraph& graph, StateIndex s);

/// Label sequences of every length-`length` walk from `start`, i.e. every
/// admissible error pattern given that initial window.
std::vector<std::vector<ErrorLabel>> admissible_patterns(const StateGraph& graph, StateIndex start,
                                                         int length);

// ---------------------------------------------------------------------------
// Adversaries and the runtime channel

struct AdversaryView {
  const ChannelSpec& spec;
  const ChannelState& window;
  int input;
  std::uint64_t time;
};

enum class AdversaryStrategy { Greedy, RandomAdmissible, Scripted, Omniscient };

/// Chooses an error label for each channel use. The runtime enforces the
/// window budget, so a policy may request anything; inadmissible requests are
/// overridden with "no error".
class AdversaryPolicy {
 public:
  using Hook = std::function<int(const AdversaryView&)>;

  /// Errs whenever the budget allows (NSE: erase; NSS: add `error_value`).
  static AdversaryPolicy greedy(int error_value = 1);
  /// Uniform choice among the admissible labels at each use.
  static AdversaryPolicy random_admissible(std::uint64_t seed);
  /// Replays `labels`, then stays silent.
  static AdversaryPolicy scripted(std::vector<int> labels);
  static AdversaryPolicy omniscient(Hook hook, std::string description);
  /// Errs greedily only on uses whose position inside a length-`block` frame is
  /// below `burst`.
  static AdversaryPolicy block_targeted(int block, int burst = 1);

  int decide(const AdversaryView& view) { return hook_(view); }
  AdversaryStrategy strategy() const { return strategy_; }
  const std::string& description() const { return description_; }

 private:
  AdversaryPolicy(AdversaryStrategy strategy, std::string description, Hook hook)
      : strategy_(strategy), description_(std::move(description)), hook_(std::move(hook)) {}

  AdversaryStrategy strategy_;
  std::string description_;
  Hook hook_;
};

struct ChannelEvent {
  int input = 0;
  int error = 0;      // label actually applied
  int requested = 0;  // label asked for by the adversary
  int output = 0;
  bool overridden = false;
};

/// Single-owner mutable channel. Starts from the all-clear window unless an
/// initial window is supplied.
class ChannelRuntime {
 public:
  explicit ChannelRuntime(ChannelSpec spec, bool keep_history = false);
  ChannelRuntime(ChannelSpec spec, ChannelState initial, bool keep_history = false);

  /// Sends x through the channel. NSE returns x or kErased; NSS returns
  /// (x + e) mod q.
  int step(int x, AdversaryPolicy& adversary);

  /// Whether applying `label` now keeps every window within budget.
  bool admissible(int label) const;

  const ChannelSpec& spec() const { return spec_; }
  const ChannelState& current() const { return current_; }
  std::uint64_t time() const { return time_; }
  std::uint64_t overrides() const { return overrides_; }
  const ChannelEvent& last_event() const { return last_; }
  const std::vector<ChannelEvent>& history() const { return history_; }

 private:
  ChannelSpec spec_;
  ChannelState current_;
  bool keep_history_;
  std::uint64_t time_ = 0;
  std::uint64_t overrides_ = 0;
  ChannelEvent last_;
  std::vector<ChannelEvent> history_;
};

/// Exhaustively checks that the output range at time t given the full input
/// and output history equals the range given only the last n+1 inputs and n
/// outputs, for every history of length <= t_max + 1 from the all-clear state.
/// Throws ResourceCapError when q^(t_max+1) * |S| > 1e7.
bool verify_finite_memory(const ChannelSpec& spec, int t_max);

// ---------------------------------------------------------------------------
// Export

/// Graphviz digraph; error edges are red and every edge label carries the
/// error value.
std::string to_dot(const StateGraph& graph);

/// {kind, n, d, q, states:[word], edges:[{from,to,label}]}
nlohmann::json to_json(const StateGraph& graph);

}  // namespace swchan
