#pragma once

// Exact finite-length zero-error codes: confusability graphs over input
// blocks, maximum independent sets, exhaustive zero-error verification and
// maximin information over finite joint ranges.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swchan/channel.hpp"
#include "swchan/kernels.hpp"

namespace swchan {

/// Input block encoded as a base-q integer; digit 0 (most significant) is the
/// first channel use.
using Word = std::uint64_t;

class WordCodec {
 public:
  WordCodec(int q, int t);

  int q() const { return q_; }
  int length() const { return t_; }
  Word count() const { return count_; }

  int digit(Word w, int position) const;
  std::vector<int> digits(Word w) const;
  Word encode(std::span<const int> digits) const;
  /// Digit-wise (a + b) mod q and (a - b) mod q.
  Word add(Word a, Word b) const;
  Word sub(Word a, Word b) const;
  std::string to_string(Word w) const;
  Word parse(const std::string& text) const;

 private:
  int q_;
  int t_;
  Word count_;
  std::vector<Word> place_;
};

/// True iff every length-n window ending inside [0, size) holds at most
/// `budget` marked positions. Uses before position 0 count as clean, matching
/// a channel that starts from the all-clear window.
bool fits_window_budget(std::span<const char> marked, int n, int budget);

/// Whether blocks x and y can produce a common output from the all-clear
/// state. x == y is not an edge. NSE: the difference support itself must be an
/// admissible erasure pattern. NSS: the support must split into two admissible
/// error patterns (exact search behind the necessary "<= 2d per window"
/// filter).
bool adjacent(const ChannelSpec& spec, std::span<const int> x, std::span<const int> y);

/// Same test on the digit-wise difference y - x (mod q).
bool difference_confusable(const ChannelSpec& spec, std::span<const int> delta);

/// Confusability depends only on y - x, so the graph is the Cayley graph of
/// Z_q^t generated by the confusable differences.
class ConfusabilityGraph {
 public:
  ConfusabilityGraph(ChannelSpec spec, int t, std::vector<Word> differences);

  const ChannelSpec& spec() const { return spec_; }
  int block_length() const { return codec_.length(); }
  const WordCodec& codec() const { return codec_; }
  Word vertex_count() const { return codec_.count(); }
  /// Sorted nonzero differences that make two blocks confusable.
  const std::vector<Word>& differences() const { return differences_; }
  std::size_t degree() const { return differences_.size(); }
  std::uint64_t edge_count() const { return vertex_count() * degree() / 2; }

  bool adjacent(Word u, Word v) const;
  std::vector<Word> neighbors(Word v) const;

 private:
  ChannelSpec spec_;
  WordCodec codec_;
  std::vector<Word> differences_;
};

ConfusabilityGraph build_confusability(const ChannelSpec& spec, int t, Word max_vertices = Word{1} << 20,
                                       kernels::Exec exec = kernels::Exec::Parallel);

struct Codebook {
  ChannelSpec spec;
  int t = 0;
  std::vector<Word> codewords;
  bool exact = false;     // maximum certified (search finished)
  bool verified = false;  // passed verify_zero_error

  std::size_t size() const { return codewords.size(); }
  /// log_q |codebook| / t.
  double rate() const;
  std::vector<std::string> words() const;
};

/// n-fold repetition of each alphabet symbol, block length n.
Codebook repetition_code(const ChannelSpec& spec);

struct SearchOptions {
  /// Wall-clock budget for branch and bound; 0 means unlimited.
  double time_budget_seconds = 60.0;
  Word max_vertices = Word{1} << 13;
  kernels::Exec exec = kernels::Exec::Parallel;
};

/// Exact maximum independent set by bitset branch and bound (greedy coloring
/// bound, greedy initial incumbent). Block 0 is always included, which is
/// without loss of generality on a vertex-transitive graph. On timeout the
/// best codebook found is returned with exact = false.
Codebook max_codebook(const ConfusabilityGraph& graph, const SearchOptions& options = {});

/// Builds the confusability graph and solves it.
Codebook best_codebook(const ChannelSpec& spec, int t, const SearchOptions& options = {});

/// Output of a block for a given error pattern. NSE erasures are kErased.
std::vector<int> channel_output(const ChannelSpec& spec, std::span<const int> input,
                                std::span<const ErrorLabel> pattern);

/// Checks every codeword pair against every admissible pattern from every
/// initial state. Throws ResourceCapError past `max_work` output evaluations.
bool verify_zero_error(const Codebook& codebook, std::uint64_t max_work = 20'000'000);

/// Output-to-message table over every initial state. Throws AnalysisError if
/// two codewords share an output.
class Decoder {
 public:
  explicit Decoder(const Codebook& codebook);
  std::optional<std::size_t> decode(std::span<const int> output) const;

 private:
  std::uint64_t key(std::span<const int> output) const;

  ChannelSpec spec_;
  std::unordered_map<std::uint64_t, std::size_t> table_;
};

/// Exact maximum number of errors over admissible length-N patterns from the
/// all-clear state.
int max_errors_in_horizon(const ChannelSpec& spec, int N);

/// Finite joint range of two uncertain variables.
struct JointRange {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> points;
};

struct TaxicabPartition {
  /// x-projection of each taxicab-connected component, sorted.
  std::vector<std::vector<std::uint64_t>> blocks;
  std::size_t components() const { return blocks.size(); }
  /// log_q(number of components).
  double i_star(int q) const;
};

/// Components of the relation "shares an x or a y coordinate". Throws
/// ConfigError on an empty range.
TaxicabPartition taxicab_partition(const JointRange& jr);

struct MaximinRow {
  int t = 0;  // last time index; block length t + 1
  std::size_t components = 0;  // sup over input ranges
  double i_star = 0.0;
  double rate = 0.0;  // i_star / (t + 1)
  std::size_t full_range_components = 0;  // all inputs allowed
  std::size_t max_codebook = 0;
  bool agrees = false;
};

/// For t = 0..t_max: sup over input ranges of I*[X(0:t); Y(0:t)] from the
/// all-clear state (exhaustive over subsets of X^(t+1)), compared with the
/// maximum codebook of block length t + 1. Throws ResourceCapError once
/// q^(t+1) exceeds `max_inputs`.
std::vector<MaximinRow> c0_via_maximin(const ChannelSpec& spec, int t_max, int max_inputs = 16,
                                       kernels::Exec exec = kernels::Exec::Parallel);

/// codes.json: {spec, t, codewords:[base-q strings], rate, exact, verified}
nlohmann::json to_json(const Codebook& codebook);
Codebook codebook_from_json(const nlohmann::json& j);

}  // namespace swchan
