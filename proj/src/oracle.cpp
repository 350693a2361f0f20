#include "swchan/oracle.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace swchan {

WordCodec::WordCodec(int q, int t) : q_(q), t_(t) {
  if (q < 2) throw ConfigError("alphabet size must be at least 2");
  if (t < 1) throw ConfigError("block length must be positive");
  place_.assign(static_cast<std::size_t>(t), 1);
  long double total = 1;
  for (int i = 0; i < t; ++i) total *= q;
  if (total > 1e18L) throw ResourceCapError("block space q^t does not fit in 64 bits");
  for (int i = t - 2; i >= 0; --i) place_[i] = place_[i + 1] * static_cast<Word>(q);
  count_ = place_[0] * static_cast<Word>(q);
}

int WordCodec::digit(Word w, int position) const { return static_cast<int>((w / place_[position]) % q_); }

std::vector<int> WordCodec::digits(Word w) const {
  std::vector<int> out(static_cast<std::size_t>(t_));
  for (int i = t_ - 1; i >= 0; --i) {
    out[i] = static_cast<int>(w % q_);
    w /= q_;
  }
  return out;
}

Word WordCodec::encode(std::span<const int> digits) const {
  if (static_cast<int>(digits.size()) != t_) throw ConfigError("word length mismatch");
  Word w = 0;
  for (int d : digits) {
    if (d < 0 || d >= q_) throw ConfigError("symbol outside alphabet");
    w = w * q_ + static_cast<Word>(d);
  }
  return w;
}

Word WordCodec::add(Word a, Word b) const {
  if (q_ == 2) return a ^ b;
  Word out = 0;
  for (int i = 0; i < t_; ++i) out += static_cast<Word>((digit(a, i) + digit(b, i)) % q_) * place_[i];
  return out;
}

Word WordCodec::sub(Word a, Word b) const {
  if (q_ == 2) return a ^ b;
  Word out = 0;
  for (int i = 0; i < t_; ++i) out += static_cast<Word>((digit(a, i) - digit(b, i) + q_) % q_) * place_[i];
  return out;
}

std::string WordCodec::to_string(Word w) const {
  std::string s;
  for (int d : digits(w)) s += (d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + d - 10));
  return s;
}

Word WordCodec::parse(const std::string& text) const {
  if (static_cast<int>(text.size()) != t_) throw ConfigError("codeword '" + text + "' has the wrong length");
  std::vector<int> ds;
  for (char c : text) {
    int v = std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : std::tolower(c) - 'a' + 10;
    ds.push_back(v);
  }
  return encode(ds);
}

// ---------------------------------------------------------------------------

bool fits_window_budget(std::span<const char> marked, int n, int budget) {
  int in_window = 0;
  for (std::size_t j = 0; j < marked.size(); ++j) {
    in_window += marked[j] ? 1 : 0;
    if (j >= static_cast<std::size_t>(n)) in_window -= marked[j - n] ? 1 : 0;
    if (in_window > budget) return false;
  }
  return true;
}

namespace {

// Assigns each support position to one of two patterns, each within budget d
// on every window.
bool split_support(std::span<const int> support, std::vector<char>& side_a, std::vector<char>& side_b,
                   std::size_t next, int n, int d) {
  if (next == support.size()) return true;
  const int pos = support[next];
  auto window_ok = [&](const std::vector<char>& marked) {
    // Only windows that contain pos can have changed.
    const int len = static_cast<int>(marked.size());
    for (int end = pos; end < std::min(len, pos + n); ++end) {
      int count = 0;
      for (int i = std::max(0, end - n + 1); i <= end; ++i) count += marked[i];
      if (count > d) return false;
    }
    return true;
  };
  side_a[pos] = 1;
  if (window_ok(side_a) && split_support(support, side_a, side_b, next + 1, n, d)) return true;
  side_a[pos] = 0;
  side_b[pos] = 1;
  if (window_ok(side_b) && split_support(support, side_a, side_b, next + 1, n, d)) return true;
  side_b[pos] = 0;
  return false;
}

}  // namespace

bool difference_confusable(const ChannelSpec& spec, std::span<const int> delta) {
  std::vector<char> marked(delta.size(), 0);
  std::vector<int> support;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] % spec.q != 0) {
      marked[i] = 1;
      support.push_back(static_cast<int>(i));
    }
  }
  if (support.empty()) return false;
  if (spec.kind == ChannelKind::NSE) return fits_window_budget(marked, spec.n, spec.d);
  if (!fits_window_budget(marked, spec.n, 2 * spec.d)) return false;
  std::vector<char> side_a(delta.size(), 0);
  std::vector<char> side_b(delta.size(), 0);
  return split_support(support, side_a, side_b, 0, spec.n, spec.d);
}

bool adjacent(const ChannelSpec& spec, std::span<const int> x, std::span<const int> y) {
  spec.validate();
  if (x.size() != y.size()) throw ConfigError("adjacent: blocks differ in length");
  std::vector<int> delta(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) delta[i] = ((y[i] - x[i]) % spec.q + spec.q) % spec.q;
  return difference_confusable(spec, delta);
}

ConfusabilityGraph::ConfusabilityGraph(ChannelSpec spec, int t, std::vector<Word> differences)
    : spec_(spec), codec_(spec.q, t), differences_(std::move(differences)) {
  std::sort(differences_.begin(), differences_.end());
}

bool ConfusabilityGraph::adjacent(Word u, Word v) const {
  return std::binary_search(differences_.begin(), differences_.end(), codec_.sub(v, u));
}

std::vector<Word> ConfusabilityGraph::neighbors(Word v) const {
  std::vector<Word> out;
  out.reserve(differences_.size());
  for (Word delta : differences_) out.push_back(codec_.add(v, delta));
  std::sort(out.begin(), out.end());
  return out;
}

ConfusabilityGraph build_confusability(const ChannelSpec& spec, int t, Word max_vertices, kernels::Exec exec) {
  spec.validate();
  const WordCodec codec(spec.q, t);
  if (codec.count() > max_vertices)
    throw ResourceCapError("confusability graph would have " + std::to_string(codec.count()) +
                           " vertices, above the cap of " + std::to_string(max_vertices));
  const auto mask = kernels::evaluate_mask(exec, codec.count(), [&](std::uint64_t w) {
    return w != 0 && difference_confusable(spec, codec.digits(w));
  });
  std::vector<Word> differences;
  for (Word w = 0; w < codec.count(); ++w)
    if (mask[w]) differences.push_back(w);
  return ConfusabilityGraph(spec, t, std::move(differences));
}

// ---------------------------------------------------------------------------
// Maximum independent set

double Codebook::rate() const {
  if (codewords.empty() || t <= 0) return 0.0;
  return std::log(static_cast<double>(codewords.size())) / std::log(static_cast<double>(spec.q)) / t;
}

std::vector<std::string> Codebook::words() const {
  const WordCodec codec(spec.q, t);
  std::vector<std::string> out;
  for (Word w : codewords) out.push_back(codec.to_string(w));
  return out;
}

Codebook repetition_code(const ChannelSpec& spec) {
  spec.validate();
  const WordCodec codec(spec.q, spec.n);
  Codebook cb;
  cb.spec = spec;
  cb.t = spec.n;
  for (int symbol = 0; symbol < spec.q; ++symbol) {
    std::vector<int> ds(static_cast<std::size_t>(spec.n), symbol);
    cb.codewords.push_back(codec.encode(ds));
  }
  return cb;
}

namespace {

using Bits = std::vector<std::uint64_t>;

bool any_bit(const Bits& b) {
  return std::any_of(b.begin(), b.end(), [](std::uint64_t w) { return w != 0; });
}

std::size_t first_bit(const Bits& b) {
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) return i * 64 + static_cast<std::size_t>(std::countr_zero(b[i]));
  return b.size() * 64;
}

// Max clique on the complement (non-confusable) graph, San Segundo style
// bitset branch and bound with greedy coloring bounds.
class CliqueSearch {
 public:
  CliqueSearch(const std::vector<std::uint64_t>& compatible, std::size_t vertices, std::size_t words,
               double budget_seconds)
      : compat_(compatible), vertices_(vertices), words_(words), budget_(budget_seconds),
        start_(std::chrono::steady_clock::now()) {}

  void run(std::vector<std::size_t> seed_clique, const Bits& candidates, std::vector<std::size_t> incumbent) {
    best_ = std::move(incumbent);
    current_ = std::move(seed_clique);
    if (current_.size() > best_.size()) best_ = current_;
    if (any_bit(candidates)) expand(candidates);
  }

  const std::vector<std::size_t>& best() const { return best_; }
  bool timed_out() const { return timed_out_; }

 private:
  const std::uint64_t* row(std::size_t v) const { return compat_.data() + v * words_; }

  bool out_of_time() {
    if (budget_ <= 0.0) return false;
    if ((++nodes_ & 1023) != 0) return timed_out_;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (elapsed > budget_) timed_out_ = true;
    return timed_out_;
  }

  void expand(Bits p) {
    if (out_of_time()) return;
    std::vector<std::size_t> order;
    std::vector<std::size_t> color;
    Bits uncolored = p;
    std::size_t k = 0;
    while (any_bit(uncolored)) {
      ++k;
      Bits q = uncolored;
      while (any_bit(q)) {
        const std::size_t v = first_bit(q);
        uncolored[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
        q[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
        const std::uint64_t* r = row(v);
        for (std::size_t w = 0; w < words_; ++w) q[w] &= ~r[w];
        order.push_back(v);
        color.push_back(k);
      }
    }
    for (std::size_t i = order.size(); i-- > 0;) {
      if (current_.size() + color[i] <= best_.size() || timed_out_) return;
      const std::size_t v = order[i];
      Bits next(words_);
      const std::uint64_t* r = row(v);
      for (std::size_t w = 0; w < words_; ++w) next[w] = p[w] & r[w];
      current_.push_back(v);
      if (!any_bit(next)) {
        if (current_.size() > best_.size()) best_ = current_;
      } else {
        expand(std::move(next));
      }
      current_.pop_back();
      p[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
    }
  }

  const std::vector<std::uint64_t>& compat_;
  std::size_t vertices_;
  std::size_t words_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
  std::vector<std::size_t> current_;
  std::vector<std::size_t> best_;
};

}  // namespace

Codebook max_codebook(const ConfusabilityGraph& graph, const SearchOptions& options) {
  const Word vertices = graph.vertex_count();
  if (vertices > options.max_vertices)
    throw ResourceCapError("max_codebook: " + std::to_string(vertices) + " vertices exceed the cap of " +
                           std::to_string(options.max_vertices));
  const std::size_t words = static_cast<std::size_t>((vertices + 63) / 64);
  const WordCodec& codec = graph.codec();
  const auto& diffs = graph.differences();

  auto compat = kernels::materialize_rows(options.exec, vertices, diffs.size(), words,
                                          [&](std::uint64_t v, std::size_t k) { return codec.add(v, diffs[k]); });
  // complement, without self loops and padding bits
  for (Word v = 0; v < vertices; ++v) {
    std::uint64_t* r = compat.data() + v * words;
    for (std::size_t w = 0; w < words; ++w) r[w] = ~r[w];
    r[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
    if (vertices % 64) r[words - 1] &= (std::uint64_t{1} << (vertices % 64)) - 1;
  }

  // Greedy incumbent in index order; it always starts with block 0.
  std::vector<std::size_t> greedy;
  Bits allowed(words, ~std::uint64_t{0});
  if (vertices % 64) allowed[words - 1] = (std::uint64_t{1} << (vertices % 64)) - 1;
  while (any_bit(allowed)) {
    const std::size_t v = first_bit(allowed);
    greedy.push_back(v);
    allowed[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
    const std::uint64_t* r = compat.data() + v * words;
    for (std::size_t w = 0; w < words; ++w) allowed[w] &= r[w];
  }

  CliqueSearch search(compat, static_cast<std::size_t>(vertices), words, options.time_budget_seconds);
  Bits candidates(compat.begin(), compat.begin() + static_cast<std::ptrdiff_t>(words));
  search.run({0}, candidates, greedy);

  Codebook cb;
  cb.spec = graph.spec();
  cb.t = graph.block_length();
  for (std::size_t v : search.best()) cb.codewords.push_back(static_cast<Word>(v));
  std::sort(cb.codewords.begin(), cb.codewords.end());
  cb.exact = !search.timed_out();
  return cb;
}

Codebook best_codebook(const ChannelSpec& spec, int t, const SearchOptions& options) {
  return max_codebook(build_confusability(spec, t, options.max_vertices, options.exec), options);
}

// ---------------------------------------------------------------------------

std::vector<int> channel_output(const ChannelSpec& spec, std::span<const int> input,
                                std::span<const ErrorLabel> pattern) {
  std::vector<int> out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (spec.kind == ChannelKind::NSE)
      out[i] = pattern[i] != 0 ? kErased : input[i];
    else
      out[i] = (input[i] + pattern[i]) % spec.q;
  }
  return out;
}

namespace {

std::uint64_t output_key(const ChannelSpec& spec, std::span<const int> output) {
  std::uint64_t key = 0;
  for (int y : output) key = key * static_cast<std::uint64_t>(spec.q + 1) + static_cast<std::uint64_t>(y == kErased ? spec.q : y);
  return key;
}

void check_key_width(const ChannelSpec& spec, int t) {
  if (t * std::log2(spec.q + 1.0) > 63.0) throw ResourceCapError("block too long for output keys");
}

}  // namespace

double total_patterns(const StateGraph& graph, int t) {
  std::vector<double> cur(graph.size(), 1.0), next(graph.size());
  for (int k = 0; k < t; ++k) {
    for (StateIndex s = 0; s < graph.size(); ++s) {
      double acc = 0.0;
      for (const Edge& e : graph.out_edges(s)) acc += cur[e.to];
      next[s] = acc;
    }
    cur.swap(next);
  }
  return std::accumulate(cur.begin(), cur.end(), 0.0);
}

bool verify_zero_error(const Codebook& codebook, std::uint64_t max_work) {
  const ChannelSpec& spec = codebook.spec;
  spec.validate();
  if (codebook.codewords.size() <= 1) return true;
  check_key_width(spec, codebook.t);
  const StateGraph graph = enumerate_states(spec);
  const WordCodec codec(spec.q, codebook.t);
  const double work = total_patterns(graph, codebook.t) * static_cast<double>(codebook.codewords.size());
  if (work > static_cast<double>(max_work))
    throw ResourceCapError("verify_zero_error: " + std::to_string(work) + " output evaluations exceed the cap");

  std::unordered_map<std::uint64_t, std::size_t> owner;
  for (StateIndex s = 0; s < graph.size(); ++s) {
    const auto patterns = admissible_patterns(graph, s, codebook.t);
    for (std::size_t c = 0; c < codebook.codewords.size(); ++c) {
      const auto input = codec.digits(codebook.codewords[c]);
      for (const auto& pattern : patterns) {
        const auto key = output_key(spec, channel_output(spec, input, pattern));
        const auto [it, inserted] = owner.emplace(key, c);
        if (!inserted && it->second != c) return false;
      }
    }
  }
  return true;
}

Decoder::Decoder(const Codebook& codebook) : spec_(codebook.spec) {
  check_key_width(spec_, codebook.t);
  const StateGraph graph = enumerate_states(spec_);
  const WordCodec codec(spec_.q, codebook.t);
  for (StateIndex s = 0; s < graph.size(); ++s) {
    const auto patterns = admissible_patterns(graph, s, codebook.t);
    for (std::size_t c = 0; c < codebook.codewords.size(); ++c) {
      const auto input = codec.digits(codebook.codewords[c]);
      for (const auto& pattern : patterns) {
        const auto [it, inserted] = table_.emplace(key(channel_output(spec_, input, pattern)), c);
        if (!inserted && it->second != c) throw AnalysisError("Decoder: codebook is not zero-error");
      }
    }
  }
}

std::uint64_t Decoder::key(std::span<const int> output) const { return output_key(spec_, output); }

std::optional<std::size_t> Decoder::decode(std::span<const int> output) const {
  const auto it = table_.find(key(output));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

int max_errors_in_horizon(const ChannelSpec& spec, int N) {
  if (N < 0) throw ConfigError("max_errors_in_horizon: horizon must be non-negative");
  const StateGraph graph = enumerate_states(spec);
  std::vector<int> cur(graph.size(), 0), next(graph.size());
  for (int k = 0; k < N; ++k) {
    for (StateIndex s = 0; s < graph.size(); ++s) {
      int best = 0;
      for (const Edge& e : graph.out_edges(s)) best = std::max(best, (e.label != 0 ? 1 : 0) + cur[e.to]);
      next[s] = best;
    }
    cur.swap(next);
  }
  return cur[StateGraph::clear_state()];
}

// ---------------------------------------------------------------------------
// Maximin information

double TaxicabPartition::i_star(int q) const {
  return std::log(static_cast<double>(components())) / std::log(static_cast<double>(q));
}

TaxicabPartition taxicab_partition(const JointRange& jr) {
  if (jr.points.empty()) throw ConfigError("taxicab_partition: empty joint range");
  const std::size_t n = jr.points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };
  std::unordered_map<std::uint64_t, std::size_t> by_x, by_y;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = jr.points[i];
    if (auto [it, fresh] = by_x.emplace(x, i); !fresh) unite(i, it->second);
    if (auto [it, fresh] = by_y.emplace(y, i); !fresh) unite(i, it->second);
  }
  std::unordered_map<std::size_t, std::vector<std::uint64_t>> groups;
  for (const auto& [x, i] : by_x) groups[find(i)].push_back(x);
  TaxicabPartition out;
  for (auto& [root, xs] : groups) {
    std::sort(xs.begin(), xs.end());
    out.blocks.push_back(std::move(xs));
  }
  std::sort(out.blocks.begin(), out.blocks.end());
  return out;
}

std::vector<MaximinRow> c0_via_maximin(const ChannelSpec& spec, int t_max, int max_inputs, kernels::Exec exec) {
  spec.validate();
  if (t_max < 0) throw ConfigError("c0_via_maximin: t_max must be non-negative");
  const StateGraph graph = enumerate_states(spec);
  std::vector<MaximinRow> rows;
  for (int t = 0; t <= t_max; ++t) {
    const int len = t + 1;
    const WordCodec codec(spec.q, len);
    if (codec.count() > static_cast<Word>(max_inputs) || codec.count() > 30)
      throw ResourceCapError("c0_via_maximin: " + std::to_string(codec.count()) +
                             " input blocks exceed the subset-enumeration cap");
    check_key_width(spec, len);
    const auto patterns = admissible_patterns(graph, StateGraph::clear_state(), len);
    const auto inputs = static_cast<std::size_t>(codec.count());

    std::vector<std::vector<std::uint64_t>> outputs(inputs);
    for (std::size_t x = 0; x < inputs; ++x) {
      const auto digits = codec.digits(x);
      for (const auto& p : patterns) outputs[x].push_back(output_key(spec, channel_output(spec, digits, p)));
    }
    auto components_of = [&](std::uint64_t subset) {
      JointRange jr;
      for (std::size_t x = 0; x < inputs; ++x)
        if (subset >> x & 1)
          for (std::uint64_t y : outputs[x]) jr.points.emplace_back(x, y);
      return taxicab_partition(jr).components();
    };

    MaximinRow row;
    row.t = t;
    row.full_range_components = components_of((std::uint64_t{1} << inputs) - 1);
    const auto subsets = static_cast<std::int64_t>(std::uint64_t{1} << inputs);
    std::size_t best = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(max : best) if (exec == kernels::Exec::Parallel)
    for (std::int64_t subset = 1; subset < subsets; ++subset)
      best = std::max(best, components_of(static_cast<std::uint64_t>(subset)));
    row.components = best;
    row.i_star = std::log(static_cast<double>(best)) / std::log(static_cast<double>(spec.q));
    row.rate = row.i_star / len;

    SearchOptions opts;
    opts.exec = exec;
    row.max_codebook = best_codebook(spec, len, opts).size();
    row.agrees = row.max_codebook == row.components;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Codebook& cb) {
  return nlohmann::json{{"spec", cb.spec},         {"t", cb.t},         {"codewords", cb.words()},
                        {"size", cb.size()},       {"rate", cb.rate()}, {"exact", cb.exact},
                        {"verified", cb.verified}};
}

Codebook codebook_from_json(const nlohmann::json& j) {
  Codebook cb;
  try {
    cb.spec = j.at("spec").get<ChannelSpec>();
    cb.spec.validate();
    cb.t = j.at("t").get<int>();
    const WordCodec codec(cb.spec.q, cb.t);
    for (const auto& w : j.at("codewords")) cb.codewords.push_back(codec.parse(w.get<std::string>()));
    cb.exact = j.value("exact", false);
    cb.verified = j.value("verified", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed codebook: ") + e.what());
  }
  return cb;
}

}  // namespace swchan
