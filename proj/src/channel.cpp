#include "swchan/channel.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace swchan {

std::string to_string(ChannelKind kind) { return kind == ChannelKind::NSE ? "nse" : "nss"; }

ChannelKind parse_channel_kind(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "nse") return ChannelKind::NSE;
  if (lower == "nss") return ChannelKind::NSS;
  throw ConfigError("unknown channel kind '" + text + "' (expected nse or nss)");
}

void ChannelSpec::validate() const {
  if (n < 1) throw ConfigError("window length n must be positive");
  if (d < 0) throw ConfigError("error budget d must be non-negative");
  if (d > n) throw ConfigError("budget exceeds window: d=" + std::to_string(d) + " > n=" + std::to_string(n));
  if (q < 2) throw ConfigError("alphabet size q must be at least 2");
}

std::string ChannelSpec::to_string() const {
  std::ostringstream os;
  os << swchan::to_string(kind) << ':' << n << ',' << d << ',' << q;
  return os.str();
}

ChannelSpec ChannelSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("channel '" + text + "' should look like nse:n,d,q");
  ChannelSpec spec;
  spec.kind = parse_channel_kind(text.substr(0, colon));
  std::vector<int> fields;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      fields.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("channel '" + text + "': '" + item + "' is not an integer");
    }
  }
  if (fields.size() < 2 || fields.size() > 3) throw ConfigError("channel '" + text + "' should look like nse:n,d,q");
  spec.n = fields[0];
  spec.d = fields[1];
  if (fields.size() == 3) spec.q = fields[2];
  spec.validate();
  return spec;
}

void to_json(nlohmann::json& j, const ChannelSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)}, {"n", spec.n}, {"d", spec.d}, {"q", spec.q}};
}

void from_json(const nlohmann::json& j, ChannelSpec& spec) {
  spec.kind = parse_channel_kind(j.at("kind").get<std::string>());
  spec.n = j.at("n").get<int>();
  spec.d = j.at("d").get<int>();
  spec.q = j.value("q", 2);
}

int ChannelState::error_count() const {
  return static_cast<int>(std::count_if(window.begin(), window.end(), [](ErrorLabel e) { return e != 0; }));
}

ChannelState ChannelState::shifted(ErrorLabel label) const {
  ChannelState next;
  next.window.reserve(window.size());
  next.window.insert(next.window.end(), window.begin() + 1, window.end());
  next.window.push_back(label);
  return next;
}

std::string window_word(const ChannelState& state, ChannelKind kind) {
  std::string word;
  word.reserve(state.window.size());
  for (ErrorLabel e : state.window) {
    if (e == 0)
      word.push_back('o');
    else if (kind == ChannelKind::NSE)
      word.push_back('*');
    else
      word += std::to_string(e);
  }
  return word;
}

ChannelState all_clear(const ChannelSpec& spec) {
  return ChannelState{std::vector<ErrorLabel>(static_cast<std::size_t>(spec.n), 0)};
}

// ---------------------------------------------------------------------------

StateGraph::StateGraph(ChannelSpec spec, std::vector<ChannelState> states, std::vector<Edge> edges)
    : spec_(spec), states_(std::move(states)), edges_(std::move(edges)) {
  std::stable_sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.from != b.from ? a.from < b.from : a.label < b.label;
  });
  offsets_.assign(states_.size() + 1, 0);
  for (const Edge& e : edges_) ++offsets_[e.from + 1];
  for (std::size_t i = 0; i < states_.size(); ++i) offsets_[i + 1] += offsets_[i];
}

std::span<const Edge> StateGraph::out_edges(StateIndex s) const {
  return std::span<const Edge>(edges_).subspan(offsets_.at(s), offsets_[s + 1] - offsets_[s]);
}

std::optional<StateIndex> StateGraph::find(const ChannelState& state) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), state);
  if (it == states_.end() || *it != state) return std::nullopt;
  return static_cast<StateIndex>(it - states_.begin());
}

std::optional<StateIndex> StateGraph::successor(StateIndex s, ErrorLabel label) const {
  for (const Edge& e : out_edges(s))
    if (e.label == label) return e.to;
  return std::nullopt;
}

std::vector<std::vector<int>> StateGraph::adjacency_matrix() const {
  std::vector<std::vector<int>> a(size(), std::vector<int>(size(), 0));
  for (const Edge& e : edges_) a[e.from][e.to] = 1;
  return a;
}

bool StateGraph::strongly_connected() const {
  if (states_.empty()) return false;
  // Forward and backward reachability from state 0.
  auto reach_all = [&](bool reverse) {
    std::vector<std::vector<StateIndex>> adj(size());
    for (const Edge& e : edges_) {
      if (reverse)
        adj[e.to].push_back(e.from);
      else
        adj[e.from].push_back(e.to);
    }
    std::vector<char> seen(size(), 0);
    std::vector<StateIndex> stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
      StateIndex u = stack.back();
      stack.pop_back();
      for (StateIndex v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++visited;
          stack.push_back(v);
        }
      }
    }
    return visited == size();
  };
  return reach_all(false) && reach_all(true);
}

std::uint64_t ball_volume(int n, int r, int q) {
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // C(n, i)
  std::uint64_t power = 1;  // (q-1)^i
  for (int i = 0; i <= std::min(n, r); ++i) {
    total += binom * power;
    binom = binom * static_cast<std::uint64_t>(n - i) / static_cast<std::uint64_t>(i + 1);
    power *= static_cast<std::uint64_t>(q - 1);
  }
  return total;
}

namespace {

void enumerate_windows(int position, int errors_left, int alphabet, std::vector<ErrorLabel>& prefix,
                       std::vector<ChannelState>& out) {
  if (position == static_cast<int>(prefix.size())) {
    out.push_back(ChannelState{prefix});
    return;
  }
  for (int v = 0; v < alphabet; ++v) {
    if (v != 0 && errors_left == 0) break;
    prefix[position] = static_cast<ErrorLabel>(v);
    enumerate_windows(position + 1, errors_left - (v != 0 ? 1 : 0), alphabet, prefix, out);
  }
  prefix[position] = 0;
}

}  // namespace

StateGraph enumerate_states(const ChannelSpec& spec, std::size_t max_states) {
  spec.validate();
  const int alphabet = spec.error_alphabet();
  if (alphabet > 255) throw ConfigError("alphabet size above 255 is not supported");
  const std::uint64_t expected = ball_volume(spec.n, spec.d, alphabet);
  if (expected > max_states)
    throw ResourceCapError("channel " + spec.to_string() + " has " + std::to_string(expected) +
                           " states, above the cap of " + std::to_string(max_states));

  std::vector<ChannelState> states;
  states.reserve(expected);
  std::vector<ErrorLabel> prefix(static_cast<std::size_t>(spec.n), 0);
  enumerate_windows(0, spec.d, alphabet, prefix, states);

  std::vector<Edge> edges;
  auto index_of = [&](const ChannelState& s) {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    return static_cast<StateIndex>(it - states.begin());
  };
  for (StateIndex s = 0; s < states.size(); ++s) {
    for (int label = 0; label < alphabet; ++label) {
      ChannelState next = states[s].shifted(static_cast<ErrorLabel>(label));
      if (next.error_count() <= spec.d) edges.push_back({s, index_of(next), static_cast<ErrorLabel>(label)});
    }
  }
  return StateGraph(spec, std::move(states), std::move(edges));
}

Transitions transitions_from(const StateGraph& graph, StateIndex s) {
  if (s >= graph.size()) throw ConfigError("state index out of range");
  Transitions t;
  for (const Edge& e : graph.out_edges(s)) t.successors.emplace_back(e.label, e.to);
  t.cls = t.successors.size() > 1 ? StateClass::Branching : StateClass::Forced;
  return t;
}

std::vector<std::vector<ErrorLabel>> admissible_patterns(const StateGraph& graph, StateIndex start,
                                                         int length) {
  std::vector<std::vector<ErrorLabel>> out;
  std::vector<ErrorLabel> pattern(static_cast<std::size_t>(std::max(length, 0)));
  auto walk = [&](auto&& self, StateIndex s, int depth) -> void {
    if (depth == length) {
      out.push_back(pattern);
      return;
    }
    for (const Edge& e : graph.out_edges(s)) {
      pattern[depth] = e.label;
      self(self, e.to, depth + 1);
    }
  };
  walk(walk, start, 0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool label_admissible(const ChannelSpec& spec, const ChannelState& window, int label) {
  if (label < 0 || label >= spec.error_alphabet()) return false;
  if (label == 0) return true;
  return window.shifted(static_cast<ErrorLabel>(label)).error_count() <= spec.d;
}

}  // namespace

AdversaryPolicy AdversaryPolicy::greedy(int error_value) {
  return AdversaryPolicy(AdversaryStrategy::Greedy, "greedy", [error_value](const AdversaryView& v) {
    int label = v.spec.kind == ChannelKind::NSE ? 1 : error_value;
    return label_admissible(v.spec, v.window, label) ? label : 0;
  });
}

AdversaryPolicy AdversaryPolicy::random_admissible(std::uint64_t seed) {
  auto engine = std::make_shared<std::mt19937_64>(seed);
  return AdversaryPolicy(AdversaryStrategy::RandomAdmissible, "random(" + std::to_string(seed) + ")",
                         [engine](const AdversaryView& v) {
                           std::vector<int> options;
                           for (int label = 0; label < v.spec.error_alphabet(); ++label)
                             if (label_admissible(v.spec, v.window, label)) options.push_back(label);
                           std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
                           return options[pick(*engine)];
                         });
}

AdversaryPolicy AdversaryPolicy::scripted(std::vector<int> labels) {
  auto script = std::make_shared<std::vector<int>>(std::move(labels));
  return AdversaryPolicy(AdversaryStrategy::Scripted, "scripted", [script](const AdversaryView& v) {
    return v.time < script->size() ? (*script)[v.time] : 0;
  });
}

AdversaryPolicy AdversaryPolicy::omniscient(Hook hook, std::string description) {
  return AdversaryPolicy(AdversaryStrategy::Omniscient, std::move(description), std::move(hook));
}

AdversaryPolicy AdversaryPolicy::block_targeted(int block, int burst) {
  if (block < 1) throw ConfigError("block length must be positive");
  return omniscient(
      [block, burst](const AdversaryView& v) {
        if (static_cast<int>(v.time % static_cast<std::uint64_t>(block)) >= burst) return 0;
        return label_admissible(v.spec, v.window, 1) ? 1 : 0;
      },
      "block-targeted(" + std::to_string(block) + "," + std::to_string(burst) + ")");
}

ChannelRuntime::ChannelRuntime(ChannelSpec spec, bool keep_history)
    : ChannelRuntime(spec, all_clear(spec), keep_history) {}

ChannelRuntime::ChannelRuntime(ChannelSpec spec, ChannelState initial, bool keep_history)
    : spec_(spec), current_(std::move(initial)), keep_history_(keep_history) {
  spec_.validate();
  if (static_cast<int>(current_.window.size()) != spec_.n)
    throw ConfigError("initial window length does not match n");
  if (current_.error_count() > spec_.d) throw ConfigError("initial window exceeds the error budget");
  for (ErrorLabel e : current_.window)
    if (e >= spec_.error_alphabet()) throw ConfigError("initial window has an invalid error label");
}

bool ChannelRuntime::admissible(int label) const { return label_admissible(spec_, current_, label); }

int ChannelRuntime::step(int x, AdversaryPolicy& adversary) {
  if (x < 0 || x >= spec_.q)
    throw ConfigError("input symbol " + std::to_string(x) + " outside alphabet of size " + std::to_string(spec_.q));
  ChannelEvent ev;
  ev.input = x;
  ev.requested = adversary.decide(AdversaryView{spec_, current_, x, time_});
  ev.error = ev.requested;
  if (!admissible(ev.requested)) {
    ev.error = 0;
    ev.overridden = true;
    ++overrides_;
  }
  if (spec_.kind == ChannelKind::NSE)
    ev.output = ev.error != 0 ? kErased : x;
  else
    ev.output = (x + ev.error) % spec_.q;
  current_ = current_.shifted(static_cast<ErrorLabel>(ev.error));
  ++time_;
  last_ = ev;
  if (keep_history_) history_.push_back(ev);
  return ev.output;
}

// ---------------------------------------------------------------------------

bool verify_finite_memory(const ChannelSpec& spec, int t_max) {
  const StateGraph graph = enumerate_states(spec);
  double budget = static_cast<double>(graph.size());
  for (int i = 0; i <= t_max; ++i) budget *= spec.q;
  if (budget > 1e7) throw ResourceCapError("verify_finite_memory: q^(t_max+1)*|S| exceeds 1e7");

  const int m = spec.n;
  for (int t = m; t <= t_max; ++t) {
    const int len = t + 1;
    const auto patterns = admissible_patterns(graph, StateGraph::clear_state(), len);
    using Key = std::vector<int>;
    std::map<Key, std::set<int>> full_range;
    std::map<Key, std::set<int>> window_range;
    std::vector<std::pair<Key, Key>> keys;

    std::vector<int> x(static_cast<std::size_t>(len), 0);
    std::vector<int> y(static_cast<std::size_t>(len), 0);
    for (;;) {
      for (const auto& e : patterns) {
        for (int i = 0; i < len; ++i)
          y[i] = spec.kind == ChannelKind::NSE ? (e[i] != 0 ? kErased : x[i]) : (x[i] + e[i]) % spec.q;
        Key full(x.begin(), x.end());
        full.insert(full.end(), y.begin(), y.end() - 1);
        Key local(x.begin() + (t - m), x.end());
        local.insert(local.end(), y.begin() + (t - m), y.end() - 1);
        full_range[full].insert(y[t]);
        window_range[local].insert(y[t]);
        keys.emplace_back(std::move(full), std::move(local));
      }
      // next input word
      int pos = len - 1;
      while (pos >= 0 && ++x[pos] == spec.q) x[pos--] = 0;
      if (pos < 0) break;
    }
    for (const auto& [full, local] : keys)
      if (full_range[full] != window_range[local]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

std::string to_dot(const StateGraph& graph) {
  std::ostringstream os;
  const ChannelKind kind = graph.spec().kind;
  os << "digraph channel {\n";
  os << "  label=\"" << graph.spec().to_string() << "\";\n";
  for (StateIndex s = 0; s < graph.size(); ++s)
    os << "  s" << s << " [label=\"" << window_word(graph.state(s), kind) << "\"];\n";
  for (const Edge& e : graph.edges()) {
    os << "  s" << e.from << " -> s" << e.to << " [label=\"" << static_cast<int>(e.label) << '"';
    if (e.label != 0) os << ", color=red";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

nlohmann::json to_json(const StateGraph& graph) {
  nlohmann::json j;
  j["kind"] = to_string(graph.spec().kind);
  j["n"] = graph.spec().n;
  j["d"] = graph.spec().d;
  j["q"] = graph.spec().q;
  auto& states = j["states"] = nlohmann::json::array();
  for (const ChannelState& s : graph.states()) states.push_back(window_word(s, graph.spec().kind));
  auto& edges = j["edges"] = nlohmann::json::array();
  for (const Edge& e : graph.edges())
    edges.push_back({{"from", e.from}, {"to", e.to}, {"label", static_cast<int>(e.label)}});
  return j;
}

}  // namespace swchan
