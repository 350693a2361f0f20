#include "swchan/config.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swchan/capacity.hpp"
#include "swchan/entropy.hpp"
#include "swchan/oracle.hpp"

namespace swchan {

namespace {

std::uint64_t parse_cap(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size() || v == 0) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cap '" + key + "' needs a positive integer, got '" + value + "'");
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<std::string> ResourceCaps::violations() const {
  std::vector<std::string> out;
  if (max_states == 0) out.push_back("max_states must be positive");
  if (max_vertices == 0) out.push_back("max_vertices must be positive");
  if (max_work == 0) out.push_back("max_work must be positive");
  if (max_inputs == 0) out.push_back("max_inputs must be positive");
  if (max_steps == 0) out.push_back("max_steps must be positive");
  if (!(oracle_seconds > 0.0)) out.push_back("oracle_seconds must be positive");
  return out;
}

void ResourceCaps::apply_overrides(const std::string& text) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("cap override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "max_states")
      max_states = parse_cap(key, value);
    else if (key == "max_vertices")
      max_vertices = parse_cap(key, value);
    else if (key == "max_work")
      max_work = parse_cap(key, value);
    else if (key == "max_inputs")
      max_inputs = parse_cap(key, value);
    else if (key == "max_steps")
      max_steps = parse_cap(key, value);
    else if (key == "oracle_seconds") {
      try {
        oracle_seconds = std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError("cap 'oracle_seconds' needs a number, got '" + value + "'");
      }
      if (!(oracle_seconds > 0.0)) throw ConfigError("cap 'oracle_seconds' must be positive");
    } else
      throw ConfigError("unknown cap '" + key + "'");
  }
}

void ResourceCaps::apply_environment() {
  if (const char* env = std::getenv(kCapsEnvVar)) apply_overrides(env);
}

void to_json(nlohmann::json& j, const ResourceCaps& c) {
  j = nlohmann::json{{"max_states", c.max_states}, {"max_vertices", c.max_vertices}, {"max_work", c.max_work},
                     {"max_inputs", c.max_inputs}, {"max_steps", c.max_steps},     {"oracle_seconds", c.oracle_seconds}};
}

void from_json(const nlohmann::json& j, ResourceCaps& c) {
  c.max_states = j.value("max_states", c.max_states);
  c.max_vertices = j.value("max_vertices", c.max_vertices);
  c.max_work = j.value("max_work", c.max_work);
  c.max_inputs = j.value("max_inputs", c.max_inputs);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.oracle_seconds = j.value("oracle_seconds", c.oracle_seconds);
}

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  try {
    channel.validate();
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  for (const std::string& a : analyses)
    if (std::find(kAnalyses.begin(), kAnalyses.end(), a) == kAnalyses.end())
      problems.push_back("unknown analysis '" + a + "'");
  if (k_max < 0) problems.push_back("k_max must be non-negative");
  if (count_horizon < 0) problems.push_back("count_horizon must be non-negative");
  if (oracle_t < 0) problems.push_back("oracle_t must be non-negative");
  if (bounds_t_max < 1) problems.push_back("bounds_t_max must be at least 1");
  if (maximin_t_max < -1) problems.push_back("maximin_t_max must be -1 or more");
  const bool needs_plant = std::find(analyses.begin(), analyses.end(), "classify") != analyses.end() ||
                           std::find(analyses.begin(), analyses.end(), "simulate") != analyses.end();
  if (needs_plant && !plant) problems.push_back("classify and simulate need a plant");
  if (plant) {
    try {
      plant->validate();
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  try {
    if (channel.q >= 2) parse_adversary(adversary, channel);
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  try {
    parse_noise_kind(noise);
  } catch (const ConfigError& e) {
    problems.push_back(e.what());
  }
  if (format != "json" && format != "csv" && format != "dot") problems.push_back("format must be json, csv or dot");
  for (const std::string& v : caps.violations()) problems.push_back(v);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) problems.push_back("output directory '" + out_dir + "' is not writable");
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"channel", c.channel},
                     {"analyses", c.analyses},
                     {"k_max", c.k_max},
                     {"count_horizon", c.count_horizon},
                     {"oracle_t", c.oracle_t},
                     {"bounds_t_max", c.bounds_t_max},
                     {"maximin_t_max", c.maximin_t_max},
                     {"plant", c.plant ? nlohmann::json(*c.plant) : nlohmann::json(nullptr)},
                     {"code_path", c.code_path},
                     {"adversary", c.adversary},
                     {"steps", c.steps},
                     {"noise", c.noise},
                     {"seed", c.seed},
                     {"trace_path", c.trace_path},
                     {"codes_out", c.codes_out},
                     {"out_dir", c.out_dir},
                     {"format", c.format},
                     {"caps", c.caps}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {
      "channel", "analyses", "k_max", "count_horizon", "oracle_t", "bounds_t_max", "maximin_t_max", "plant",
      "code_path", "adversary", "steps", "noise", "seed", "trace_path", "codes_out", "out_dir", "format", "caps"};
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  std::vector<std::string> problems;
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) problems.push_back("unknown key '" + key + "'");
  if (!j.contains("channel")) problems.push_back("missing 'channel'");

  ExperimentConfig c;
  auto field = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(std::string("bad value for '") + key + "': " + e.what());
    }
  };
  try {
    if (j.contains("channel")) {
      const auto& ch = j.at("channel");
      c.channel = ch.is_string() ? ChannelSpec::parse(ch.get<std::string>()) : ch.get<ChannelSpec>();
      c.channel.validate();
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("bad channel: ") + e.what());
  }
  field("analyses", c.analyses);
  field("k_max", c.k_max);
  field("count_horizon", c.count_horizon);
  field("oracle_t", c.oracle_t);
  field("bounds_t_max", c.bounds_t_max);
  field("maximin_t_max", c.maximin_t_max);
  if (j.contains("plant") && !j.at("plant").is_null()) {
    try {
      const auto& p = j.at("plant");
      c.plant = p.is_string() ? PlantSpec::parse(p.get<std::string>()) : p.get<PlantSpec>();
    } catch (const std::exception& e) {
      problems.push_back(std::string("bad plant: ") + e.what());
    }
  }
  field("code_path", c.code_path);
  field("adversary", c.adversary);
  field("steps", c.steps);
  field("noise", c.noise);
  field("seed", c.seed);
  field("trace_path", c.trace_path);
  field("codes_out", c.codes_out);
  field("out_dir", c.out_dir);
  field("format", c.format);
  field("caps", c.caps);
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const std::string& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("configuration file " + path + " is not valid JSON: " + e.what());
  }
}

AdversaryPolicy parse_adversary(const std::string& text, const ChannelSpec& spec) {
  (void)spec;
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (name == "greedy" && arg.empty()) return AdversaryPolicy::greedy();
    if (name == "none" && arg.empty()) return AdversaryPolicy::scripted({});
    if (name == "random") return AdversaryPolicy::random_admissible(arg.empty() ? 1 : std::stoull(arg));
    if (name == "block") {
      const auto comma = arg.find(',');
      const int block = std::stoi(arg.substr(0, comma));
      const int burst = comma == std::string::npos ? 1 : std::stoi(arg.substr(comma + 1));
      return AdversaryPolicy::block_targeted(block, burst);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
  }
  throw ConfigError("unknown adversary '" + text + "' (expected greedy, none, random:<seed> or block:<len>[,<burst>])");
}

nlohmann::json Report::to_json(bool include_timings) const {
  nlohmann::json j{{"config", config}, {"results", results}, {"version", version_string()}};
  if (include_timings) j["timings_ms"] = timings_ms;
  return j;
}

std::string version_string() { return "swchan 1.0.0"; }

namespace {

SearchOptions search_options(const ExperimentConfig& c) {
  SearchOptions o;
  o.time_budget_seconds = c.caps.oracle_seconds;
  o.max_vertices = c.caps.max_vertices;
  return o;
}

Codebook solve_oracle(const ExperimentConfig& c, int t) {
  Codebook cb = best_codebook(c.channel, t, search_options(c));
  cb.verified = verify_zero_error(cb, c.caps.max_work);
  if (!cb.verified) throw AnalysisError("oracle codebook failed zero-error verification");
  return cb;
}

Codebook simulation_codebook(const ExperimentConfig& c, const Report& report) {
  if (!c.code_path.empty()) {
    std::ifstream in(c.code_path);
    if (!in) throw ConfigError("cannot open codebook file " + c.code_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("codebook file " + c.code_path + " is not valid JSON");
    }
    Codebook cb = codebook_from_json(j);
    cb.verified = verify_zero_error(cb, c.caps.max_work);
    if (!cb.verified) throw ConfigError("codebook in " + c.code_path + " is not zero-error for " + c.channel.to_string());
    return cb;
  }
  if (report.results.contains("oracle")) {
    Codebook cb = codebook_from_json(report.results.at("oracle").at("codebook"));
    cb.verified = true;
    return cb;
  }
  return solve_oracle(c, c.oracle_t ? c.oracle_t : c.channel.n);
}

std::filesystem::path artifact(const ExperimentConfig& c, const std::string& name) {
  return std::filesystem::path(c.out_dir) / name;
}

}  // namespace

nlohmann::json run_analysis(const std::string& name, const ExperimentConfig& c, Report& report) {
  const ChannelSpec& spec = c.channel;
  if (name == "states") {
    const StateGraph g = enumerate_states(spec, c.caps.max_states);
    nlohmann::json j = to_json(g);
    j["count"] = g.size();
    j["ball_volume"] = ball_volume(spec.n, spec.d, spec.error_alphabet());
    j["strongly_connected"] = g.strongly_connected();
    if (!c.out_dir.empty()) {
      write_file(artifact(c, "states.dot"), to_dot(g));
    }
    return j;
  }
  if (name == "entropy") {
    const StateGraph g = enumerate_states(spec, c.caps.max_states);
    const SpectralResult s = perron_frobenius(g);
    nlohmann::json j = to_json(s, c0_lower_bound(spec, s));
    j["eigenvector"] = s.eigenvector;
    return j;
  }
  if (name == "capacity") return to_json(analyze_capacity(spec, c.k_max));
  if (name == "count") {
    const StateGraph g = enumerate_states(spec, c.caps.max_states);
    const SpectralResult s = perron_frobenius(g);
    const OutputCountResult r = output_growth(g, s, c.count_horizon);
    std::vector<std::string> counts;
    for (const BigCount& v : r.counts_by_state) counts.push_back(v.str());
    return nlohmann::json{{"N", r.N},
                          {"counts_by_state", counts},
                          {"count_from_clear", counts.front()},
                          {"lambda_pf", s.lambda_pf},
                          {"beta_bound", r.beta_bound},
                          {"beta_floor", r.beta_floor}};
  }
  if (name == "bounds") {
    const StateGraph g = enumerate_states(spec, c.caps.max_states);
    const SpectralResult s = perron_frobenius(g);
    const LowerBound lb = c0_lower_bound(spec, s);
    const CapacityReport cap = analyze_capacity(spec, c.k_max);
    nlohmann::json rates = nlohmann::json::array();
    double best_rate = 0.0;
    int best_t = 0;
    for (int t = 1; t <= c.bounds_t_max; ++t) {
      long double space = 1;
      for (int i = 0; i < t; ++i) space *= spec.q;
      if (space > static_cast<long double>(c.caps.max_vertices)) break;
      const Codebook cb = best_codebook(spec, t, search_options(c));
      rates.push_back({{"t", t}, {"size", cb.size()}, {"rate", cb.rate()}, {"exact", cb.exact}});
      if (cb.rate() > best_rate) {
        best_rate = cb.rate();
        best_t = t;
      }
    }
    nlohmann::json j{{"lower_bound", lb.value},
                     {"lower_bound_display", std::max(0.0, lb.value)},
                     {"c0f", cap.c0f},
                     {"c0f_flag", to_string(cap.flag)},
                     {"oracle_rates", rates},
                     {"best_oracle_rate", best_rate},
                     {"best_oracle_t", best_t},
                     {"oracle_below_c0f", best_rate <= cap.c0f + 1e-12},
                     {"float_tolerance", 1e-12}};
    if (lb.appendix_variant) j["lower_bound_appendix_variant"] = *lb.appendix_variant;
    if (spec.kind == ChannelKind::NSE) j["degree_bound_estimate"] = degree_bound_estimate(g);
    return j;
  }
  if (name == "oracle") {
    const int t = c.oracle_t ? c.oracle_t : spec.n;
    const Codebook cb = solve_oracle(c, t);
    nlohmann::json j{{"codebook", to_json(cb)}};
    const Codebook rep = repetition_code(spec);
    j["repetition"] = {{"size", rep.size()}, {"rate", rep.rate()}, {"verified", verify_zero_error(rep, c.caps.max_work)}};
    if (c.maximin_t_max >= 0) {
      nlohmann::json rows = nlohmann::json::array();
      for (const MaximinRow& r : c0_via_maximin(spec, c.maximin_t_max, static_cast<int>(c.caps.max_inputs)))
        rows.push_back({{"t", r.t},
                        {"components", r.components},
                        {"i_star", r.i_star},
                        {"rate", r.rate},
                        {"full_range_components", r.full_range_components},
                        {"max_codebook", r.max_codebook},
                        {"agrees", r.agrees}});
      j["maximin"] = rows;
    }
    if (!c.out_dir.empty()) write_file(artifact(c, "codes.json"), to_json(cb).dump(2) + "\n");
    if (!c.codes_out.empty()) write_file(c.codes_out, to_json(cb).dump(2) + "\n");
    return j;
  }
  if (name == "classify") {
    if (!c.plant) throw ConfigError("classify needs a plant");
    const StateGraph g = enumerate_states(spec, c.caps.max_states);
    const SpectralResult s = perron_frobenius(g);
    nlohmann::json j = to_json(classify_feasibility(*c.plant, spec, s));
    j["plant"] = *c.plant;
    return j;
  }
  if (name == "simulate") {
    if (!c.plant) throw ConfigError("simulate needs a plant");
    if (c.steps > c.caps.max_steps) throw ResourceCapError("simulation horizon exceeds the max_steps cap");
    const Codebook cb = simulation_codebook(c, report);
    AdversaryPolicy adv = parse_adversary(c.adversary, spec);
    EstimationOptions opts;
    opts.noise = {parse_noise_kind(c.noise), c.seed};
    opts.keep_steps = !c.out_dir.empty() || !c.trace_path.empty() || c.format == "csv";
    const EstimationTrace trace = run_estimation(*c.plant, spec, cb, adv, c.steps, opts);
    nlohmann::json j = to_json(trace);
    j["adversary"] = adv.description();
    j["noise"] = c.noise;
    j["code_rate"] = cb.rate();
    if (c.plant->eigenvalues.size() == 1)
      j["necessity_certificate"] = to_json(necessity_certificate(*c.plant, spec.q, cb.rate(), c.steps, c.plant->l));
    if (!c.out_dir.empty()) write_file(artifact(c, "trace.csv"), trace_csv(trace));
    if (!c.trace_path.empty()) write_file(c.trace_path, trace_csv(trace));
    // Plot-ready trace for --format csv; never part of a JSON report.
    if (c.format == "csv") j["trace_csv"] = trace_csv(trace);
    return j;
  }
  throw ConfigError("unknown analysis '" + name + "'");
}

Report run(const ExperimentConfig& config) {
  config.validate();
  Report report;
  report.config = config;
  for (const std::string& name : kAnalyses) {
    if (std::find(config.analyses.begin(), config.analyses.end(), name) == config.analyses.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    try {
      report.results[name] = run_analysis(name, config, report);
      if (!config.out_dir.empty()) {
        nlohmann::json saved = report.results[name];
        saved.erase("trace_csv");
        write_file(artifact(config, name + ".json"), saved.dump(2) + "\n");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("[" + name + "] " + e.what());
    } catch (const ResourceCapError& e) {
      throw ResourceCapError("[" + name + "] " + e.what());
    } catch (const AnalysisError& e) {
      throw AnalysisError("[" + name + "] " + e.what());
    }
    report.timings_ms[name] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

}  // namespace swchan
