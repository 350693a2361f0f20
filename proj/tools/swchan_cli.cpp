#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "swchan/capacity.hpp"
#include "swchan/config.hpp"
#include "swchan/entropy.hpp"
#include "swchan/errors.hpp"

using namespace swchan;

namespace {

enum Exit { kOk = 0, kConfig = 2, kAnalysis = 3, kResource = 4 };

struct Flags {
  std::string config_path;
  std::string channel;
  std::string kind = "nse";
  int n = 3;
  int d = 1;
  int q = 2;
  std::string format = "json";
  std::string out;
  std::string out_dir;
  int k_max = 0;
  int horizon = 12;
  int oracle_t = 0;
  int bounds_t_max = 6;
  int maximin = -1;
  std::string plant;
  std::string code;
  std::string adversary = "greedy";
  std::uint64_t steps = 3000;
  std::string noise = "extremal";
  std::uint64_t seed = 1;
  std::string trace;
  std::string codes_out;
  std::vector<std::string> analyses;
  bool no_timings = false;
};

ExperimentConfig build_config(const Flags& f, const std::string& command) {
  nlohmann::json j;
  if (!f.channel.empty())
    j["channel"] = f.channel;
  else
    j["channel"] = {{"kind", f.kind}, {"n", f.n}, {"d", f.d}, {"q", f.q}};
  if (command == "report")
    j["analyses"] = f.analyses.empty() ? std::vector<std::string>{"states", "entropy", "capacity", "count", "bounds",
                                                                  "oracle"}
                                       : f.analyses;
  else
    j["analyses"] = std::vector<std::string>{command};
  if (command == "report" && f.analyses.empty() && !f.plant.empty()) {
    j["analyses"].push_back("classify");
    j["analyses"].push_back("simulate");
  }
  j["k_max"] = f.k_max;
  j["count_horizon"] = f.horizon;
  j["oracle_t"] = f.oracle_t;
  j["bounds_t_max"] = f.bounds_t_max;
  j["maximin_t_max"] = f.maximin;
  if (!f.plant.empty()) j["plant"] = f.plant;
  j["code_path"] = f.code;
  j["adversary"] = f.adversary;
  j["steps"] = f.steps;
  j["noise"] = f.noise;
  j["seed"] = f.seed;
  j["trace_path"] = f.trace;
  j["codes_out"] = f.codes_out;
  j["out_dir"] = f.out_dir;
  j["format"] = f.format;

  // Values from a configuration file take precedence over flags.
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ConfigError("cannot open configuration file " + f.config_path);
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("configuration file " + f.config_path + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw ConfigError("configuration file must hold a JSON object");
    if (command != "report") file.erase("analyses");
    j.update(file);
  }
  ResourceCaps caps;
  if (j.contains("caps")) caps = j["caps"].get<ResourceCaps>();
  caps.apply_environment();
  j["caps"] = caps;
  return config_from_json(j);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string render_csv(const std::string& command, const ExperimentConfig& c, const nlohmann::json& r) {
  std::ostringstream os;
  if (command == "states") {
    os << "from,to,label,from_word,to_word\n";
    const auto& words = r.at("states");
    for (const auto& e : r.at("edges")) {
      const auto from = e.at("from").get<std::size_t>();
      const auto to = e.at("to").get<std::size_t>();
      os << from << ',' << to << ',' << e.at("label").get<int>() << ',' << words[from].get<std::string>() << ','
         << words[to].get<std::string>() << '\n';
    }
  } else if (command == "capacity") {
    const GainGraph g(enumerate_states(c.channel, c.caps.max_states));
    const DPTrajectory traj = dp_capacity(g, c.k_max ? c.k_max : static_cast<int>(10 * g.size()));
    os << "k,min_w,rate_estimate,argmin_state\n";
    for (int k = 1; k <= traj.k_max; ++k)
      os << k << ',' << traj.w[k][traj.argmin_state[k]] << ',' << traj.rate_estimates[k] << ','
         << traj.argmin_state[k] << '\n';
  } else if (command == "entropy") {
    const StateGraph g = enumerate_states(c.channel, c.caps.max_states);
    os << "state,word,out_degree,eigenvector\n";
    const auto& v = r.at("eigenvector");
    for (StateIndex s = 0; s < g.size(); ++s)
      os << s << ',' << window_word(g.state(s), c.channel.kind) << ',' << g.out_degree(s) << ',' << v[s].get<double>()
         << '\n';
  } else if (command == "count") {
    const StateGraph g = enumerate_states(c.channel, c.caps.max_states);
    os << "state,word,N,count\n";
    const auto& counts = r.at("counts_by_state");
    for (StateIndex s = 0; s < g.size(); ++s)
      os << s << ',' << window_word(g.state(s), c.channel.kind) << ',' << r.at("N").get<int>() << ','
         << counts[s].get<std::string>() << '\n';
  } else if (command == "bounds") {
    os << "t,size,rate,exact\n";
    for (const auto& row : r.at("oracle_rates"))
      os << row.at("t").get<int>() << ',' << row.at("size").get<std::size_t>() << ',' << row.at("rate").get<double>()
         << ',' << (row.at("exact").get<bool>() ? "true" : "false") << '\n';
  } else if (command == "oracle") {
    os << "index,codeword\n";
    std::size_t i = 0;
    for (const auto& w : r.at("codebook").at("codewords")) os << i++ << ',' << w.get<std::string>() << '\n';
  } else if (command == "simulate") {
    os << r.at("trace_csv").get<std::string>();
  } else {
    os << "key,value\n";
    for (const auto& [key, value] : r.items())
      os << key << ',' << csv_escape(value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  return os.str();
}

std::string render(const std::string& command, const ExperimentConfig& c, const Report& report, bool timings) {
  if (command == "report") {
    if (c.format != "json") throw ConfigError("report supports --format json only");
    return report.to_json(timings).dump(2) + "\n";
  }
  nlohmann::json result = report.results.at(command);
  if (c.format == "dot") {
    if (command != "states") throw ConfigError("--format dot applies to the states subcommand only");
    return to_dot(enumerate_states(c.channel, c.caps.max_states));
  }
  if (c.format == "csv") return render_csv(command, c, result);
  result.erase("trace_csv");
  return result.dump(2) + "\n";
}

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << "swchan: " << kind << ": " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-window channel analysis: states, capacity, entropy, zero-error codes and estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Flags f;
  auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config_path, "JSON configuration file; its values override flags");
    sub->add_option("--channel", f.channel, "Channel as kind:n,d,q (e.g. nse:3,1,2)");
    sub->add_option("--kind", f.kind, "Channel kind: nse or nss");
    sub->add_option("--n", f.n, "Window length");
    sub->add_option("--d", f.d, "Errors allowed per window");
    sub->add_option("--q", f.q, "Alphabet size");
    sub->add_option("--format", f.format, "Output format: json, csv or dot");
    sub->add_option("--out", f.out, "Write the result here instead of stdout");
    sub->add_option("--out-dir", f.out_dir, "Directory for per-analysis artifacts");
  };

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"states", "Enumerate channel states and transitions"},
      {"capacity", "Zero-error feedback capacity (DP and minimum mean cycle)"},
      {"entropy", "Perron-Frobenius eigenvalue, topological entropy and lower bound"},
      {"count", "Exact output-sequence counts"},
      {"bounds", "Lower bound, feedback capacity and best oracle rates side by side"},
      {"oracle", "Maximum zero-error codebook for a block length"},
      {"classify", "Feasibility verdict for state estimation"},
      {"simulate", "Run the coder-estimator against an adversary"},
      {"report", "Run several analyses and emit one report"},
  };
  std::map<std::string, CLI::App*> by_name;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    common(sub);
    by_name[s.name] = sub;
  }
  by_name["capacity"]->add_option("--k-max", f.k_max, "DP iterations (default 10 |S|)");
  by_name["count"]->add_option("--N,--horizon", f.horizon, "Sequence length");
  by_name["bounds"]->add_option("--t-max", f.bounds_t_max, "Largest oracle block length");
  by_name["oracle"]->add_option("--t", f.oracle_t, "Block length (default n)");
  by_name["oracle"]->add_option("--maximin", f.maximin, "Also tabulate maximin information up to this t");
  by_name["oracle"]->add_option("--codes-out", f.codes_out, "Write the codebook JSON here");
  by_name["classify"]->add_option("--plant", f.plant, "Plant as a=1.2,l=1,vmax=0.01,wmax=0")->required();
  CLI::App* sim = by_name["simulate"];
  sim->add_option("--plant", f.plant, "Plant as a=1.2,l=1,vmax=0.01,wmax=0")->required();
  sim->add_option("--code", f.code, "Codebook JSON (default: best code of block length n)");
  sim->add_option("--adversary", f.adversary, "greedy, none, random:<seed> or block:<len>[,<burst>]");
  sim->add_option("--steps", f.steps, "Horizon");
  sim->add_option("--noise", f.noise, "extremal, uniform or zero");
  sim->add_option("--seed", f.seed, "Noise seed");
  sim->add_option("--trace", f.trace, "Write the trace CSV here");
  CLI::App* rep = by_name["report"];
  rep->add_option("--analyses", f.analyses, "Subset of analyses to run")->delimiter(',');
  rep->add_option("--plant", f.plant, "Plant for classify/simulate");
  rep->add_option("--t", f.oracle_t, "Oracle block length");
  rep->add_option("--maximin", f.maximin, "Maximin rows up to this t");
  rep->add_flag("--no-timings", f.no_timings, "Omit wall-clock timings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  std::string command;
  for (const auto& [name, sub] : by_name)
    if (sub->parsed()) command = name;

  try {
    const ExperimentConfig config = build_config(f, command);
    const Report report = run(config);
    const std::string text = render(command, config, report, !f.no_timings);
    if (f.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(f.out);
      if (!out) throw ConfigError("cannot write " + f.out);
      out << text;
    }
  } catch (const ConfigError& e) {
    return fail(kConfig, "config error", e.what());
  } catch (const ResourceCapError& e) {
    return fail(kResource, "resource cap", e.what());
  } catch (const AnalysisError& e) {
    return fail(kAnalysis, "analysis error", e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kConfig, "config error", e.what());
  }
  return kOk;
}
