#include "swchan/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace swchan {

namespace {

double log_q(double x, int q) { return std::log(x) / std::log(static_cast<double>(q)); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_long(long double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17Lg", v);
  return buf;
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("plant: value '" + text + "' for '" + key + "' is not a number");
  }
}

}  // namespace

void PlantSpec::validate() const {
  if (eigenvalues.empty()) throw ConfigError("plant: at least one eigenvalue is required");
  for (double lam : eigenvalues) {
    if (!std::isfinite(lam)) throw ConfigError("plant: eigenvalues must be finite");
    if (std::abs(std::abs(lam) - 1.0) < 1e-12)
      throw ConfigError("plant: mode with |lambda| = 1 is not supported (neither stable nor strictly unstable)");
  }
  if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("plant: initial radius l must be positive");
  if (!(v_max >= 0.0) || !(w_max >= 0.0)) throw ConfigError("plant: noise bounds must be non-negative");
}

bool PlantSpec::unstable() const {
  return std::any_of(eigenvalues.begin(), eigenvalues.end(), [](double lam) { return std::abs(lam) > 1.0; });
}

double PlantSpec::h_lin(int q) const {
  double h = 0.0;
  for (double lam : eigenvalues)
    if (std::abs(lam) >= 1.0) h += log_q(std::abs(lam), q);
  return h;
}

PlantSpec PlantSpec::parse(const std::string& text) {
  PlantSpec p;
  bool have_a = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("plant: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "a") {
      std::stringstream modes(value);
      std::string mode;
      while (std::getline(modes, mode, ':')) p.eigenvalues.push_back(parse_number(key, mode));
      have_a = true;
    } else if (key == "l") {
      p.l = parse_number(key, value);
    } else if (key == "vmax") {
      p.v_max = parse_number(key, value);
    } else if (key == "wmax") {
      p.w_max = parse_number(key, value);
    } else {
      throw ConfigError("plant: unknown key '" + key + "'");
    }
  }
  if (!have_a) throw ConfigError("plant: missing a=<eigenvalue>");
  p.validate();
  return p;
}

PlantSpec PlantSpec::from_matrix(const std::vector<std::vector<double>>& a, double l, double v_max, double w_max) {
  PlantSpec p;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != a.size()) throw ConfigError("plant: matrix must be square");
    for (std::size_t j = 0; j < a.size(); ++j)
      if (i != j && a[i][j] != 0.0) throw ConfigError("plant: only diagonal dynamics are supported");
    p.eigenvalues.push_back(a[i][i]);
  }
  p.l = l;
  p.v_max = v_max;
  p.w_max = w_max;
  p.validate();
  return p;
}

std::string PlantSpec::to_string() const {
  std::string a;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) a += (i ? ":" : "") + format_double(eigenvalues[i]);
  return "a=" + a + ",l=" + format_double(l) + ",vmax=" + format_double(v_max) + ",wmax=" + format_double(w_max);
}

void to_json(nlohmann::json& j, const PlantSpec& p) {
  j = nlohmann::json{{"eigenvalues", p.eigenvalues}, {"l", p.l}, {"v_max", p.v_max}, {"w_max", p.w_max}};
}

void from_json(const nlohmann::json& j, PlantSpec& p) {
  p.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  p.l = j.value("l", 1.0);
  p.v_max = j.value("v_max", 0.0);
  p.w_max = j.value("w_max", 0.0);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::AchievableBySufficientCondition: return "achievable_by_sufficient_condition";
    case Verdict::InfeasibleByNecessaryCondition: return "infeasible_by_necessary_condition";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

FeasibilityVerdict classify_feasibility(const PlantSpec& plant, const ChannelSpec& spec,
                                        const SpectralResult& spectral, double tie_tolerance) {
  plant.validate();
  spec.validate();
  FeasibilityVerdict v;
  v.h_lin = plant.h_lin(spec.q);
  v.h_ch = spectral.h_ch;
  const double ratio = static_cast<double>(spec.d) / spec.n;
  if (spec.kind == ChannelKind::NSE) {
    v.sufficient_threshold = 1.0 - ratio - v.h_ch;
    v.necessary_threshold = 1.0 - ratio;
  } else {
    v.sufficient_threshold = 1.0 - 2.0 * v.h_ch;
    v.necessary_threshold = closed_form_c0f(spec).value;
  }
  const bool achievable = v.h_lin < v.sufficient_threshold - tie_tolerance;
  const bool infeasible = v.h_lin > v.necessary_threshold + tie_tolerance;
  if (achievable && !infeasible)
    v.verdict = Verdict::AchievableBySufficientCondition;
  else if (infeasible && !achievable)
    v.verdict = Verdict::InfeasibleByNecessaryCondition;
  v.tight = std::abs(v.sufficient_threshold - v.necessary_threshold) <= tie_tolerance;
  return v;
}

nlohmann::json to_json(const FeasibilityVerdict& v) {
  return nlohmann::json{{"verdict", to_string(v.verdict)},
                        {"h_lin", v.h_lin},
                        {"h_ch", v.h_ch},
                        {"sufficient_threshold", v.sufficient_threshold},
                        {"necessary_threshold", v.necessary_threshold},
                        {"tight", v.tight},
                        {"float_tolerance", 1e-12}};
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Extremal: return "extremal";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Zero: return "zero";
  }
  return "zero";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "extremal") return NoiseKind::Extremal;
  if (text == "uniform") return NoiseKind::Uniform;
  if (text == "zero") return NoiseKind::Zero;
  throw ConfigError("unknown noise model '" + text + "' (expected extremal, uniform or zero)");
}

namespace {

std::vector<std::size_t> allocate_cells(const PlantSpec& plant, std::size_t tau, std::size_t budget) {
  const std::size_t modes = plant.eigenvalues.size();
  std::vector<std::size_t> cells(modes, 1);
  std::vector<double> growth(modes);
  for (std::size_t i = 0; i < modes; ++i) growth[i] = std::pow(std::abs(plant.eigenvalues[i]), static_cast<double>(tau));
  for (;;) {
    std::size_t product = 1;
    for (std::size_t c : cells) product *= c;
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < modes; ++i) {
      if (product / cells[i] * (cells[i] + 1) > budget) continue;
      if (!pick || growth[i] / cells[i] > growth[*pick] / cells[*pick]) pick = i;
    }
    if (!pick) break;
    ++cells[*pick];
  }
  return cells;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double center() const { return 0.5 * (lo + hi); }
};

Interval propagate(Interval box, double a, double v_max) {
  const double p = a * box.lo;
  const double r = a * box.hi;
  return {std::min(p, r) - v_max, std::max(p, r) + v_max};
}

// Cell j of m equal cells covering the measurement range of `box`.
Interval cell_bounds(const Interval& box, std::size_t m, std::size_t j, double w_max) {
  const double lo = box.lo - w_max;
  const double hi = box.hi + w_max;
  const double width = (hi - lo) / static_cast<double>(m);
  return {j == 0 ? lo : lo + width * static_cast<double>(j), j + 1 == m ? hi : lo + width * static_cast<double>(j + 1)};
}

bool contains(const Interval& box, double x) {
  const double slack = 1e-9 * (1.0 + std::abs(box.lo) + std::abs(box.hi));
  return x >= box.lo - slack && x <= box.hi + slack;
}

class NoiseSource {
 public:
  NoiseSource(NoiseModel model) : model_(model), engine_(model.seed) {}

  // Extremal noise pushes the state away from the estimator's center.
  double draw(double bound, double x, double center) {
    switch (model_.kind) {
      case NoiseKind::Zero: return 0.0;
      case NoiseKind::Uniform: return std::uniform_real_distribution<double>(-bound, bound)(engine_);
      case NoiseKind::Extremal: return x >= center ? bound : -bound;
    }
    return 0.0;
  }

 private:
  NoiseModel model_;
  std::mt19937_64 engine_;
};

}  // namespace

double block_contraction(const PlantSpec& plant, const Codebook& codebook) {
  const auto tau = static_cast<std::size_t>(codebook.t);
  const auto cells = allocate_cells(plant, tau, codebook.size());
  double rho = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i)
    rho = std::max(rho, std::pow(std::abs(plant.eigenvalues[i]), static_cast<double>(tau)) / cells[i]);
  return rho;
}

EstimationTrace run_estimation(const PlantSpec& plant, const ChannelSpec& spec, const Codebook& codebook,
                               AdversaryPolicy& adversary, std::uint64_t horizon, const EstimationOptions& options) {
  plant.validate();
  spec.validate();
  if (!(codebook.spec == spec)) throw ConfigError("codebook was built for " + codebook.spec.to_string());
  if (codebook.size() < 1 || codebook.t < 1) throw ConfigError("codebook is empty");
  if (!codebook.verified && !verify_zero_error(codebook)) throw ConfigError("codebook is not zero-error");

  const auto tau = static_cast<std::size_t>(codebook.t);
  const std::size_t modes = plant.eigenvalues.size();
  const Decoder decoder(codebook);
  const WordCodec codec(spec.q, codebook.t);

  EstimationTrace trace;
  trace.block_length = tau;
  trace.cells = codebook.size();
  trace.cells_per_mode = allocate_cells(plant, tau, codebook.size());
  trace.contraction = block_contraction(plant, codebook);

  NoiseSource process(options.noise);
  NoiseModel meas_model = options.noise;
  meas_model.seed ^= 0x9e3779b97f4a7c15ULL;
  NoiseSource measurement(meas_model);

  // Everything is tracked relative to a reference trajectory c(t) = A^t c(0),
  // re-anchored at the box midpoint every block. The plant state itself may
  // diverge (there is no control), but e = x - c and the box offsets stay at
  // the scale of the estimation error, so the arithmetic stays exact enough.
  std::vector<long double> ref(modes, 0.0L);
  std::vector<double> e(modes);
  std::mt19937_64 init_engine(options.initial_seed);
  for (std::size_t i = 0; i < modes; ++i) {
    switch (options.initial) {
      case InitialPlacement::Edge: e[i] = plant.l; break;
      case InitialPlacement::Center: e[i] = 0.0; break;
      case InitialPlacement::Uniform:
        e[i] = std::uniform_real_distribution<double>(-plant.l, plant.l)(init_engine);
        break;
    }
  }

  std::vector<Interval> box(modes, Interval{-plant.l, plant.l});
  std::vector<Interval> snapshot = box;  // box for x at the start of the block
  std::vector<int> received;
  std::size_t message = 0;
  ChannelRuntime channel(spec);

  auto error_now = [&] {
    double err = 0.0;
    for (std::size_t i = 0; i < modes; ++i) err = std::max(err, std::abs(e[i] - box[i].center()));
    return err;
  };
  auto all_contained = [&] {
    for (std::size_t i = 0; i < modes; ++i)
      if (!contains(box[i], e[i])) return false;
    return true;
  };

  for (std::uint64_t t = 0; t < horizon; ++t) {
    const std::size_t phase = static_cast<std::size_t>(t % tau);
    if (phase == 0) {
      message = 0;
      std::size_t place = 1;
      for (std::size_t i = 0; i < modes; ++i) {
        const double shift = box[i].center();
        ref[i] += static_cast<long double>(shift);
        e[i] -= shift;
        box[i] = {box[i].lo - shift, box[i].hi - shift};
        // Encoder: quantize the measurement inside the known box.
        const double y = e[i] + measurement.draw(plant.w_max, e[i], 0.0);
        const auto m = trace.cells_per_mode[i];
        const double lo = box[i].lo - plant.w_max;
        const double width = (box[i].hi + plant.w_max - lo) / static_cast<double>(m);
        const double slot = width > 0.0 ? std::floor((y - lo) / width) : 0.0;
        const auto j = static_cast<std::size_t>(std::clamp(slot, 0.0, static_cast<double>(m - 1)));
        message += j * place;
        place *= m;
      }
      snapshot = box;
      received.clear();
    }

    const Word codeword = codebook.codewords[message];
    const int symbol = codec.digit(codeword, static_cast<int>(phase));
    received.push_back(channel.step(symbol, adversary));

    const double err = error_now();
    const bool ok = all_contained();
    trace.sound = trace.sound && ok;
    trace.errors.push_back(err);
    trace.sup_error = std::max(trace.sup_error, err);
    if (options.keep_steps) {
      EstimationStep rec;
      rec.t = t;
      for (std::size_t i = 0; i < modes; ++i) {
        rec.x.push_back(ref[i] + e[i]);
        rec.xhat.push_back(ref[i] + box[i].center());
        rec.lo.push_back(ref[i] + box[i].lo);
        rec.hi.push_back(ref[i] + box[i].hi);
        rec.e.push_back(e[i] - box[i].center());
      }
      rec.err = err;
      rec.event = channel.last_event();
      rec.contained = ok;
      trace.steps.push_back(std::move(rec));
    }

    for (std::size_t i = 0; i < modes; ++i) {
      const double a = plant.eigenvalues[i];
      ref[i] *= static_cast<long double>(a);
      e[i] = a * e[i] + process.draw(plant.v_max, e[i], box[i].center());
      box[i] = propagate(box[i], a, plant.v_max);
    }

    if (phase + 1 == tau) {
      const auto decoded = decoder.decode(received);
      if (!decoded || *decoded != message)
        throw AnalysisError("decoder failed at time " + std::to_string(t) + "; codebook is not zero-error here");
      std::size_t rest = *decoded;
      for (std::size_t i = 0; i < modes; ++i) {
        const auto m = trace.cells_per_mode[i];
        const std::size_t j = rest % m;
        rest /= m;
        const Interval cell = cell_bounds(snapshot[i], m, j, plant.w_max);
        Interval refined{std::max(snapshot[i].lo, cell.lo - plant.w_max), std::min(snapshot[i].hi, cell.hi + plant.w_max)};
        for (std::size_t s = 0; s < tau; ++s) refined = propagate(refined, plant.eigenvalues[i], plant.v_max);
        box[i] = refined;
      }
    }
  }

  const double err = error_now();
  trace.sound = trace.sound && all_contained();
  trace.errors.push_back(err);
  trace.sup_error = std::max(trace.sup_error, err);
  trace.overrides = channel.overrides();
  return trace;
}

NecessityCertificate necessity_certificate(const PlantSpec& plant, int q, double rate, std::uint64_t t, double l) {
  plant.validate();
  if (plant.eigenvalues.size() != 1) throw ConfigError("necessity_certificate: scalar plant required");
  if (q < 2) throw ConfigError("necessity_certificate: q must be at least 2");
  if (rate < 0.0) throw ConfigError("necessity_certificate: rate must be non-negative");
  const double a = std::abs(plant.eigenvalues[0]);
  NecessityCertificate c;
  c.exponent = log_q(a, q) - rate;
  c.log_bound = std::log(l) + static_cast<double>(t) * c.exponent * std::log(static_cast<double>(q));
  c.bound = std::exp(c.log_bound);
  c.diverges = c.exponent > 0.0;
  return c;
}

ErrorEnvelope adversarial_error_growth(const PlantSpec& plant, const ChannelSpec& spec, const Codebook& codebook,
                                       std::uint64_t horizon, const EstimationOptions& options) {
  plant.validate();
  Codebook checked = codebook;
  if (!checked.verified) {
    if (!verify_zero_error(checked)) throw ConfigError("codebook is not zero-error");
    checked.verified = true;
  }
  const int tau = checked.t;
  auto make = [tau](int which) {
    switch (which) {
      case 0: return AdversaryPolicy::greedy();
      case 1: return AdversaryPolicy::random_admissible(1);
      case 2: return AdversaryPolicy::random_admissible(2);
      case 3: return AdversaryPolicy::random_admissible(3);
      default: return AdversaryPolicy::block_targeted(tau, 1);
    }
  };
  constexpr int kSuite = 5;

  EstimationOptions quiet = options;
  quiet.keep_steps = false;
  std::vector<std::vector<double>> runs(kSuite);
  std::vector<char> sound(kSuite, 1);
  ErrorEnvelope out;
  for (int k = 0; k < kSuite; ++k) out.adversaries.push_back(make(k).description());

#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < kSuite; ++k) {
    auto adv = make(k);
    auto trace = run_estimation(plant, spec, checked, adv, horizon, quiet);
    runs[k] = std::move(trace.errors);
    sound[k] = trace.sound ? 1 : 0;
  }

  out.envelope.assign(horizon + 1, 0.0);
  for (int k = 0; k < kSuite; ++k) {
    out.sound = out.sound && sound[k];
    for (std::size_t t = 0; t <= horizon; ++t) out.envelope[t] = std::max(out.envelope[t], runs[k][t]);
  }
  for (std::size_t t = 0; t <= horizon; t += static_cast<std::size_t>(tau)) {
    out.block_envelope.push_back(out.envelope[t]);
    if (out.block_envelope.size() > 1) {
      const double prev = out.block_envelope[out.block_envelope.size() - 2];
      out.block_growth.push_back(prev > 0.0 ? out.envelope[t] / prev : 0.0);
    }
  }
  return out;
}

std::string trace_csv(const EstimationTrace& trace) {
  auto join = [](const std::vector<long double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_long(v[i]);
    return s;
  };
  std::string out = "t,x,xhat,err,interval_lo,interval_hi,channel_event\n";
  for (const EstimationStep& s : trace.steps) {
    std::string event;
    if (s.event.overridden)
      event = s.event.error == 0 ? "clear/overridden" : "error/overridden";
    else if (s.event.error == 0)
      event = "clear";
    else
      event = s.event.output == kErased ? "erasure" : "error+" + std::to_string(s.event.error);
    out += std::to_string(s.t) + "," + join(s.x) + "," + join(s.xhat) + "," + format_double(s.err) + "," +
           join(s.lo) + "," + join(s.hi) + "," + event + "\n";
  }
  return out;
}

nlohmann::json to_json(const EstimationTrace& trace) {
  return nlohmann::json{{"block_length", trace.block_length},
                        {"cells", trace.cells},
                        {"cells_per_mode", trace.cells_per_mode},
                        {"contraction", trace.contraction},
                        {"steps", trace.errors.empty() ? 0 : trace.errors.size() - 1},
                        {"sup_error", trace.sup_error},
                        {"final_error", trace.errors.empty() ? 0.0 : trace.errors.back()},
                        {"sound", trace.sound},
                        {"overrides", trace.overrides}};
}

nlohmann::json to_json(const NecessityCertificate& c) {
  return nlohmann::json{
      {"bound", c.bound}, {"log_bound", c.log_bound}, {"exponent", c.exponent}, {"diverges", c.diverges}};
}

}  // namespace swchan
