#include "rolf/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "format_util.hpp"

namespace rolf {

using detail::format_double;
using nlohmann::json;

RobustConfig FilterSpec::to_robust_config(Eigen::Index state_dim) const {
  RobustConfig cfg;
  cfg.weight = weight;
  cfg.stf_enabled = stf_enabled;
  cfg.stf_recursive = stf_recursive;
  cfg.rho = rho;
  if (lambda_scale != 1.0) {
    const double s = lambda_scale;
    cfg.lambda_provider = [s, state_dim](int) {
      return Eigen::MatrixXd(s * Eigen::MatrixXd::Identity(state_dim, state_dim));
    };
  }
  if (omega_scale != 1.0) {
    const double s = omega_scale;
    cfg.omega_provider = [s, state_dim](int) {
      return Eigen::MatrixXd(s * Eigen::MatrixXd::Identity(state_dim, state_dim));
    };
  }
  return cfg;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig config;
  config.scenario.seed = 20260809;

  FilterSpec kf;
  kf.name = "kf";
  kf.weight.kind = WeightKind::kConstantOne;

  FilterSpec wolf;
  wolf.name = "wolf";
  wolf.weight.kind = WeightKind::kInverseMultiquadric;

  FilterSpec rolf_spec;
  rolf_spec.name = "rolf";
  rolf_spec.weight.kind = WeightKind::kInverseMultiquadric;
  rolf_spec.stf_enabled = true;

  config.filters = {kf, wolf, rolf_spec};
  return config;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const ConfigValidationError*>(&e)) return kExitValidation;
  if (dynamic_cast<const OutputIoError*>(&e)) return kExitIo;
  return 1;
}

// ------------------------------------------------------------------
// JSON (de)serialization
// ------------------------------------------------------------------

namespace {

std::string weight_kind_name(WeightKind kind) {
  return kind == WeightKind::kConstantOne ? "constant-one" : "inverse-multiquadric";
}

WeightKind weight_kind_from_name(const std::string& name) {
  if (name == "constant-one") return WeightKind::kConstantOne;
  if (name == "inverse-multiquadric") return WeightKind::kInverseMultiquadric;
  throw ConfigValidationError("unknown weight kind '" + name +
                              "' (expected constant-one or inverse-multiquadric)");
}

json scenario_to_json(const ScenarioConfig& sc) {
  json j;
  j["dt"] = sc.dt;
  j["horizon"] = sc.horizon;
  j["pos_noise_var"] = sc.pos_noise_var;
  j["garch"] = {{"omega0", sc.garch.omega0},
                {"alpha", sc.garch.alpha},
                {"beta", sc.garch.beta},
                {"sigma0_sq", sc.garch.sigma0_sq}};
  j["mixture"] = {{"p_outlier", sc.mixture.p_outlier}, {"scale", sc.mixture.scale}};
  j["meas_noise"] = {{sc.meas_noise(0, 0), sc.meas_noise(0, 1)},
                     {sc.meas_noise(1, 0), sc.meas_noise(1, 1)}};
  j["seed"] = sc.seed;
  json imps = json::array();
  for (const auto& imp : sc.impulses) {
    imps.push_back({{"t", imp.t},
                    {"delta", {imp.delta(0), imp.delta(1), imp.delta(2), imp.delta(3)}}});
  }
  j["impulses"] = imps;
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig sc;
  sc.dt = j.value("dt", sc.dt);
  sc.horizon = j.value("horizon", sc.horizon);
  sc.pos_noise_var = j.value("pos_noise_var", sc.pos_noise_var);
  if (j.contains("garch")) {
    const json& g = j.at("garch");
    sc.garch.omega0 = g.value("omega0", sc.garch.omega0);
    sc.garch.alpha = g.value("alpha", sc.garch.alpha);
    sc.garch.beta = g.value("beta", sc.garch.beta);
    sc.garch.sigma0_sq = g.value("sigma0_sq", sc.garch.sigma0_sq);
  }
  if (j.contains("mixture")) {
    const json& m = j.at("mixture");
    sc.mixture.p_outlier = m.value("p_outlier", sc.mixture.p_outlier);
    sc.mixture.scale = m.value("scale", sc.mixture.scale);
  }
  if (j.contains("meas_noise")) {
    const json& r = j.at("meas_noise");
    if (!r.is_array() || r.size() != 2 || !r[0].is_array() || r[0].size() != 2 ||
        !r[1].is_array() || r[1].size() != 2)
      throw ConfigParseError("meas_noise must be a 2x2 array of numbers");
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sc.meas_noise(a, b) = r[a][b].get<double>();
  }
  sc.seed = j.value("seed", sc.seed);
  if (j.contains("impulses")) {
    for (const json& e : j.at("impulses")) {
      StateImpulse imp;
      imp.t = e.at("t").get<int>();
      const json& d = e.at("delta");
      if (!d.is_array() || d.size() != 4)
        throw ConfigParseError("impulse delta must have 4 entries");
      for (int i = 0; i < 4; ++i) imp.delta(i) = d[i].get<double>();
      sc.impulses.push_back(imp);
    }
  }
  return sc;
}

json filter_to_json(const FilterSpec& f) {
  json j;
  j["name"] = f.name;
  j["weight"] = {{"kind", weight_kind_name(f.weight.kind)}, {"c", f.weight.c}};
  j["stf"] = {{"enabled", f.stf_enabled}, {"rho", f.rho}, {"recursive", f.stf_recursive}};
  j["lambda_scale"] = f.lambda_scale;
  j["omega_scale"] = f.omega_scale;
  return j;
}

FilterSpec filter_from_json(const json& j) {
  FilterSpec f;
  f.name = j.at("name").get<std::string>();
  if (j.contains("weight")) {
    const json& w = j.at("weight");
    if (w.contains("kind")) f.weight.kind = weight_kind_from_name(w.at("kind").get<std::string>());
    f.weight.c = w.value("c", f.weight.c);
  }
  if (j.contains("stf")) {
    const json& s = j.at("stf");
    f.stf_enabled = s.value("enabled", f.stf_enabled);
    f.rho = s.value("rho", f.rho);
    f.stf_recursive = s.value("recursive", f.stf_recursive);
  }
  f.lambda_scale = j.value("lambda_scale", f.lambda_scale);
  f.omega_scale = j.value("omega_scale", f.omega_scale);
  return f;
}

std::vector<std::string> validate_experiment_config(const ExperimentConfig& config) {
  std::vector<std::string> problems = validate_scenario_config(config.scenario);
  if (config.n_replicas < 1) problems.push_back("n_replicas must be >= 1");
  if (config.output_dir.empty()) problems.push_back("output_dir must not be empty");
  if (config.filters.empty()) problems.push_back("at least one filter must be configured");
  std::vector<std::string> names;
  for (const auto& f : config.filters) {
    if (f.name.empty()) problems.push_back("filter name must not be empty");
    names.push_back(f.name);
    if (!(f.weight.c > 0.0)) problems.push_back("filter '" + f.name + "': weight c must be > 0");
    if (f.stf_enabled && !(f.rho > 0.0 && f.rho < 1.0))
      problems.push_back("filter '" + f.name + "': rho must be in (0,1) when stf is enabled");
    if (!std::isfinite(f.lambda_scale) || !std::isfinite(f.omega_scale))
      problems.push_back("filter '" + f.name + "': lambda/omega scales must be finite");
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    problems.push_back("filter names must be unique");
  return problems;
}

void throw_if_invalid(const ExperimentConfig& config) {
  const auto problems = validate_experiment_config(config);
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw ConfigValidationError(msg);
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigParseError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig config;
  try {
    if (doc.contains("scenario")) config.scenario = scenario_from_json(doc.at("scenario"));
    if (doc.contains("filters")) {
      config.filters.clear();
      for (const json& f : doc.at("filters")) config.filters.push_back(filter_from_json(f));
    } else {
      config.filters = default_experiment_config().filters;
    }
    config.n_replicas = doc.value("n_replicas", config.n_replicas);
    config.output_dir = doc.value("output_dir", config.output_dir);
    config.emit_plots = doc.value("emit_plots", config.emit_plots);
  } catch (const ConfigParseError&) {
    throw;
  } catch (const ConfigValidationError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigParseError(std::string("config has wrong structure: ") + e.what());
  }

  throw_if_invalid(config);
  return config;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["scenario"] = scenario_to_json(config.scenario);
  json filters = json::array();
  for (const auto& f : config.filters) filters.push_back(filter_to_json(f));
  doc["filters"] = filters;
  doc["n_replicas"] = config.n_replicas;
  doc["output_dir"] = config.output_dir;
  doc["emit_plots"] = config.emit_plots;
  return doc.dump(2) + "\n";
}

std::string print_config_schema() {
  return R"(// Experiment configuration (JSON; // comments are ignored by the parser).
// Every field is shown with its default value.
{
  // Scenario: 2D constant-velocity target with GARCH(1,1) velocity process
  // noise and Gaussian-mixture measurement outliers.
  "scenario": {
    "dt": 1.0,                      // step length [s], > 0
    "horizon": 1000,                // steps per replica, >= 1
    "pos_noise_var": 0.01,          // process-noise variance on positions [m^2], > 0
    "garch": {
      "omega0": 0.1,                // baseline variance [(m/s)^2], > 0
      "alpha": 0.3,                 // shock coefficient, >= 0; alpha + beta < 1
      "beta": 0.6,                  // persistence, >= 0
      "sigma0_sq": 1.0              // variance of the first step [(m/s)^2], > 0
    },
    "mixture": {
      "p_outlier": 0.05,            // outlier probability per measurement, in [0,1]
      "scale": 10.0                 // outlier std-dev multiplier, >= 1
    },
    "meas_noise": [[1.0, 0.0],      // measurement covariance R [m^2], 2x2 symmetric PD
                   [0.0, 1.0]],
    "seed": 20260809,               // base seed; replica r runs on derive_run_seed(seed, r)
    "impulses": []                  // optional true-state jumps, e.g. [{"t": 100, "delta": [0.0, 5.0, 0.0, -5.0]}]
  },
  // Filters compared on the identical measurement stream of every replica.
  // weight.kind: "constant-one" (exact-likelihood update) or
  // "inverse-multiquadric" (w = (1 + r^2/c^2)^{-1/2} of the Mahalanobis
  // residual norm r).
  // weight.c: soft threshold in Mahalanobis units, > 0. Default
  // 2.97475218353854, which assigns weight 0.7 to a residual at the 99th
  // percentile of chi-square with 2 degrees of freedom.
  // stf.rho: smoothing constant of the strong-tracking fading factor,
  // in (0,1). Default 0.95.
  // stf.recursive: false uses the one-shot innovation covariance, true the
  // classic recursive estimate.
  // lambda_scale / omega_scale: Lambda_t and Omega_t as multiples of the
  // identity; 1.0 leaves the covariance recursion unscaled.
  "filters": [
    {
      "name": "kf",
      "weight": {"kind": "constant-one", "c": 2.97475218353854},
      "stf": {"enabled": false, "rho": 0.95, "recursive": false},
      "lambda_scale": 1.0,
      "omega_scale": 1.0
    },
    {
      "name": "wolf",
      "weight": {"kind": "inverse-multiquadric", "c": 2.97475218353854},
      "stf": {"enabled": false, "rho": 0.95, "recursive": false},
      "lambda_scale": 1.0,
      "omega_scale": 1.0
    },
    {
      "name": "rolf",
      "weight": {"kind": "inverse-multiquadric", "c": 2.97475218353854},
      "stf": {"enabled": true, "rho": 0.95, "recursive": false},
      "lambda_scale": 1.0,
      "omega_scale": 1.0
    }
  ],
  "n_replicas": 20,                 // independent replicas, >= 1
  "output_dir": "rolf_out",         // receives per_step.csv, summary.json, *.svg
  "emit_plots": true                // write loss_trace.svg and tail_loss.svg
}
)";
}

// ------------------------------------------------------------------
// Running
// ------------------------------------------------------------------

RunResult build_run_result(const std::vector<StepTrace>& traces, const Trajectory& truth,
                           const std::vector<Eigen::Index>& loss_mask, double tail_q,
                           std::uint64_t seed) {
  if (traces.size() != truth.length())
    throw std::invalid_argument("build_run_result: trace/truth length mismatch");

  RunResult result;
  result.seed = seed;
  result.per_step_loss.reserve(traces.size());
  result.weights.reserve(traces.size());
  result.fading_factors.reserve(traces.size());

  double loss_sum = 0.0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const double loss = per_step_loss(traces[t].updated.mean, truth.states[t], loss_mask);
    result.per_step_loss.push_back(loss);
    result.weights.push_back(traces[t].weight);
    result.fading_factors.push_back(traces[t].fading_factor);
    loss_sum += loss;
  }
  if (!traces.empty()) {
    result.rmse = std::sqrt(loss_sum / static_cast<double>(traces.size()));
    result.tail_mean = tail_mean_loss(result.per_step_loss, tail_q);
  }
  return result;
}

namespace {

std::string fnv1a_checksum(const std::vector<ScenarioData>& scenarios) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& sc : scenarios)
    for (const auto& y : sc.trajectory.measurements)
      for (Eigen::Index i = 0; i < y.size(); ++i) feed(y(i));

  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ExperimentResult run_experiment_in_memory(const ExperimentConfig& config) {
  throw_if_invalid(config);

  const auto [F, H] = build_cv_model(config.scenario.dt);
  LinearGaussianModel model;
  model.F = F;
  model.H = H;
  model.Q = nominal_process_noise(config.scenario);
  model.R = config.scenario.meas_noise;
  model.init.mean = Eigen::Vector4d::Zero();
  model.init.cov = Eigen::Matrix4d::Identity();

  ExperimentResult result;
  for (const auto& f : config.filters) result.filter_names.push_back(f.name);
  std::sort(result.filter_names.begin(), result.filter_names.end());

  result.scenarios.reserve(config.n_replicas);
  for (int r = 0; r < config.n_replicas; ++r) {
    const std::uint64_t seed = derive_run_seed(config.scenario.seed, r);
    ScenarioConfig sc = config.scenario;
    sc.seed = seed;
    result.scenarios.push_back(generate_scenario(sc));
    const ScenarioData& data = result.scenarios.back();

    for (const auto& spec : config.filters) {
      const auto traces =
          filter_run(model, data.trajectory.measurements, spec.to_robust_config(4));
      result.runs[spec.name].push_back(
          build_run_result(traces, data.trajectory, kPositionMask, kTailFraction, seed));
    }
  }

  result.scenario_checksum = fnv1a_checksum(result.scenarios);
  return result;
}

// ------------------------------------------------------------------
// Output rendering
// ------------------------------------------------------------------

std::string render_per_step_csv(const ExperimentConfig& config, const ExperimentResult& result) {
  std::string out = "replica,t,filter,loss,weight,theta,outlier_flag,cum_loss\n";
  const int T = config.scenario.horizon;

  for (int r = 0; r < config.n_replicas; ++r) {
    std::map<std::string, double> cum;
    for (const auto& name : result.filter_names) cum[name] = 0.0;
    const auto& flags = result.scenarios[static_cast<std::size_t>(r)].outlier_flags;

    for (int t = 0; t < T; ++t) {
      for (const auto& name : result.filter_names) {
        const RunResult& run = result.runs.at(name)[static_cast<std::size_t>(r)];
        const double loss = run.per_step_loss[static_cast<std::size_t>(t)];
        cum[name] += loss;
        out += std::to_string(r);
        out += ',';
        out += std::to_string(t);
        out += ',';
        out += name;
        out += ',';
        out += format_double(loss);
        out += ',';
        out += format_double(run.weights[static_cast<std::size_t>(t)]);
        out += ',';
        out += format_double(run.fading_factors[static_cast<std::size_t>(t)]);
        out += ',';
        out += flags[static_cast<std::size_t>(t)] ? '1' : '0';
        out += ',';
        out += format_double(cum[name]);
        out += '\n';
      }
    }
  }
  return out;
}

std::string render_summary_json(const ExperimentConfig& config, const ExperimentResult& result) {
  json doc;
  doc["n_replicas"] = config.n_replicas;
  doc["tail_q"] = kTailFraction;
  doc["scenario_checksum"] = result.scenario_checksum;
  doc["thresholds_note"] =
      "tail-loss comparison thresholds are artifact-defined checks; no external "
      "reference values exist for this benchmark";

  json records = json::array();
  auto add_record = [&records](const std::string& filter, const std::string& metric,
                               const std::string& statistic, double value, std::size_t n) {
    records.push_back({{"filter", filter},
                       {"metric", metric},
                       {"statistic", statistic},
                       {"value", value},
                       {"n_runs", n}});
  };

  for (const auto& name : result.filter_names) {
    const RunAggregate agg = aggregate_runs(result.runs.at(name));
    add_record(name, "rmse", "mean", agg.rmse.mean, agg.n_runs);
    add_record(name, "rmse", "median", agg.rmse.median, agg.n_runs);
    add_record(name, "rmse", "stddev", agg.rmse.stddev, agg.n_runs);
    add_record(name, "tail_mean", "mean", agg.tail_mean.mean, agg.n_runs);
    add_record(name, "tail_mean", "median", agg.tail_mean.median, agg.n_runs);
    add_record(name, "tail_mean", "stddev", agg.tail_mean.stddev, agg.n_runs);
  }

  for (const auto& a : result.filter_names) {
    for (const auto& b : result.filter_names) {
      if (a == b) continue;
      const auto& runs_a = result.runs.at(a);
      const auto& runs_b = result.runs.at(b);
      add_record(a + "_vs_" + b, "rmse", "win_rate", win_rate(runs_a, runs_b, RunMetric::kRmse),
                 runs_a.size());
      add_record(a + "_vs_" + b, "tail_mean", "win_rate",
                 win_rate(runs_a, runs_b, RunMetric::kTailMean), runs_a.size());
    }
  }

  doc["records"] = records;
  return doc.dump(2) + "\n";
}

// ------------------------------------------------------------------
// SVG plots
// ------------------------------------------------------------------

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct PlotFrame {
  double width = 860, height = 480;
  double left = 70, right = 20, top = 36, bottom = 48;

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double x_px(double frac) const { return left + frac * plot_w(); }
  double y_px(double frac) const { return top + (1.0 - frac) * plot_h(); }
};

void svg_header(std::ostringstream& svg, const PlotFrame& f, const std::string& title) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << svg_num(f.width / 2) << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
      << "<rect x=\"" << svg_num(f.left) << "\" y=\"" << svg_num(f.top) << "\" width=\""
      << svg_num(f.plot_w()) << "\" height=\"" << svg_num(f.plot_h())
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";
}

void svg_axis_label(std::ostringstream& svg, const PlotFrame& f, const std::string& x_label,
                    const std::string& y_label) {
  svg << "<text x=\"" << svg_num(f.left + f.plot_w() / 2) << "\" y=\""
      << svg_num(f.height - 10) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">" << x_label << "</text>\n"
      << "<text x=\"16\" y=\"" << svg_num(f.top + f.plot_h() / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << svg_num(f.top + f.plot_h() / 2) << ")\">" << y_label
      << "</text>\n";
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

std::string render_loss_trace_svg(const ExperimentConfig& config,
                                  const ExperimentResult& result) {
  const int T = config.scenario.horizon;
  PlotFrame f;
  std::ostringstream svg;

  // log10 losses of replica 0, floored well below any interesting value.
  constexpr double kFloor = 1e-12;
  double lo = 1e300, hi = -1e300;
  std::map<std::string, std::vector<double>> curves;
  for (const auto& name : result.filter_names) {
    auto& c = curves[name];
    c.reserve(T);
    for (double loss : result.runs.at(name)[0].per_step_loss) {
      const double v = std::log10(loss + kFloor);
      c.push_back(v);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;

  svg_header(svg, f, "per-step position loss, replica 0 (log scale)");
  svg_axis_label(svg, f, "t", "log10 loss");

  for (int i = 0; i <= 4; ++i) {
    const double frac = i / 4.0;
    const double vx = frac * (T > 1 ? T - 1 : 1);
    svg << "<text x=\"" << svg_num(f.x_px(frac)) << "\" y=\"" << svg_num(f.top + f.plot_h() + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(vx) << "</text>\n";
    const double vy = lo + frac * (hi - lo);
    svg << "<text x=\"" << svg_num(f.left - 6) << "\" y=\"" << svg_num(f.y_px(frac) + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(vy) << "</text>\n";
  }

  std::size_t color = 0;
  double legend_x = f.left + 10;
  for (const auto& name : result.filter_names) {
    const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1\" points=\"";
    const auto& c = curves[name];
    for (int t = 0; t < T; ++t) {
      const double xf = T > 1 ? static_cast<double>(t) / (T - 1) : 0.5;
      const double yf = (c[static_cast<std::size_t>(t)] - lo) / (hi - lo);
      svg << svg_num(f.x_px(xf)) << ',' << svg_num(f.y_px(yf)) << ' ';
    }
    svg << "\"/>\n";
    svg << "<rect x=\"" << svg_num(legend_x) << "\" y=\"" << svg_num(f.top + 6)
        << "\" width=\"12\" height=\"4\" fill=\"" << stroke << "\"/>\n"
        << "<text x=\"" << svg_num(legend_x + 16) << "\" y=\"" << svg_num(f.top + 11)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    legend_x += 16 + 9.0 * static_cast<double>(name.size()) + 24;
    ++color;
  }

  svg << "</svg>\n";
  return svg.str();
}

std::string render_tail_loss_svg(const ExperimentConfig& config,
                                 const ExperimentResult& result) {
  PlotFrame f;
  std::ostringstream svg;

  std::vector<std::pair<std::string, double>> bars;
  double hi = 0.0;
  for (const auto& name : result.filter_names) {
    const RunAggregate agg = aggregate_runs(result.runs.at(name));
    bars.emplace_back(name, agg.tail_mean.median);
    hi = std::max(hi, agg.tail_mean.median);
  }
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.1;

  svg_header(svg, f, "median top-5% tail loss across replicas");
  svg_axis_label(svg, f, "filter", "median tail loss");

  for (int i = 0; i <= 4; ++i) {
    const double frac = i / 4.0;
    svg << "<text x=\"" << svg_num(f.left - 6) << "\" y=\"" << svg_num(f.y_px(frac) + 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(frac * hi) << "</text>\n";
  }

  const double n = static_cast<double>(bars.size());
  const double slot = f.plot_w() / n;
  const double bar_w = slot * 0.6;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const char* fill = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double cx = f.left + (static_cast<double>(i) + 0.5) * slot;
    const double hfrac = bars[i].second / hi;
    const double y0 = f.y_px(hfrac);
    svg << "<rect x=\"" << svg_num(cx - bar_w / 2) << "\" y=\"" << svg_num(y0) << "\" width=\""
        << svg_num(bar_w) << "\" height=\"" << svg_num(f.top + f.plot_h() - y0) << "\" fill=\""
        << fill << "\"/>\n"
        << "<text x=\"" << svg_num(cx) << "\" y=\"" << svg_num(y0 - 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << tick_label(bars[i].second) << "</text>\n"
        << "<text x=\"" << svg_num(cx) << "\" y=\"" << svg_num(f.top + f.plot_h() + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << bars[i].first << "</text>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

// ------------------------------------------------------------------
// Filesystem pipeline
// ------------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputIoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw OutputIoError("failed writing '" + path.string() + "'");
}

}  // namespace

int run_experiment(const ExperimentConfig& config) {
  const ExperimentResult result = run_experiment_in_memory(config);

  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputIoError("cannot create output directory '" + dir.string() +
                              "': " + ec.message());

  write_file(dir / "per_step.csv", render_per_step_csv(config, result));
  write_file(dir / "summary.json", render_summary_json(config, result));
  if (config.emit_plots) {
    write_file(dir / "loss_trace.svg", render_loss_trace_svg(config, result));
    write_file(dir / "tail_loss.svg", render_tail_loss_svg(config, result));
  }
  return kExitOk;
}

}  // namespace rolf
