#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cloudsre/cloud.hpp"
#include "cloudsre/diagnostics.hpp"
#include "cloudsre/errors.hpp"
#include "cloudsre/noise.hpp"
#include "cloudsre/special_functions.hpp"
#include "cloudsre/sre.hpp"
#include "cloudsre/version.hpp"

namespace cloudsre::cli {

using json = nlohmann::ordered_json;

enum class Command { generate, simulate, series, lyapunov, couple, stationarity };
enum class OutputFormat { csv, json };

/// Raised when --help (or -h) is requested; carries the usage text.
class help_requested : public std::exception {
 public:
  explicit help_requested(std::string text) : text_(std::move(text)) {}
  const char* what() const noexcept override { return text_.c_str(); }
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

struct GenerateConfig {
  CloudParams params;
  std::size_t n = 100;
  Definition definition = Definition::def1;
};

struct SimulateConfig {
  Form form = Form::abs;
  CoeffProcess coeffs;
  std::string a_text, b_text;
  double x0 = 0.0;
  std::size_t steps = 0;
};

struct SeriesConfig {
  CoeffProcess coeffs;
  std::string a_text, b_text;
  std::size_t k_max = 100'000;
  double tol = 1e-12;
};

struct LyapunovConfig {
  double scale = 1.0;
  std::size_t samples = 1'000'000;
};

struct CoupleConfig {
  double scale = 1.0;
  BSpec b = ConstB{1.0};
  std::string b_text = "const:1";
  double x0 = 0.0;
  double x0_alt = 100.0;
  std::size_t steps = 500;
};

struct StationarityConfig {
  double scale = 1.0;
  BSpec b = ConstB{1.0};
  std::string b_text = "const:1";
  std::size_t burn_in = kDefaultBurnIn;
  std::vector<std::size_t> lags = {50, 100, 200};
  std::size_t replicas = 500;
};

struct RunConfig {
  Command command = Command::generate;
  std::uint64_t seed = 0;
  OutputFormat format = OutputFormat::json;
  std::string out;  // empty = stdout
  unsigned threads = 0;
  std::variant<GenerateConfig, SimulateConfig, SeriesConfig, LyapunovConfig,
               CoupleConfig, StationarityConfig>
      params;
};

// -- coefficient spec strings ------------------------------------------------

namespace detail {

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw domain_error(what + ": cannot parse number '" + s + "'");
  }
}

inline std::vector<double> split_numbers(const std::string& s,
                                         const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  return out;
}

}  // namespace detail

inline ASpec parse_a_spec(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "const") return ConstA{detail::parse_number(rest, "--a const")};
  if (kind == "gauss") return GaussA{detail::parse_number(rest, "--a gauss")};
  throw domain_error("--a: expected const:<v> or gauss:<scale>, got '" + text +
                     "'");
}

inline BSpec parse_b_spec(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "const") return ConstB{detail::parse_number(rest, "--b const")};
  if (kind == "gauss") {
    const auto v = detail::split_numbers(rest, "--b gauss");
    if (v.size() != 2) throw domain_error("--b gauss needs <mean>,<sd>");
    return GaussB{v[0], v[1]};
  }
  if (kind == "ar1") {
    const auto v = detail::split_numbers(rest, "--b ar1");
    if (v.size() != 3) throw domain_error("--b ar1 needs <mean>,<rho>,<sd>");
    return Ar1B{v[0], v[1], v[2]};
  }
  throw domain_error(
      "--b: expected const:<v> | gauss:<m>,<s> | ar1:<m>,<rho>,<s>, got '" +
      text + "'");
}

// -- argument parsing ---------------------------------------------------------

/// Parses argv (without the program name) into a validated RunConfig.
/// Throws help_requested for --help and domain_error for anything invalid.
inline RunConfig parse_args(const std::vector<std::string>& argv) {
  CLI::App app{
      "cloudsre: cloud-model generation, random-coefficient recursions and "
      "stationarity diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "exit codes: 0 success / all checks passed, 1 a diagnostic check "
      "failed,\n"
      "            2 usage or domain error, 3 numeric anomaly (divergence "
      "guard,\n"
      "            non-summable series)");

  RunConfig cfg;
  std::string format_text = "json";
  app.add_option("--seed", cfg.seed, "base RNG seed (default 0)");
  app.add_option("--format", format_text,
                 "output format: json or csv (diagnostics are json-only)");
  app.add_option("--out", cfg.out, "write output to this path instead of stdout");
  app.add_option("--threads", cfg.threads,
                 "worker threads for replica ensembles (0 = all cores)");

  GenerateConfig gen;
  int def_flag = 1;
  auto* c_gen = app.add_subcommand(
      "generate",
      "draw cloud drops via the nested Gaussian recursion x_1 = "
      "R_N(En_p, He), x_i = R_N(En_{p-i+1}, |x_{i-1}|); --def 2 uses the "
      "equivalent explicit-noise form x_i = En_{p-i+1} + |x_{i-1}| eps");
  c_gen->add_option("--en", gen.params.en,
                    "comma-separated En_1,...,En_p (expectation first)")
      ->required()
      ->delimiter(',');
  c_gen->add_option("--he", gen.params.he, "hyper-entropy He > 0")->required();
  c_gen->add_option("--n", gen.n, "number of drops (default 100)");
  c_gen->add_option("--def", def_flag, "generative path: 1 or 2 (default 1)");

  SimulateConfig sim;
  std::string form_text = "abs";
  auto* c_sim = app.add_subcommand(
      "simulate",
      "iterate X_{t+1} = A X_t + B (linear) or X_{t+1} = A |X_t| + B (abs)");
  c_sim->add_option("--form", form_text, "recursion form: linear or abs");
  c_sim->add_option("--a", sim.a_text, "A source: const:<v> | gauss:<scale>")
      ->required();
  c_sim->add_option("--b", sim.b_text,
                    "B source: const:<v> | gauss:<m>,<s> | ar1:<m>,<rho>,<s>")
      ->required();
  c_sim->add_option("--x0", sim.x0, "initial state (default 0)");
  c_sim->add_option("--steps", sim.steps, "number of steps")->required();

  SeriesConfig ser;
  auto* c_ser = app.add_subcommand(
      "series",
      "truncate the stationary series sum_k (prod_{i<=k} A_i) B_{k+1} drawn "
      "from a fresh history");
  c_ser->add_option("--a", ser.a_text, "A source")->required();
  c_ser->add_option("--b", ser.b_text, "B source")->required();
  c_ser->add_option("--kmax", ser.k_max, "term cap (default 100000)");
  c_ser->add_option("--tol", ser.tol, "weight cutoff (default 1e-12)");

  LyapunovConfig lya;
  auto* c_lya = app.add_subcommand(
      "lyapunov",
      "estimate E[log|A|] for A = scale * eps and compare against the closed "
      "form log(scale) - (gamma + log 2)/2");
  c_lya->add_option("--scale", lya.scale, "coefficient scale (default 1)");
  c_lya->add_option("--samples", lya.samples, "draw count (default 10^6)");

  CoupleConfig cpl;
  auto* c_cpl = app.add_subcommand(
      "couple",
      "run two abs-form trajectories on one coefficient realization and "
      "verify the pathwise contraction |d_{k+1}| <= |A_{k+1}| |d_k|");
  c_cpl->add_option("--scale", cpl.scale, "A = scale * eps (default 1)");
  c_cpl->add_option("--b", cpl.b_text, "B source (default const:1)");
  c_cpl->add_option("--x0", cpl.x0, "first initial state (default 0)");
  c_cpl->add_option("--x0-alt", cpl.x0_alt, "second initial state (default 100)");
  c_cpl->add_option("--steps", cpl.steps, "number of steps (default 500)");

  StationarityConfig sta;
  auto* c_sta = app.add_subcommand(
      "stationarity",
      "KS-compare the cross-replica marginal at burn-in against the marginal "
      "at burn-in + lag; under the stationary law both coincide");
  c_sta->add_option("--scale", sta.scale, "A = scale * eps (default 1)");
  c_sta->add_option("--b", sta.b_text, "B source (default const:1)");
  c_sta->add_option("--burn-in", sta.burn_in, "burn-in steps (default 500)");
  c_sta->add_option("--lags", sta.lags, "comma-separated lags (default 50,100,200)")
      ->delimiter(',');
  c_sta->add_option("--replicas", sta.replicas, "ensemble size (default 500)");

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::ostringstream help;
    help << app.help();
    throw help_requested(help.str());
  } catch (const CLI::ParseError& e) {
    throw domain_error(std::string("usage: ") + e.what());
  }

  if (format_text == "csv") {
    cfg.format = OutputFormat::csv;
  } else if (format_text == "json") {
    cfg.format = OutputFormat::json;
  } else {
    throw domain_error("--format must be csv or json");
  }

  if (c_gen->parsed()) {
    cfg.command = Command::generate;
    if (def_flag != 1 && def_flag != 2) throw domain_error("--def must be 1 or 2");
    gen.definition = def_flag == 1 ? Definition::def1 : Definition::def2;
    if (gen.n == 0) throw domain_error("--n must be at least 1");
    validate(gen.params);
    cfg.params = std::move(gen);
  } else if (c_sim->parsed()) {
    cfg.command = Command::simulate;
    if (form_text == "linear") {
      sim.form = Form::linear;
    } else if (form_text == "abs") {
      sim.form = Form::abs;
    } else {
      throw domain_error("--form must be linear or abs");
    }
    sim.coeffs = {parse_a_spec(sim.a_text), parse_b_spec(sim.b_text)};
    validate(sim.coeffs);
    if (sim.steps == 0) throw domain_error("--steps must be at least 1");
    if (!std::isfinite(sim.x0)) throw domain_error("--x0 must be finite");
    cfg.params = std::move(sim);
  } else if (c_ser->parsed()) {
    cfg.command = Command::series;
    ser.coeffs = {parse_a_spec(ser.a_text), parse_b_spec(ser.b_text)};
    validate(ser.coeffs);
    if (ser.k_max == 0) throw domain_error("--kmax must be at least 1");
    if (!(ser.tol > 0.0)) throw domain_error("--tol must be > 0");
    cfg.params = std::move(ser);
  } else if (c_lya->parsed()) {
    cfg.command = Command::lyapunov;
    if (!(lya.scale > 0.0) || !std::isfinite(lya.scale)) {
      throw domain_error("--scale must be a positive finite number");
    }
    if (lya.samples < 1000) throw domain_error("--samples must be >= 1000");
    cfg.params = std::move(lya);
  } else if (c_cpl->parsed()) {
    cfg.command = Command::couple;
    cpl.b = parse_b_spec(cpl.b_text);
    validate(CoeffProcess{GaussA{cpl.scale}, cpl.b});
    if (cpl.x0 == cpl.x0_alt) throw domain_error("--x0 and --x0-alt must differ");
    if (cpl.steps < 10) throw domain_error("--steps must be >= 10");
    cfg.params = std::move(cpl);
  } else {
    cfg.command = Command::stationarity;
    sta.b = parse_b_spec(sta.b_text);
    validate(CoeffProcess{GaussA{sta.scale}, sta.b});
    if (sta.replicas < 50) throw domain_error("--replicas must be >= 50");
    if (sta.lags.empty()) throw domain_error("--lags must name at least one lag");
    for (std::size_t lag : sta.lags) {
      if (lag == 0) throw domain_error("--lags entries must be >= 1");
    }
    cfg.params = std::move(sta);
  }

  if (cfg.format == OutputFormat::csv && cfg.command != Command::generate &&
      cfg.command != Command::simulate) {
    throw domain_error("--format csv is only available for generate/simulate");
  }
  return cfg;
}

// -- serialization -------------------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json report_header(const RunConfig& cfg, const char* command,
                          json parameters) {
  json doc;
  doc["command"] = command;
  doc["version"] = std::string(kVersion);
  doc["seed"] = cfg.seed;
  doc["params"] = std::move(parameters);
  return doc;
}

inline json error_body(const char* type, const std::string& message,
                       std::optional<std::size_t> step = std::nullopt) {
  json e;
  e["type"] = type;
  e["message"] = message;
  if (step) e["step"] = *step;
  return e;
}

inline Trajectory run_simulate(const SimulateConfig& sim, NoiseStream& stream) {
  return sim.form == Form::abs
             ? iterate_abs(sim.coeffs, sim.x0, sim.steps, stream)
             : iterate_linear(sim.coeffs, sim.x0, sim.steps, stream);
}

}  // namespace detail

/// Executes a parsed config, writing the result document to `out`.
/// Returns the process exit code (0/1/3); domain errors propagate.
inline int run(const RunConfig& cfg, std::ostream& out) {
  json doc;
  int exit_code = 0;

  switch (cfg.command) {
    case Command::generate: {
      const auto& gen = std::get<GenerateConfig>(cfg.params);
      NoiseStream stream(cfg.seed);
      const DropBatch batch =
          gen_drops(gen.params, gen.n, stream, gen.definition);
      if (cfg.format == OutputFormat::csv) {
        out << "drop\n";
        for (double v : batch.values) out << detail::fmt17(v) << "\n";
        return 0;
      }
      json params;
      params["en"] = gen.params.en;
      params["he"] = gen.params.he;
      params["p"] = gen.params.order();
      doc = detail::report_header(cfg, "generate", std::move(params));
      doc["definition"] =
          batch.definition_used == Definition::def1 ? "def1" : "def2";
      doc["values"] = batch.values;
      break;
    }

    case Command::simulate: {
      const auto& sim = std::get<SimulateConfig>(cfg.params);
      NoiseStream stream(cfg.seed);
      const Trajectory traj = detail::run_simulate(sim, stream);
      if (cfg.format == OutputFormat::csv) {
        out << "t,x\n";
        for (std::size_t t = 0; t < traj.values.size(); ++t) {
          out << t << "," << detail::fmt17(traj.values[t]) << "\n";
        }
        return traj.diverged_at ? 3 : 0;
      }
      json params;
      params["form"] = sim.form == Form::abs ? "abs" : "linear";
      params["a"] = sim.a_text;
      params["b"] = sim.b_text;
      params["x0"] = sim.x0;
      params["steps"] = sim.steps;
      doc = detail::report_header(cfg, "simulate", std::move(params));
      doc["values"] = traj.values;
      if (traj.diverged_at) {
        doc["diverged_at"] = *traj.diverged_at;
        doc["error"] = detail::error_body(
            "divergence_guard", "the trajectory exceeded |X| = 1e12",
            traj.diverged_at);
        exit_code = 3;
      } else {
        doc["diverged_at"] = nullptr;
      }
      break;
    }

    case Command::series: {
      const auto& ser = std::get<SeriesConfig>(cfg.params);
      json params;
      params["a"] = ser.a_text;
      params["b"] = ser.b_text;
      params["kmax"] = ser.k_max;
      params["tol"] = ser.tol;
      doc = detail::report_header(cfg, "series", std::move(params));
      NoiseStream stream(cfg.seed);
      try {
        const SeriesApprox approx =
            series_solution(ser.coeffs, stream, ser.k_max, ser.tol);
        doc["value"] = approx.value;
        doc["terms_used"] = approx.terms_used;
        doc["last_weight"] = approx.last_weight;
      } catch (const numeric_error& e) {
        doc["error"] = detail::error_body("non_summability", e.what());
        exit_code = 3;
      }
      break;
    }

    case Command::lyapunov: {
      const auto& lya = std::get<LyapunovConfig>(cfg.params);
      json params;
      params["scale"] = lya.scale;
      params["samples"] = lya.samples;
      doc = detail::report_header(cfg, "lyapunov", std::move(params));
      NoiseStream stream(cfg.seed);
      const ASpec a = GaussA{lya.scale};
      const MomentEstimate est = estimate_lyapunov(a, lya.samples, stream);
      const double closed = *lyapunov_closed_form(a);
      json section;
      section["estimate"] = est.estimate;
      section["stderr"] = est.stderr_;
      section["closed_form"] = closed;
      doc["lyapunov"] = std::move(section);
      const bool passed =
          std::fabs(est.estimate - closed) <= 4.0 * est.stderr_;
      doc["passed"] = passed;
      if (!passed) exit_code = 1;
      break;
    }

    case Command::couple: {
      const auto& cpl = std::get<CoupleConfig>(cfg.params);
      json params;
      params["scale"] = cpl.scale;
      params["b"] = cpl.b_text;
      params["x0"] = cpl.x0;
      params["x0_alt"] = cpl.x0_alt;
      params["steps"] = cpl.steps;
      doc = detail::report_header(cfg, "couple", std::move(params));
      NoiseStream stream(cfg.seed);
      const CoeffProcess coeffs{GaussA{cpl.scale}, cpl.b};
      try {
        const CouplingReport rep =
            coupling_decay(coeffs, cpl.x0, cpl.x0_alt, cpl.steps, stream);
        json section;
        if (rep.slope) {
          section["slope"] = *rep.slope;
        } else {
          section["slope"] = nullptr;
        }
        section["contraction_violations"] = rep.contraction_violations;
        if (rep.merged_at) {
          section["merged_at"] = *rep.merged_at;
        } else {
          section["merged_at"] = nullptr;
        }
        doc["coupling"] = std::move(section);
        const bool passed = rep.contraction_violations == 0;
        doc["passed"] = passed;
        if (!passed) exit_code = 1;
      } catch (const divergence_error& e) {
        doc["error"] =
            detail::error_body("divergence_guard", e.what(), e.step());
        exit_code = 3;
      }
      break;
    }

    case Command::stationarity: {
      const auto& sta = std::get<StationarityConfig>(cfg.params);
      json params;
      params["scale"] = sta.scale;
      params["b"] = sta.b_text;
      params["burn_in"] = sta.burn_in;
      params["lags"] = sta.lags;
      params["replicas"] = sta.replicas;
      doc = detail::report_header(cfg, "stationarity", std::move(params));
      const NoiseStream stream(cfg.seed);
      const CoeffProcess coeffs{GaussA{sta.scale}, sta.b};
      try {
        const StationarityReport rep =
            stationarity_test(coeffs, 0.0, sta.burn_in, sta.lags, sta.replicas,
                              stream, cfg.threads);
        json stats = json::array();
        for (const auto& lag : rep.ks_stats) {
          json row;
          row["lag"] = lag.lag;
          row["statistic"] = lag.statistic;
          row["p_value"] = lag.p_value;
          stats.push_back(std::move(row));
        }
        json section;
        section["ks_stats"] = std::move(stats);
        section["rejection_rate"] = rep.rejection_rate;
        doc["stationarity"] = std::move(section);
        const bool passed = rep.rejection_rate == 0.0;
        doc["passed"] = passed;
        if (!passed) exit_code = 1;
      } catch (const divergence_error& e) {
        doc["error"] =
            detail::error_body("divergence_guard", e.what(), e.step());
        exit_code = 3;
      }
      break;
    }
  }

  out << doc.dump(2) << "\n";
  return exit_code;
}

/// parse + run + error mapping; this is main() in library form.
inline int run_cli(const std::vector<std::string>& argv, std::ostream& out,
                   std::ostream& err) {
  try {
    const RunConfig cfg = parse_args(argv);
    if (!cfg.out.empty()) {
      std::ofstream file(cfg.out);
      if (!file) {
        err << "error: cannot open '" << cfg.out << "' for writing\n";
        return 2;
      }
      const int code = run(cfg, file);
      file.flush();
      if (!file) {
        err << "error: write to '" << cfg.out << "' failed\n";
        return 2;
      }
      return code;
    }
    return run(cfg, out);
  } catch (const help_requested& h) {
    out << h.text();
    return 0;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    err << "numeric anomaly: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cloudsre::cli
