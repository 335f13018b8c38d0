#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "spikelab/clt.hpp"
#include "spikelab/error.hpp"
#include "spikelab/estimate.hpp"
#include "spikelab/io.hpp"
#include "spikelab/mc.hpp"
#include "spikelab/sampler.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// "t" or "t:w,t:w,..."
BulkMeasure parse_bulk(const std::string& text) {
  std::vector<Atom> atoms;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        atoms.push_back({std::stod(item), 1.0});
      } else {
        atoms.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
      }
    } catch (const std::logic_error&) {
      throw InvalidArgument("cannot parse bulk atom '" + item + "' (expected t or t:w)");
    }
  }
  if (atoms.size() == 1 && text.find(':') == std::string::npos) atoms[0].w = 1.0;
  return BulkMeasure::from_atoms(std::move(atoms));
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const json& config) {
  if (flag) return *flag;
  if (config.contains("seed")) return config.at("seed").get<std::uint64_t>();
  if (const char* env = std::getenv("SPIKELAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::logic_error&) {
      throw InvalidArgument(std::string("SPIKELAB_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json versions() {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return {{"spikelab", SPIKELAB_VERSION}, {"eigen", eigen.str()}, {"json", "nlohmann " + std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

void write_manifest(const fs::path& path, const std::vector<std::string>& args, const std::string& command,
                    const json& config, std::uint64_t seed, double seconds, const std::vector<std::string>& outputs) {
  json manifest = {{"command", command}, {"args", args},           {"config", config},
                   {"seed", seed},       {"versions", versions()}, {"started_at", timestamp()},
                   {"wall_clock_seconds", seconds}, {"outputs", outputs}};
  io::write_atomic(path, manifest.dump(2) + "\n");
}

// --- simulate ---------------------------------------------------------------

PopulationModel model_from_config(const json& cfg) {
  if (!cfg.contains("model")) return build_case1(500);
  json m = cfg.at("model");
  if (!m.contains("p")) m["p"] = 500;
  if (!m.contains("case")) m["case"] = "case1";
  if (m.at("case") == "case2" && !m.contains("rho")) m["rho"] = 0.5;
  return io::model_from_json(m);
}

ExperimentConfig experiment_from_config(const json& cfg, const std::string& dist_key) {
  ExperimentConfig ec;
  ec.model = model_from_config(cfg);
  ec.n = cfg.value("n", 2 * ec.model.p());
  ec.reps = cfg.value("reps", 1000);
  ec.dist = distribution_from_string(cfg.value(dist_key, std::string(dist_key == "dist" ? "gaussian" : "rademacher")));
  ec.centering = centering_from_string(cfg.value("centering", std::string("full_spectrum")));
  ec.record_omega = cfg.value("record_omega", false);
  if (cfg.contains("targets")) ec.targets = cfg.at("targets").get<std::vector<std::size_t>>();
  if (cfg.contains("eta_n")) ec.truncation = TruncationConfig{cfg.at("eta_n").get<double>()};
  return ec;
}

DetectionConfig detection_from_config(const json& cfg, double c) {
  DetectionConfig det;
  det.c = c;
  const json d = cfg.value("detection", json::object());
  det.ratio_threshold = d.value("ratio_threshold", det.ratio_threshold);
  det.regime = clt_regime_from_string(d.value("regime", std::string("delocalized")));
  if (d.contains("fourth_moment")) det.fourth_moment = d.at("fourth_moment").get<double>();
  det.variance_source = variance_source_from_string(d.value("variance_source", std::string("model")));
  det.max_refinements = d.value("max_refinements", det.max_refinements);
  return det;
}

int cmd_simulate(const std::vector<std::string>& args, const std::string& kind, const std::string& config_path,
                 const std::string& out_dir, std::optional<std::uint64_t> seed_flag, std::optional<int> threads,
                 std::optional<int> reps, std::optional<int> p, std::optional<int> n, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  json cfg = config_path.empty() ? json::object() : io::read_config(config_path);
  if (!cfg.is_object()) throw InvalidArgument("config must be a table");
  if (reps) cfg["reps"] = *reps;
  if (n) cfg["n"] = *n;
  if (p) cfg["model"]["p"] = *p;
  const std::uint64_t seed = resolve_seed(seed_flag, cfg);
  cfg["seed"] = seed;

  ExperimentConfig ec = experiment_from_config(cfg, "dist");
  ec.seed = seed;
  ec.threads = threads.value_or(cfg.value("threads", default_threads()));
  cfg["n"] = ec.n;
  cfg["reps"] = ec.reps;

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::vector<std::string> outputs;
  EmpiricalSummary summary;
  if (kind == "clt") {
    summary = run_clt_experiment(ec);
  } else if (kind == "detect") {
    summary = run_detection_experiment(ec, detection_from_config(cfg, ec.c()));
  } else if (kind == "universality") {
    ExperimentConfig other = experiment_from_config(cfg, "dist_b");
    other.seed = seed;
    other.threads = ec.threads;
    summary = universality_check(ec, other, cfg.value("level", 0.01));
  } else {
    throw InvalidArgument("unknown simulation kind '" + kind + "' (expected clt, detect or universality)");
  }

  const json doc = io::to_json(summary);
  io::write_atomic(dir / "summary.json", doc.dump(2) + "\n");
  outputs.push_back((dir / "summary.json").string());
  if (kind != "detect") {
    std::ostringstream gam;
    io::write_gamma_csv(gam, summary);
    io::write_atomic(dir / "gamma_samples.csv", gam.str());
    std::ostringstream hist;
    io::write_histogram_csv(hist, summary);
    io::write_atomic(dir / "histogram.csv", hist.str());
    outputs.push_back((dir / "gamma_samples.csv").string());
    outputs.push_back((dir / "histogram.csv").string());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  cfg["threads"] = ec.threads;
  write_manifest(dir / "manifest.json", args, "simulate " + kind, cfg, seed, secs, outputs);
  out << doc.dump(2) << "\n";
  return ok;
}

// --- detect -------------------------------------------------------------------

struct DetectOptions {
  std::string input;
  std::optional<double> c;
  std::optional<double> n;
  bool eigenvalues = false;
  bool transpose = false;
  bool standardize = true;
  double ratio_threshold = 0.2;
  std::string regime = "delocalized";
  std::optional<double> fourth_moment;
  std::string variance_source = "model";
  std::string out;
};

int cmd_detect(const std::vector<std::string>& args, const DetectOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  MatrixXd data = io::read_csv(fs::path(o.input));
  if (o.transpose) data.transposeInPlace();
  const bool eigen_input = o.eigenvalues || data.cols() == 1;

  VectorXd eigs;
  double c = 0.0;
  if (eigen_input) {
    if (data.cols() != 1) throw InvalidArgument("eigenvalue input must have exactly one column");
    eigs = data.col(0);
    std::sort(eigs.data(), eigs.data() + eigs.size(), std::greater<double>());
    if (o.c) {
      c = *o.c;
    } else if (o.n) {
      c = static_cast<double>(eigs.size()) / *o.n;
    } else {
      throw InvalidArgument("eigenvalue input needs --c or --n");
    }
  } else {
    const Eigen::Index p = data.rows();
    const Eigen::Index n = data.cols();
    if (n < 2) throw InvalidArgument("raw data needs at least two observations (columns)");
    if (o.standardize) {
      for (Eigen::Index i = 0; i < p; ++i) {
        auto row = data.row(i);
        row.array() -= row.mean();
        const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(n));
        if (!(sd > 0)) {
          std::ostringstream msg;
          msg << "variable " << i + 1 << " is constant; cannot standardize";
          throw InvalidArgument(msg.str());
        }
        row /= sd;
      }
    }
    MatrixXd s = MatrixXd::Zero(p, p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(data, 1.0 / static_cast<double>(n));
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    eigs = eigvals_desc(s);
    c = o.c ? *o.c : static_cast<double>(p) / static_cast<double>(n);
  }

  DetectionConfig det;
  det.c = c;
  det.ratio_threshold = o.ratio_threshold;
  det.regime = clt_regime_from_string(o.regime);
  det.fourth_moment = o.fourth_moment;
  det.variance_source = variance_source_from_string(o.variance_source);
  const SpikeReport report = detect_spikes(eigs, det);
  json doc = io::to_json(report);
  doc["p"] = eigs.size();
  doc["c"] = c;
  if (o.out.empty()) {
    out << doc.dump(2) << "\n";
    return ok;
  }
  io::write_atomic(o.out, doc.dump(2) + "\n");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json config = {{"input", o.input},
                 {"c", c},
                 {"eigenvalue_input", eigen_input},
                 {"transpose", o.transpose},
                 {"standardize", o.standardize},
                 {"ratio_threshold", o.ratio_threshold},
                 {"regime", o.regime},
                 {"variance_source", o.variance_source}};
  if (o.fourth_moment) config["fourth_moment"] = *o.fourth_moment;
  fs::path manifest = o.out;
  manifest += ".manifest.json";
  write_manifest(manifest, args, "detect", config, 0, secs, {o.out});
  out << doc.dump(2) << "\n";
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"spikelab: spiked covariance phase transitions, limiting laws and spike detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPIKELAB_VERSION);

  // phase
  double alpha = 0.0;
  double c = 0.0;
  std::string bulk_text = "1";
  auto* phase = app.add_subcommand("phase", "phi, phi', limit rho and regime of a spike");
  phase->add_option("--alpha", alpha, "spike value")->required();
  phase->add_option("--c", c, "aspect ratio p/n")->required();
  phase->add_option("--bulk", bulk_text, "bulk atoms t or t:w,t:w,...")->capture_default_str();

  // clt-params
  std::string regime = "delocalized";
  std::optional<double> fourth;
  int multiplicity = 1;
  auto* params = app.add_subcommand("clt-params", "limiting-law parameters of a distant spike");
  params->add_option("--alpha", alpha, "spike value")->required();
  params->add_option("--c", c, "aspect ratio p/n")->required();
  params->add_option("--bulk", bulk_text, "bulk atoms t or t:w,t:w,...")->capture_default_str();
  params->add_option("--regime", regime, "delocalized or diagonal")->capture_default_str();
  params->add_option("--fourth-moment", fourth, "E x^4 of the entries (diagonal regime)");
  params->add_option("--multiplicity", multiplicity, "spike multiplicity")->capture_default_str();

  // simulate
  std::string kind;
  std::string config_path;
  std::string out_dir = "spikelab_out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> reps;
  std::optional<int> p_dim;
  std::optional<int> n_dim;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiments");
  sim->add_option("kind", kind, "clt, detect or universality")->required();
  sim->add_option("--config", config_path, "TOML or JSON experiment config");
  sim->add_option("--out", out_dir, "output directory")->capture_default_str();
  sim->add_option("--seed", seed, "base seed (fallback: config, then SPIKELAB_SEED)");
  sim->add_option("--threads", threads, "worker threads (default: all cores)");
  sim->add_option("--reps", reps, "replications");
  sim->add_option("--p", p_dim, "dimension");
  sim->add_option("--n", n_dim, "sample size");

  // detect
  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "estimate the number and location of spikes");
  detect->add_option("input", det.input, "p x n data CSV or one-column eigenvalue list")->required();
  detect->add_option("--c", det.c, "aspect ratio p/n (eigenvalue input)");
  detect->add_option("--n", det.n, "sample size (eigenvalue input)");
  detect->add_flag("--eigenvalues", det.eigenvalues, "treat input as an eigenvalue list");
  detect->add_flag("--transpose", det.transpose, "input has observations as rows");
  detect->add_flag("--standardize,!--no-standardize", det.standardize, "center and scale each variable")
      ->capture_default_str();
  detect->add_option("--ratio-threshold", det.ratio_threshold)->capture_default_str();
  detect->add_option("--regime", det.regime, "delocalized or diagonal")->capture_default_str();
  detect->add_option("--fourth-moment", det.fourth_moment, "E x^4 (diagonal regime)");
  detect->add_option("--variance-source", det.variance_source, "model or empirical")->capture_default_str();
  detect->add_option("--out", det.out, "write the report here (plus a manifest)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (*phase) {
      const StieltjesContext ctx(c, parse_bulk(bulk_text));
      out << io::to_json(rho(alpha, ctx)).dump(2) << "\n";
      return ok;
    }
    if (*params) {
      const StieltjesContext ctx(c, parse_bulk(bulk_text));
      const CltRegime r = clt_regime_from_string(regime);
      if (r == CltRegime::diagonal && !fourth) throw InvalidArgument("diagonal regime needs --fourth-moment");
      const double beta = r == CltRegime::diagonal ? *fourth - 3.0 : 0.0;
      out << io::to_json(clt_params(alpha, ctx, multiplicity, r, beta)).dump(2) << "\n";
      return ok;
    }
    if (*sim) return cmd_simulate(args, kind, config_path, out_dir, seed, threads, reps, p_dim, n_dim, out);
    if (*detect) return cmd_detect(args, det, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    return usage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}

}  // namespace spikelab::cli
