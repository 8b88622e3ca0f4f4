// anisova: sampling, fitting, smoothness learning and budget allocation from
// the command line. Exit codes: 0 ok, 2 configuration error, 3 numerical or
// I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "anisova/bandwidth_opt.hpp"
#include "anisova/error.hpp"
#include "anisova/json_io.hpp"
#include "anisova/least_squares.hpp"
#include "anisova/log.hpp"
#include "anisova/pipeline.hpp"
#include "anisova/smoothness.hpp"
#include "anisova/test_functions.hpp"

namespace fs = std::filesystem;
using namespace anisova;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Overrides {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m;
  std::optional<int> iterations;
  std::optional<double> snr_db;
  std::string out;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--n", o.n, "number of samples");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--m", o.m, "frequency budget |I|");
  cmd->add_option("--iterations", o.iterations, "refinement iterations");
  cmd->add_option("--snr-db", o.snr_db, "signal-to-noise ratio of the samples in dB");
  cmd->add_option("--out", o.out, "output file or directory");
}

// Config JSON with flag overrides applied.
Json LoadConfig(const Overrides& o) {
  Json j = o.config.empty() ? Json::object() : read_json_file(o.config);
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  if (o.n) j["n"] = *o.n;
  if (o.seed) j["seed"] = *o.seed;
  if (o.m) j["m"] = *o.m;
  if (o.iterations) j["iterations"] = *o.iterations;
  if (o.snr_db) j["snr_db"] = *o.snr_db;
  if (!o.out.empty()) j["output_dir"] = o.out;
  return j;
}

std::string Require(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::kConfig, std::string("config needs \"") + key + "\" (a file path)");
  }
  return j.at(key).get<std::string>();
}

// Training samples: from a CSV when "samples" is given, else drawn from the
// configured test function.
SamplingSet TrainingSamples(const Json& j, const ExperimentConfig& cfg) {
  if (j.contains("samples")) return read_sampling_csv(Require(j, "samples"));
  std::optional<NoiseSpec> noise;
  if (cfg.snr_db) noise = NoiseSpec{*cfg.snr_db, cfg.seed};
  return sample(test_function(cfg.function), cfg.n, cfg.seed, noise);
}

fs::path OutPath(const Overrides& o, const char* fallback) {
  return o.out.empty() ? fs::path(fallback) : fs::path(o.out);
}

int Generate(const Overrides& o) {
  const Json j = LoadConfig(o);
  const ExperimentConfig cfg = experiment_from_json(j);
  cfg.validate();
  std::optional<NoiseSpec> noise;
  if (cfg.snr_db) noise = NoiseSpec{*cfg.snr_db, cfg.seed};
  const SamplingSet x = sample(test_function(cfg.function), cfg.n, cfg.seed, noise);
  const fs::path out = OutPath(o, "samples.csv");
  write_sampling_csv(out, x);
  fs::path sidecar = out;
  sidecar.replace_extension(".json");
  write_json_file(sidecar, sampling_sidecar(cfg.function, x, cfg.seed));
  std::printf("wrote %zu samples to %s\n", x.n(), out.c_str());
  return 0;
}

GroupedIndexSet IndexSetFromConfig(const Json& j, const ExperimentConfig& cfg, int d) {
  if (j.contains("index_set")) {
    const Json& s = j.at("index_set");
    return index_set_from_json(s.is_string() ? read_json_file(s.get<std::string>()) : s);
  }
  if (j.contains("plan")) return plan_from_json(read_json_file(Require(j, "plan"))).index_set(d);
  std::vector<AnovaTerm> terms = cfg.terms;
  if (terms.empty()) {
    if (!j.contains("function")) {
      throw Error(ErrorCode::kConfig, "config needs \"index_set\", \"plan\", \"terms\" or \"function\"");
    }
    terms = test_function(cfg.function).known_terms;
  }
  return init_plan(terms, cfg.budget(), cfg.min_bandwidth).index_set(d);
}

int Fit(const Overrides& o) {
  const Json j = LoadConfig(o);
  const ExperimentConfig cfg = experiment_from_json(j);
  cfg.validate();
  const SamplingSet x = TrainingSamples(j, cfg);
  const GroupedIndexSet set = IndexSetFromConfig(j, cfg, x.d);
  const AnovaApproximation approx = fit(x, set, cfg.fit);
  Json out = to_json(approx);
  out["fcv"] = set.size() < x.n()
                   ? Json(fcv_score(approx.fit.residual_sum_squares, x.n(), set.size()))
                   : Json(nullptr);
  write_json_file(OutPath(o, "approximation.json"), out);
  std::printf("|I| = %zu, relative residual %.6g, %d LSQR iterations\n", set.size(),
              approx.fit.relative_residual, approx.fit.iterations);
  return 0;
}

int Learn(const Overrides& o) {
  const Json j = LoadConfig(o);
  const AnovaApproximation approx = approximation_from_json(read_json_file(Require(j, "approximation")));
  const SmoothnessEstimate est = learn(approx);
  write_json_file(OutPath(o, "estimate.json"), to_json(est));
  for (const auto& t : est.terms) {
    for (int dim : t.J) {
      std::printf("term %s dim %d: D = %.6g, s = %.4f\n", t.term.label().c_str(), dim,
                  t.D.at(dim), t.s.at(dim));
    }
  }
  return 0;
}

int Optimize(const Overrides& o) {
  const Json j = LoadConfig(o);
  const ExperimentConfig cfg = experiment_from_json(j);
  cfg.validate();
  BandwidthPlan plan;
  if (j.contains("estimate")) {
    const SmoothnessEstimate est = smoothness_from_json(read_json_file(Require(j, "estimate")));
    const BandwidthPlan previous = plan_from_json(read_json_file(Require(j, "plan")));
    if (auto p = problem_from_estimate(previous, est, cfg.budget(), cfg.min_bandwidth)) {
      plan = optimize(*p);
    } else {
      LogWarning("estimate has no learned dimensions; keeping the previous plan");
      plan = previous;
    }
  } else {
    std::vector<AnovaTerm> terms = cfg.terms;
    if (terms.empty()) terms = test_function(cfg.function).known_terms;
    plan = init_plan(terms, cfg.budget(), cfg.min_bandwidth);
  }
  write_json_file(OutPath(o, "plan.json"), to_json(plan));
  std::printf("|I| = %zu: %s\n", plan.realized_cardinality, format_bandwidths(plan).c_str());
  return 0;
}

int Iterate(const Overrides& o) {
  const Json j = LoadConfig(o);
  const ExperimentConfig cfg = experiment_from_json(j);
  cfg.validate();
  const SamplingSet x = TrainingSamples(j, cfg);
  const TestFunction f = test_function(cfg.function);
  const fs::path dir = cfg.output_dir;
  std::vector<IterationRecord> log;
  // Flush after every iteration so a failure keeps the partial log.
  const auto records = refine_loop(cfg, x, f, [&](const IterationRecord& r) {
    log.push_back(r);
    report(log, dir, "iterate");
    std::printf("iteration %d: |I| = %zu, L2 error %.6g\n", r.iteration,
                r.plan.realized_cardinality, r.l2_error);
    std::fflush(stdout);
  });
  write_json_file(dir / "config.json", to_json(cfg));
  return 0;
}

int CvSweep(const Overrides& o) {
  Json j = LoadConfig(o);
  if (!j.contains("snr_db")) j["snr_db"] = 50.0;
  const ExperimentConfig cfg = experiment_from_json(j);
  cfg.validate();
  const SamplingSet x = TrainingSamples(j, cfg);
  const TestFunction f = test_function(cfg.function);
  const fs::path dir = cfg.output_dir;
  std::vector<IterationRecord> log;
  const auto rounds = cv_sweep_loop(cfg, x, f, [&](const IterationRecord& r) {
    log.push_back(r);
    report(log, dir, "cv_sweep");
  });
  Json summary = Json::array();
  for (const auto& r : rounds) {
    summary.push_back({{"round", r.round}, {"m_star", r.m_star}, {"estimate", to_json(r.estimate)}});
    std::printf("round %d: m* = %zu\n", r.round, r.m_star);
  }
  write_json_file(dir / "cv_rounds.json", summary);
  write_json_file(dir / "config.json", to_json(cfg));
  return 0;
}

int Evaluate(const Overrides& o) {
  const Json j = LoadConfig(o);
  const ExperimentConfig cfg = experiment_from_json(j);
  const AnovaApproximation approx = approximation_from_json(read_json_file(Require(j, "approximation")));
  if (j.contains("points")) {
    const SamplingSet x = read_sampling_csv(Require(j, "points"));
    const auto g = evaluate(approx, x.points, cfg.fit.backend);
    const fs::path out = OutPath(o, "values.csv");
    std::FILE* fp = std::fopen(out.c_str(), "w");
    if (!fp) throw Error(ErrorCode::kIo, "cannot write " + out.string());
    for (int k = 1; k <= x.d; ++k) std::fprintf(fp, "x%d,", k);
    std::fprintf(fp, "g_re,g_im\n");
    double rss = 0.0;
    for (std::size_t i = 0; i < x.n(); ++i) {
      for (double p : x.point(i)) std::fprintf(fp, "%.17g,", p);
      std::fprintf(fp, "%.17g,%.17g\n", g[i].real(), g[i].imag());
      rss += std::norm(g[i] - x.values[i]);
    }
    if (std::fclose(fp) != 0) throw Error(ErrorCode::kIo, "write failed for " + out.string());
    std::printf("rms deviation from the CSV values: %.6g\n", std::sqrt(rss / double(x.n())));
    return 0;
  }
  if (!j.contains("function")) {
    throw Error(ErrorCode::kConfig, "evaluate needs \"points\" or \"function\"");
  }
  cfg.validate();
  const TestFunction f = test_function(cfg.function);
  if (f.d != approx.index_set.d()) {
    throw Error(ErrorCode::kDimensionMismatch, "approximation and function dimension differ");
  }
  const double l2 = l2_test_error(approx, f.as_point_function(), cfg.n_test, cfg.test_seed,
                                  cfg.fit.backend);
  write_json_file(OutPath(o, "evaluation.json"),
                  {{"function", cfg.function}, {"n_test", cfg.n_test}, {"l2_error", l2}});
  std::printf("L2 error %.6g over %zu test points\n", l2, cfg.n_test);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anisotropic ANOVA approximation"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "progress output");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Overrides&);
  };
  const Command commands[] = {
      {"generate", "sample a test function to CSV", Generate},
      {"fit", "least squares fit on an index set", Fit},
      {"learn", "learn smoothness from a fitted approximation", Learn},
      {"optimize", "allocate a frequency budget", Optimize},
      {"iterate", "refinement loop on exact samples", Iterate},
      {"cv-sweep", "budget sweep scored by fast cross-validation", CvSweep},
      {"evaluate", "evaluate an approximation", Evaluate},
  };
  Overrides overrides[std::size(commands)];
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    AddCommon(sub, overrides[i]);
    sub->add_flag("-v,--verbose", verbose, "progress output");
    sub->add_flag("-q,--quiet", quiet, "suppress warnings");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  SetLogLevel(quiet ? LogLevel::kQuiet : verbose ? LogLevel::kInfo : LogLevel::kWarning);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(overrides[i]);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", ErrorCodeName(e.code()), e.what());
    return IsConfigError(e.code()) ? kExitConfig : kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}
