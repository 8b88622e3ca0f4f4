#include "anisova/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "anisova/error.hpp"
#include "anisova/log.hpp"

namespace anisova {
namespace {

std::string Num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json NumOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double NoiseVariance(const SamplingSet& x) { return x.noise ? x.noise->sigma2 : 0.0; }

std::vector<AnovaTerm> TermsFor(const ExperimentConfig& cfg, const TestFunction& f) {
  return cfg.terms.empty() ? f.known_terms : cfg.terms;
}

// Fit on a plan and fill everything but round/iteration.
IterationRecord FitAndScore(const ExperimentConfig& cfg, const SamplingSet& train,
                            const TestFunction& f, const BandwidthPlan& plan,
                            std::size_t m, AnovaApproximation* approx_out) {
  const auto start = std::chrono::steady_clock::now();
  IterationRecord rec;
  rec.m = m;
  rec.plan = plan;
  AnovaApproximation approx = fit(train, plan.index_set(train.d), cfg.fit);
  rec.fit = approx.fit;
  rec.learned = learn(approx);
  rec.l2_error = l2_test_error(approx, f.as_point_function(), cfg.n_test,
                               cfg.test_seed, cfg.fit.backend);
  rec.l2_sq_plus_sigma2 = rec.l2_error * rec.l2_error + NoiseVariance(train);
  rec.fcv = approx.index_set.size() < train.n()
                ? fcv_score(approx.fit.residual_sum_squares, train.n(),
                            approx.index_set.size())
                : std::numeric_limits<double>::quiet_NaN();
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (approx_out) *approx_out = std::move(approx);
  return rec;
}

void CheckTrain(const ExperimentConfig& cfg, const SamplingSet& train, const TestFunction& f) {
  if (train.d != f.d) {
    throw Error(ErrorCode::kDimensionMismatch, "training samples do not match function dimension");
  }
  for (const auto& t : TermsFor(cfg, f)) {
    if (t.empty() || t.dims().back() >= f.d) {
      throw Error(ErrorCode::kOutOfRange, "term " + t.label() + " does not fit d = " + std::to_string(f.d));
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto names = test_function_names();
  if (std::find(names.begin(), names.end(), function) == names.end()) {
    throw Error(ErrorCode::kConfig, "unknown function '" + function + "'");
  }
  if (n < 1) throw Error(ErrorCode::kConfig, "n must be >= 1");
  if (iterations < 1) throw Error(ErrorCode::kConfig, "iterations must be >= 1");
  if (n_test < 1) throw Error(ErrorCode::kConfig, "n_test must be >= 1");
  if (cv.rounds < 1) throw Error(ErrorCode::kConfig, "cv rounds must be >= 1");
  if (!std::is_sorted(cv.m_values.begin(), cv.m_values.end())) {
    throw Error(ErrorCode::kConfig, "cv grid must be sorted ascending");
  }
  if (snr_db && !std::isfinite(*snr_db)) throw Error(ErrorCode::kConfig, "snr_db must be finite");
  if (min_bandwidth < 2 || min_bandwidth % 2) {
    throw Error(ErrorCode::kConfig, "min_bandwidth must be even and >= 2");
  }
  std::set<AnovaTerm> seen;
  for (const auto& t : terms) {
    if (t.empty()) throw Error(ErrorCode::kDegenerateTerm, "empty ANOVA term in config");
    if (!seen.insert(t).second) throw Error(ErrorCode::kDuplicateTerm, "duplicate term " + t.label());
  }
  fit.validate();
}

std::size_t ExperimentConfig::budget() const { return m > 0 ? m : plan_budget(n); }

ExperimentConfig experiment_from_json(const Json& j) {
  static const std::set<std::string> known = {
      "function", "n", "seed", "iterations", "m", "snr_db", "cv", "n_test",
      "test_seed", "terms", "min_bandwidth", "fit", "output_dir",
      // inputs of the single-step CLI commands
      "samples", "index_set", "plan", "approximation", "estimate", "points"};
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error(ErrorCode::kConfig, "unknown config key '" + k + "'");
  }
  ExperimentConfig c;
  try {
    c.function = j.value("function", c.function);
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    c.iterations = j.value("iterations", c.iterations);
    c.m = j.value("m", c.m);
    if (j.contains("snr_db") && !j.at("snr_db").is_null()) c.snr_db = j.at("snr_db").get<double>();
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      c.cv.m_values = cv.value("m_values", c.cv.m_values);
      c.cv.rounds = cv.value("rounds", c.cv.rounds);
    }
    c.n_test = j.value("n_test", c.n_test);
    c.test_seed = j.value("test_seed", c.test_seed);
    if (j.contains("terms")) {
      for (const auto& t : j.at("terms")) c.terms.emplace_back(t.get<std::vector<int>>());
    }
    c.min_bandwidth = j.value("min_bandwidth", c.min_bandwidth);
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      c.fit.max_iter = f.value("max_iter", c.fit.max_iter);
      c.fit.rel_tol = f.value("rel_tol", c.fit.rel_tol);
      c.fit.oversampling_t = f.value("oversampling_t", c.fit.oversampling_t);
      c.fit.backend = f.value("backend", c.fit.backend);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::kConfig, std::string("bad term: ") + e.what());
  }
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json terms = Json::array();
  for (const auto& t : c.terms) terms.push_back(t.dims());
  return {{"function", c.function},
          {"n", c.n},
          {"seed", c.seed},
          {"iterations", c.iterations},
          {"m", c.m},
          {"snr_db", c.snr_db ? Json(*c.snr_db) : Json(nullptr)},
          {"cv", {{"m_values", c.cv.m_values}, {"rounds", c.cv.rounds}}},
          {"n_test", c.n_test},
          {"test_seed", c.test_seed},
          {"terms", terms},
          {"min_bandwidth", c.min_bandwidth},
          {"fit",
           {{"max_iter", c.fit.max_iter},
            {"rel_tol", c.fit.rel_tol},
            {"oversampling_t", c.fit.oversampling_t},
            {"backend", c.fit.backend}}},
          {"output_dir", c.output_dir}};
}

Json to_json(const IterationRecord& r) {
  return {{"round", r.round},
          {"iteration", r.iteration},
          {"m", r.m},
          {"cardinality", r.plan.realized_cardinality},
          {"plan", to_json(r.plan)},
          {"learned", to_json(r.learned)},
          {"l2_error", NumOrNull(r.l2_error)},
          {"l2_sq_plus_sigma2", NumOrNull(r.l2_sq_plus_sigma2)},
          {"fcv", NumOrNull(r.fcv)},
          {"fit", to_json(r.fit)},
          {"wall_time", r.wall_time}};
}

BandwidthPlan init_plan(const std::vector<AnovaTerm>& terms, std::size_t m,
                        int min_bandwidth) {
  AllocationProblem p;
  p.budget = m;
  p.min_bandwidth = min_bandwidth;
  for (const auto& t : terms) p.terms.push_back(uniform_term(t, 1.0, 1.0));
  return optimize(p);
}

std::optional<AllocationProblem> problem_from_estimate(
    const BandwidthPlan& previous, const SmoothnessEstimate& est,
    std::size_t m, int min_bandwidth) {
  AllocationProblem p;
  p.budget = m;
  p.min_bandwidth = min_bandwidth;
  bool any = false;
  for (std::size_t u = 0; u < previous.terms.size(); ++u) {
    const AnovaTerm& term = previous.terms[u];
    const TermSmoothness* ts = est.find(term);
    const auto k = term.size();
    TermProblem tp{term, std::vector<bool>(k, false), std::vector<double>(k, 0.0),
                   std::vector<double>(k, 0.0), previous.bandwidths[u]};
    for (std::size_t i = 0; i < k; ++i) {
      const int dim = term.dims()[i];
      if (ts && std::find(ts->J.begin(), ts->J.end(), dim) != ts->J.end()) {
        tp.learned[i] = true;
        tp.C[i] = ts->D.at(dim);
        tp.s[i] = ts->s.at(dim);
        any = true;
      }
    }
    p.terms.push_back(std::move(tp));
  }
  if (!any) return std::nullopt;
  return p;
}

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi, int count) {
  if (count < 1 || lo < 1 || hi < lo) throw Error(ErrorCode::kConfig, "bad grid bounds");
  std::vector<std::size_t> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const auto v = static_cast<std::size_t>(std::llround(
        std::exp(std::log(double(lo)) + t * (std::log(double(hi)) - std::log(double(lo))))));
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

std::vector<IterationRecord> refine_loop(const ExperimentConfig& cfg,
                                         const SamplingSet& train,
                                         const TestFunction& f,
                                         const RecordSink& sink) {
  cfg.validate();
  CheckTrain(cfg, train, f);
  const std::size_t m = cfg.budget();
  std::vector<IterationRecord> records;
  BandwidthPlan plan = init_plan(TermsFor(cfg, f), m, cfg.min_bandwidth);
  for (int it = 1; it <= cfg.iterations; ++it) {
    IterationRecord rec = FitAndScore(cfg, train, f, plan, m, nullptr);
    rec.iteration = it;
    LogInfo("iteration " + std::to_string(it) + ": |I| = " +
            std::to_string(plan.realized_cardinality) + ", L2 = " + Num(rec.l2_error));
    records.push_back(rec);
    if (sink) sink(records.back());
    if (it == cfg.iterations) break;
    if (auto p = problem_from_estimate(plan, rec.learned, m, cfg.min_bandwidth)) {
      plan = optimize(*p);
    } else {
      LogWarning("no smoothness learned in iteration " + std::to_string(it) +
                 "; keeping the previous plan");
    }
  }
  return records;
}

std::vector<CvRound> cv_sweep_loop(const ExperimentConfig& cfg,
                                   const SamplingSet& train,
                                   const TestFunction& f,
                                   const RecordSink& sink) {
  cfg.validate();
  CheckTrain(cfg, train, f);
  const auto terms = TermsFor(cfg, f);
  const std::vector<std::size_t> grid =
      cfg.cv.m_values.empty() ? geometric_grid(300, 10000, 20) : cfg.cv.m_values;

  std::vector<CvRound> rounds;
  std::optional<BandwidthPlan> best_plan;
  std::optional<SmoothnessEstimate> estimate;
  for (int r = 1; r <= cfg.cv.rounds; ++r) {
    CvRound round;
    round.round = r;
    double best_fcv = std::numeric_limits<double>::infinity();
    for (std::size_t m : grid) {
      BandwidthPlan plan;
      try {
        std::optional<AllocationProblem> p;
        if (best_plan && estimate) p = problem_from_estimate(*best_plan, *estimate, m, cfg.min_bandwidth);
        plan = p ? optimize(*p) : init_plan(terms, m, cfg.min_bandwidth);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible) throw;
        LogWarning("skipping m = " + std::to_string(m) + ": " + e.what());
        continue;
      }
      if (plan.realized_cardinality >= train.n()) {
        LogWarning("skipping m = " + std::to_string(m) + ": |I| >= n");
        continue;
      }
      IterationRecord rec = FitAndScore(cfg, train, f, plan, m, nullptr);
      rec.round = r;
      rec.iteration = static_cast<int>(round.records.size()) + 1;
      LogInfo("round " + std::to_string(r) + " m = " + std::to_string(m) +
              ": FCV = " + Num(rec.fcv) + ", L2 = " + Num(rec.l2_error));
      if (rec.fcv < best_fcv) {
        best_fcv = rec.fcv;
        round.m_star = m;
      }
      round.records.push_back(std::move(rec));
      if (sink) sink(round.records.back());
    }
    if (round.records.empty()) {
      throw Error(ErrorCode::kInfeasible, "no feasible budget in the CV grid");
    }
    for (const auto& rec : round.records) {
      if (rec.m == round.m_star) {
        best_plan = rec.plan;
        round.estimate = rec.learned;
        estimate = rec.learned;
      }
    }
    rounds.push_back(std::move(round));
  }
  return rounds;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "round", "iteration", "m", "cardinality", "fcv", "l2_error",
      "l2_sq_plus_sigma2", "lsqr_iterations", "relative_residual", "bandwidths"};
  return cols;
}

std::string format_bandwidths(const BandwidthPlan& plan) {
  std::string out;
  for (std::size_t u = 0; u < plan.terms.size(); ++u) {
    if (u) out += ';';
    out += '[';
    for (std::size_t i = 0; i < plan.terms[u].size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(plan.terms[u].dims()[i]);
    }
    out += "]=";
    for (std::size_t i = 0; i < plan.bandwidths[u].size(); ++i) {
      if (i) out += 'x';
      out += std::to_string(plan.bandwidths[u][i]);
    }
  }
  return out;
}

std::string report_csv(const std::vector<IterationRecord>& records) {
  std::string out;
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.round) + ',' + std::to_string(r.iteration) + ',' +
           std::to_string(r.m) + ',' + std::to_string(r.plan.realized_cardinality) + ',' +
           Num(r.fcv) + ',' + Num(r.l2_error) + ',' + Num(r.l2_sq_plus_sigma2) + ',' +
           std::to_string(r.fit.iterations) + ',' + Num(r.fit.relative_residual) + ',' +
           format_bandwidths(r.plan) + '\n';
  }
  return out;
}

void report(const std::vector<IterationRecord>& records,
            const std::filesystem::path& dir, const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / (stem + ".csv"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / (stem + ".csv")).string());
    out << report_csv(records);
    if (!out) throw Error(ErrorCode::kIo, "write failed in " + dir.string());
  }
  Json log = Json::array();
  for (const auto& r : records) log.push_back(to_json(r));
  write_json_file(dir / (stem + ".json"), log);
}

}  // namespace anisova
