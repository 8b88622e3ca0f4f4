#ifndef ANISOVA_PIPELINE_HPP_
#define ANISOVA_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "anisova/bandwidth_opt.hpp"
#include "anisova/json_io.hpp"
#include "anisova/least_squares.hpp"
#include "anisova/smoothness.hpp"
#include "anisova/test_functions.hpp"

namespace anisova {

struct CvSweepConfig {
  // Empty means the default 20-point geometric grid on [300, 10000].
  std::vector<std::size_t> m_values;
  int rounds = 3;
};

struct ExperimentConfig {
  std::string function = "d2";
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  int iterations = 9;
  // Frequency budget |I|; 0 means the largest m with m log m <= n.
  std::size_t m = 0;
  // Noise for the training samples; none means exact samples.
  std::optional<double> snr_db;
  CvSweepConfig cv;
  std::size_t n_test = 1000000;
  std::uint64_t test_seed = 0x5eed;
  // ANOVA terms to use; empty means the function's known terms.
  std::vector<AnovaTerm> terms;
  int min_bandwidth = 4;
  FitConfig fit;
  std::string output_dir = ".";

  void validate() const;
  std::size_t budget() const;
};

ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);

struct IterationRecord {
  int round = 0;
  int iteration = 0;
  std::size_t m = 0;
  BandwidthPlan plan;
  SmoothnessEstimate learned;
  double l2_error = 0.0;
  // l2_error^2 plus the realised noise variance (equals l2_error^2 without
  // noise).
  double l2_sq_plus_sigma2 = 0.0;
  // NaN when |I| >= n.
  double fcv = 0.0;
  FitDiagnostics fit;
  double wall_time = 0.0;
};

Json to_json(const IterationRecord& rec);

// Plan from C = 1, s = 1 for every dim of every term.
BandwidthPlan init_plan(const std::vector<AnovaTerm>& terms, std::size_t m,
                        int min_bandwidth = 4);

// Allocation problem from a learned estimate: dims in J_u use (D, s), all
// others keep their bandwidth from `previous`. Returns nullopt when no term
// learned anything.
std::optional<AllocationProblem> problem_from_estimate(
    const BandwidthPlan& previous, const SmoothnessEstimate& est,
    std::size_t m, int min_bandwidth = 4);

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi,
                                        int count);

using RecordSink = std::function<void(const IterationRecord&)>;

// Fit, learn, re-plan for cfg.iterations rounds on fixed training samples.
std::vector<IterationRecord> refine_loop(const ExperimentConfig& cfg,
                                         const SamplingSet& train,
                                         const TestFunction& f,
                                         const RecordSink& sink = {});

struct CvRound {
  int round = 0;
  std::size_t m_star = 0;
  std::vector<IterationRecord> records;
  SmoothnessEstimate estimate;
};

// Per round: fit every grid budget, pick the FCV minimiser, learn from it.
std::vector<CvRound> cv_sweep_loop(const ExperimentConfig& cfg,
                                   const SamplingSet& train,
                                   const TestFunction& f,
                                   const RecordSink& sink = {});

// Fixed CSV schema for iteration records.
const std::vector<std::string>& report_columns();
// "[0]=12;[1]=8;[0 1]=10x6"
std::string format_bandwidths(const BandwidthPlan& plan);
std::string report_csv(const std::vector<IterationRecord>& records);
// Writes <stem>.csv and <stem>.json into dir.
void report(const std::vector<IterationRecord>& records,
            const std::filesystem::path& dir, const std::string& stem);

}  // namespace anisova

#endif  // ANISOVA_PIPELINE_HPP_
