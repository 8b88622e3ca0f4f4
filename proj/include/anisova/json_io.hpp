#ifndef ANISOVA_JSON_IO_HPP_
#define ANISOVA_JSON_IO_HPP_

#include <filesystem>
#include <string>

#include "anisova/bandwidth_opt.hpp"
#include "anisova/fourier_operator.hpp"
#include "anisova/index_sets.hpp"
#include "anisova/least_squares.hpp"
#include "anisova/smoothness.hpp"
#include "json.hpp"

namespace anisova {

using Json = nlohmann::json;

Json to_json(const AnovaTerm& term);
AnovaTerm term_from_json(const Json& j);

// {"d", "constant", "size", "terms": [{"dims", "bandwidths"}]}
Json to_json(const GroupedIndexSet& set);
GroupedIndexSet index_set_from_json(const Json& j);

Json to_json(const FitDiagnostics& fit);
FitDiagnostics fit_from_json(const Json& j);

// Index set, coefficients as {"k", "re", "im"} in enumeration order,
// diagnostics.
Json to_json(const AnovaApproximation& approx);
AnovaApproximation approximation_from_json(const Json& j);

Json to_json(const SmoothnessEstimate& est);
SmoothnessEstimate smoothness_from_json(const Json& j);

Json to_json(const BandwidthPlan& plan);
BandwidthPlan plan_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// Header x1..xd,y_re,y_im; values printed with 17 significant digits.
void write_sampling_csv(const std::filesystem::path& path, const SamplingSet& x);
SamplingSet read_sampling_csv(const std::filesystem::path& path);

// {function, d, n, seed, snr_db, sigma2}
Json sampling_sidecar(const std::string& function, const SamplingSet& x,
                      std::uint64_t seed);

}  // namespace anisova

#endif  // ANISOVA_JSON_IO_HPP_
