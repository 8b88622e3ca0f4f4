#include "anisova/json_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "anisova/error.hpp"

namespace anisova {
namespace {

template <typename F>
auto Guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("malformed ") + what + ": " + e.what());
  }
}

Json MapToJson(const std::map<int, double>& m) {
  Json out = Json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double ParseDouble(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) {
    throw Error(ErrorCode::kConfig,
                "bad number '" + s + "' on line " + std::to_string(line));
  }
  return v;
}

}  // namespace

Json to_json(const AnovaTerm& term) { return term.dims(); }

AnovaTerm term_from_json(const Json& j) {
  return Guard("term", [&] { return AnovaTerm(j.get<std::vector<int>>()); });
}

Json to_json(const GroupedIndexSet& set) {
  Json terms = Json::array();
  for (const auto& box : set.boxes()) {
    terms.push_back({{"dims", box.term().dims()}, {"bandwidths", box.bandwidths()}});
  }
  return {{"d", set.d()},
          {"constant", set.includes_constant()},
          {"size", set.size()},
          {"terms", terms}};
}

GroupedIndexSet index_set_from_json(const Json& j) {
  return Guard("index set", [&] {
    std::vector<std::pair<AnovaTerm, BandwidthVector>> terms;
    for (const auto& t : j.at("terms")) {
      terms.emplace_back(AnovaTerm(t.at("dims").get<std::vector<int>>()),
                         t.at("bandwidths").get<BandwidthVector>());
    }
    return build_grouped(j.at("d").get<int>(), terms,
                         j.value("constant", j.value("include_constant", true)));
  });
}

Json to_json(const FitDiagnostics& fit) {
  return {{"iterations", fit.iterations},
          {"relative_residual", fit.relative_residual},
          {"normal_residual", fit.normal_residual},
          {"converged", fit.converged},
          {"undersampled", fit.undersampled},
          {"residual_sum_squares", fit.residual_sum_squares},
          {"n_samples", fit.n_samples}};
}

FitDiagnostics fit_from_json(const Json& j) {
  return Guard("fit diagnostics", [&] {
    FitDiagnostics f;
    f.iterations = j.value("iterations", 0);
    f.relative_residual = j.value("relative_residual", 0.0);
    f.normal_residual = j.value("normal_residual", 0.0);
    f.converged = j.value("converged", false);
    f.undersampled = j.value("undersampled", false);
    f.residual_sum_squares = j.value("residual_sum_squares", 0.0);
    f.n_samples = j.value("n_samples", std::size_t{0});
    return f;
  });
}

Json to_json(const AnovaApproximation& approx) {
  Json coeffs = Json::array();
  for (std::size_t i = 0; i < approx.coefficients.size(); ++i) {
    const Complex c = approx.coefficients[i];
    coeffs.push_back({{"k", approx.index_set.frequency(i)}, {"re", c.real()}, {"im", c.imag()}});
  }
  return {{"index_set", to_json(approx.index_set)},
          {"coefficients", coeffs},
          {"fit", to_json(approx.fit)}};
}

AnovaApproximation approximation_from_json(const Json& j) {
  AnovaApproximation a;
  a.index_set = index_set_from_json(Guard("approximation", [&] { return j.at("index_set"); }));
  Guard("approximation", [&] {
    for (const auto& c : j.at("coefficients")) {
      if (c.contains("k") && c.at("k").get<Frequency>() != a.index_set.frequency(a.coefficients.size())) {
        throw Error(ErrorCode::kInconsistency, "coefficient frequencies out of enumeration order");
      }
      a.coefficients.emplace_back(c.at("re").get<double>(), c.at("im").get<double>());
    }
    if (j.contains("fit")) a.fit = fit_from_json(j.at("fit"));
    return 0;
  });
  if (a.coefficients.size() != a.index_set.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient count does not match index set size");
  }
  return a;
}

Json to_json(const SmoothnessEstimate& est) {
  Json terms = Json::array();
  for (const auto& t : est.terms) {
    Json cut = Json::object();
    for (const auto& [k, v] : t.cutoff) cut[std::to_string(k)] = v;
    terms.push_back({{"dims", t.term.dims()},
                     {"J", t.J},
                     {"D", MapToJson(t.D)},
                     {"s", MapToJson(t.s)},
                     {"cutoff", cut}});
  }
  return {{"floor_c", est.floor_c},
          {"floor_all_zero", est.floor_all_zero},
          {"terms", terms}};
}

SmoothnessEstimate smoothness_from_json(const Json& j) {
  return Guard("smoothness estimate", [&] {
    SmoothnessEstimate est;
    est.floor_c = j.value("floor_c", 0.0);
    est.floor_all_zero = j.value("floor_all_zero", false);
    for (const auto& t : j.at("terms")) {
      TermSmoothness ts;
      ts.term = AnovaTerm(t.at("dims").get<std::vector<int>>());
      ts.J = t.value("J", std::vector<int>{});
      const Json d = t.value("D", Json::object());
      const Json s = t.value("s", Json::object());
      const Json cut = t.value("cutoff", Json::object());
      for (const auto& [k, v] : d.items()) ts.D[std::stoi(k)] = v.get<double>();
      for (const auto& [k, v] : s.items()) ts.s[std::stoi(k)] = v.get<double>();
      for (const auto& [k, v] : cut.items()) ts.cutoff[std::stoi(k)] = v.get<int>();
      for (int dim : ts.J) {
        if (!ts.D.count(dim) || !ts.s.count(dim)) {
          throw Error(ErrorCode::kConfig, "estimate for term " + ts.term.label() +
                                              " lacks D or s for dim " + std::to_string(dim));
        }
      }
      est.terms.push_back(std::move(ts));
    }
    return est;
  });
}

Json to_json(const BandwidthPlan& plan) {
  Json terms = Json::array();
  for (std::size_t u = 0; u < plan.terms.size(); ++u) {
    Json t = {{"dims", plan.terms[u].dims()}, {"bandwidths", plan.bandwidths[u]}};
    if (u < plan.continuous.size()) t["continuous"] = plan.continuous[u];
    terms.push_back(t);
  }
  return {{"realized_cardinality", plan.realized_cardinality},
          {"lambda", plan.lambda},
          {"terms", terms}};
}

BandwidthPlan plan_from_json(const Json& j) {
  return Guard("bandwidth plan", [&] {
    BandwidthPlan plan;
    plan.lambda = j.value("lambda", 0.0);
    std::size_t card = 1;
    for (const auto& t : j.at("terms")) {
      plan.terms.emplace_back(t.at("dims").get<std::vector<int>>());
      plan.bandwidths.push_back(t.at("bandwidths").get<BandwidthVector>());
      if (plan.bandwidths.back().size() != plan.terms.back().size()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "bandwidths do not match term " + plan.terms.back().label());
      }
      std::size_t p = 1;
      for (int m : plan.bandwidths.back()) p *= static_cast<std::size_t>(std::max(m - 1, 0));
      card += p;
      if (t.contains("continuous")) plan.continuous.push_back(t.at("continuous").get<std::vector<double>>());
    }
    plan.realized_cardinality = card;
    return plan;
  });
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void write_sampling_csv(const std::filesystem::path& path, const SamplingSet& x) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (int j = 1; j <= x.d; ++j) std::fprintf(f, "x%d,", j);
  std::fprintf(f, "y_re,y_im\n");
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (double p : x.point(i)) std::fprintf(f, "%.17g,", p);
    std::fprintf(f, "%.17g,%.17g\n", x.values[i].real(), x.values[i].imag());
  }
  if (std::fclose(f) != 0) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

SamplingSet read_sampling_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kConfig, path.string() + " is empty");
  const auto header = SplitCsv(line);
  if (header.size() < 3 || header[header.size() - 2] != "y_re" || header.back() != "y_im") {
    throw Error(ErrorCode::kConfig, path.string() + ": expected header x1..xd,y_re,y_im");
  }
  SamplingSet x;
  x.d = static_cast<int>(header.size() - 2);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kConfig, path.string() + ": wrong column count on line " +
                                          std::to_string(lineno));
    }
    for (int j = 0; j < x.d; ++j) x.points.push_back(ParseDouble(cells[static_cast<std::size_t>(j)], lineno));
    x.values.emplace_back(ParseDouble(cells[cells.size() - 2], lineno),
                          ParseDouble(cells.back(), lineno));
  }
  x.validate();
  return x;
}

Json sampling_sidecar(const std::string& function, const SamplingSet& x,
                      std::uint64_t seed) {
  Json j = {{"function", function}, {"d", x.d}, {"n", x.n()}, {"seed", seed}};
  if (x.noise) {
    j["snr_db"] = x.noise->snr_db;
    j["sigma2"] = x.noise->sigma2;
    j["noise_seed"] = x.noise->seed;
  } else {
    j["snr_db"] = nullptr;
    j["sigma2"] = 0.0;
  }
  return j;
}

}  // namespace anisova
