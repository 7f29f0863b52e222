#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stpq/cubature.hpp"
#include "stpq/stp.hpp"

namespace stpq {

/// "name:key=value,key=value".
struct NamedOptions {
  std::string name;
  std::map<std::string, std::string> options;

  static NamedOptions parse(const std::string& text);
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
};

/// Family for `spec` in dimension d. QMC and MC families sample `target`
/// natively; rule-based families live on their own domain.
CubatureFamily make_family(const std::string& spec, int d, Domain target);

/// Model by id: synthetic, mixed-logit, mnp, mnp-gmm, mixed-probit.
NestedIntegrand make_model(const std::string& spec);

/// Names accepted by make_model and make_family, with one-line descriptions.
std::vector<std::pair<std::string, std::string>> model_catalog();
std::vector<std::pair<std::string, std::string>> family_catalog();

enum class StudyMode { ftp, stp, both };

struct StudyConfig {
  std::string model = "synthetic";
  std::string outer = "mc";
  std::string inner = "mc";
  StudyMode mode = StudyMode::both;
  std::optional<double> sigma = 1.0;  ///< nullopt: balance with sigma_plan
  std::vector<double> L = {4, 5, 6, 7, 8};
  std::vector<std::uint64_t> seeds;  ///< empty: 0..19 if either family is randomized, else {0}
  std::string out;
  int threads = 1;
  bool timing = true;  ///< write measured wall_ms, else 0

  /// Applies one key/value pair; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

/// Flat "key = value" text, '#' starts a comment.
StudyConfig parse_config(std::istream& in, StudyConfig base = {});
StudyConfig load_config(const std::string& path, StudyConfig base = {});

/// "4..12", "4..12:2" or "4,5,6.5".
std::vector<double> parse_levels(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

struct ConvergenceRecord {
  std::string mode;
  double L = 0;
  long long N = 0;
  double value = 0;
  std::optional<double> rel_error;
  std::optional<double> abs_error;
  long long clamp_count = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0;

  bool operator==(const ConvergenceRecord&) const = default;
};

inline constexpr const char* kCsvHeader = "mode,L,N,value,rel_error,abs_error,clamp_count,seed,wall_ms";

struct StudyOutcome {
  std::vector<ConvergenceRecord> records;
  std::vector<std::string> errors;  ///< one message per failed cell
  double sigma = 1.0;
  bool ok() const { return errors.empty(); }
};

/// One record per (mode, L, seed) in that order; failed cells carry nan.
StudyOutcome run_study(const StudyConfig& config);

void write_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records);
std::vector<ConvergenceRecord> read_csv(std::istream& is);

enum class ErrorMeasure { abs, rel };

/// Least-squares slope of log2(error) against log2(N), using the per-N median;
/// errors <= 0 or non-finite are dropped, fewer than 4 survivors is an error.
double fit_slope(const std::vector<double>& N, const std::vector<double>& error);

/// Slope over records of one mode whose N lies in work_range.
double fit_slope(const std::vector<ConvergenceRecord>& records, const std::string& mode,
                 std::pair<double, double> work_range, ErrorMeasure measure = ErrorMeasure::abs);

}  // namespace stpq
