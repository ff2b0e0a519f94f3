#pragma once

#include "lifespan/odelab.hpp"
#include "lifespan/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lifespan::experiment {

inline constexpr std::string_view version = "0.1.0";

enum class Mode { orlicz_check, testfn_check, odelab, simulate, sweep, fit, report };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

/// Configuration problem tied to one key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  Mode mode = Mode::simulate;

  // Physics.
  int n = 1;
  double gamma = 2.0;
  double mu = 1.0;
  double lambda = 2.0;
  std::vector<double> eps{0.05};
  int bump_k = 2;

  // Resolution and detection.
  double dr = 1e-3;
  double cfl = 0.45;
  double dt_out = 0.0;
  double horizon = 1000.0;
  /// Evolved band behind the front; 0 evolves everything. simulate ignores it
  /// when dt_out > 0 because the recorded F integrates over the whole domain.
  double window = 2.0;
  double threshold = 0.0;
  double growth_factor = 5.0;
  solver::GrowthReference growth_reference = solver::GrowthReference::running_min;
  solver::Limiter limiter = solver::Limiter::mc;
  std::string backend = "euler";
  /// Rerun the sweep with growth_factor halved and doubled.
  bool sensitivity = false;

  // Fitting.
  double min_span = 2.0;
  int min_points = 3;

  // ODE lab.
  double alpha = 1.0;
  double beta = 1.0;
  int samples = 100;

  std::uint64_t seed = 1;
  int jobs = 0;  ///< 0 means the number of hardware threads
  std::string out;
  std::string input;

  /// Throws ConfigError naming the first offending key.
  void validate() const;
  int resolved_jobs() const;
};

/// Sets one key from its text value. Throws ConfigError on unknown keys,
/// malformed values and out-of-range values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` text with optional [section] headers and # or ; comments.
/// Section names are ignored; keys must be unique across the file.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// "0.02,0.05,0.1" or a log range "lo:hi:count".
std::vector<double> parse_eps(const std::string& text);

nlohmann::json to_json(const ExperimentConfig& cfg);

/// Theoretical lifespan law for the PDE, keyed by dimension, damping class and mu.
struct TargetExponent {
  bool available = false;
  odelab::FitMode mode = odelab::FitMode::power;
  double slope = 0.0;  ///< power mode: exponent of eps; exponential mode: unused
  double band = 0.0;
  std::string law;
};
TargetExponent target_exponent(int n, double lambda, double mu);

/// Lifespan law of the blow-up ODE: -alpha/(1-lambda) for lambda < 1,
/// exp(C eps^-alpha) at lambda = 1.
TargetExponent ode_target_exponent(double lambda, double alpha);

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string bound;
  bool pass = false;
};

struct SuiteResult {
  std::vector<CheckResult> checks;
  bool all_pass() const;
  void add(std::string name, double value, std::string bound, bool pass);
};

/// Orlicz inequality, multiplicativity and Hoelder checks for each gamma.
SuiteResult orlicz_suite(const std::vector<double>& gammas, std::uint64_t seed, int holder_pairs);
/// Young-inequality, Legendre and inverse-ratio checks only.
SuiteResult orlicz_inequality_suite(const std::vector<double>& gammas);
SuiteResult multiplicativity_suite();
SuiteResult holder_suite(const std::vector<double>& gammas, std::uint64_t seed, int pairs);
/// Test-function identities and bands.
SuiteResult testfn_suite();

struct OdeSweep {
  std::vector<odelab::ScalingRecord> records;
  std::vector<odelab::OdeLifespan> runs;
};
OdeSweep ode_sweep(double lambda, const odelab::PiecewisePowerN& N, const std::vector<double>& eps, int jobs);

/// One lifespan run as configured (backend, detection, window).
solver::LifespanRecord run_one(const ExperimentConfig& cfg, double epsilon,
                               const solver::Observer& observer = {});

/// Runs cfg.eps concurrently, each run written atomically to runs/, merged
/// into a list sorted by epsilon.
std::vector<solver::LifespanRecord> sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir);

void write_lifespans_csv(std::ostream& out, const std::vector<solver::LifespanRecord>& records);
std::vector<solver::LifespanRecord> read_lifespans_csv(const std::filesystem::path& path);

nlohmann::json fit_json(const odelab::ScalingFit& fit, const TargetExponent& target);

/// Dispatches on cfg.mode, writes artifacts and a manifest under the output
/// directory and returns the exit code (0 iff all gated checks pass).
int run(const ExperimentConfig& cfg, std::ostream& log);

/// Output directory: cfg.out, else $LIFESPAN_LAB_OUT, else "lifespan_out".
std::filesystem::path output_dir(const ExperimentConfig& cfg);

}  // namespace lifespan::experiment
