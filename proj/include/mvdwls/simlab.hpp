#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mvdwls/estimator.hpp"
#include "mvdwls/metrics.hpp"

namespace mvdwls::simlab {

/// Error variance forms, all scaled by 0.01:
///   S1: (x1 + 3 x2)^2,  S2: x1^2,  S3: (x1 + 3 x2 + x1 x2)^2
enum class VarianceForm : std::uint8_t { S1 = 1, S2 = 2, S3 = 3 };

VarianceForm variance_form_from_int(int id);
int to_int(VarianceForm form) noexcept;

/// y = 10 + 15 x1 + 5 x2 + e with x1 ~ U(5, 15), x2 ~ Exp(1), e ~ N(0, sigma_i^2).
struct SimScenario {
  VarianceForm form = VarianceForm::S1;
  Eigen::Vector3d beta_true{10.0, 15.0, 5.0};
  int n = 90;
  int R = 100;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument for n < 10 or R < 1.
  void validate() const;
  double variance(double x1, double x2) const;
};

/// Deterministic in (seed, replicate): design and noise come from their own
/// counter-based streams.
Dataset gen_scenario(const SimScenario& s, int replicate);

struct ReplicateRecord {
  bool ok = false;            // both methods succeeded
  std::string error;          // first failure message when !ok
  Eigen::VectorXd beta_m1;
  Eigen::VectorXd beta_m2;
  double mae_m1 = 0.0;
  double mae_m2 = 0.0;
  double m_hat_m1 = 0.0;
  double m_hat_m2 = 0.0;
  double k_ratio = 0.0;       // k2 / k1 of M2; NaN on fallback
  bool fallback = false;
};

struct SimReport {
  SimScenario scenario;
  metrics::MetricsReport m1;
  metrics::MetricsReport m2;
  std::vector<ReplicateRecord> replicates;  // size R, indexed by replicate
  int failures = 0;
  int fallbacks = 0;
  double k_ratio_median = 0.0;
  double m_hat_mean = 0.0;
  double m_hat_m1_mean = 0.0;
};

/// Fits M1 and M2 on every replicate. A replicate on which either method
/// fails is counted in `failures` and left out of all aggregates.
SimReport run_replications(const SimScenario& s, const SolverConfig& cfg = {});

using Estimator = std::function<MvdFit(const Dataset&, const SolverConfig&)>;

struct CvRepeat {
  bool ok = false;
  double sse_m1 = 0.0;
  double sse_m2 = 0.0;
};

struct CvReport {
  int repeats = 0;
  int failures = 0;
  double mean_sse_m1 = 0.0;
  double mean_sse_m2 = 0.0;
  std::vector<CvRepeat> per_repeat;
};

/// Repeated random half/half split: fit both methods on the training half
/// and score test-half SSE.
CvReport crossval(const Dataset& data, int repeats, std::uint64_t seed, const SolverConfig& cfg = {});
CvReport crossval(const Dataset& data, int repeats, std::uint64_t seed, const SolverConfig& cfg,
                  const Estimator& first, const Estimator& second);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart on a fixed 800x500 viewBox.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

std::string format_number(double v);

/// Writes table1_3.csv, table4.csv, fig1.csv and one fig1_scenario<k>.svg per
/// scenario present. Nothing is written when `reports` is empty.
std::vector<std::filesystem::path> emit_artifacts(const std::vector<SimReport>& reports,
                                                  const std::filesystem::path& dir);

/// Writes cv.csv.
std::filesystem::path emit_cv(const CvReport& report, const std::filesystem::path& dir);

/// Writes `contents` to `path`, throwing IoError on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace mvdwls::simlab
