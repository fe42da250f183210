#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "zpm/montecarlo.hpp"

namespace zpm {

/// Uniformly binned counts.  Counts are real so that scaled background can be
/// subtracted (and may go negative).
struct Histogram {
  Eigen::VectorXd edges;   // ns, strictly increasing, size = bins + 1
  Eigen::VectorXd counts;  // size = bins

  Eigen::Index bins() const { return counts.size(); }
  double width() const { return edges(1) - edges(0); }
  double center(Eigen::Index i) const { return 0.5 * (edges(i) + edges(i + 1)); }
  Eigen::VectorXd centers() const;
  double total() const { return counts.sum(); }
  /// Earliest bin holding the maximum count.
  Eigen::Index peak_bin() const;

  /// Throws Error(Validation) on non-uniform or non-increasing edges.
  void validate() const;
};

struct ArrivalDistribution {
  Eigen::VectorXd bin_centers;    // ns
  Eigen::VectorXd probabilities;  // >= 0, sum 1
};

struct ArrivalStats {
  double mean;  // ns
  double std;   // ns
};

struct CalibrationPoint {
  int loops;
  double delay_ns;
};

struct CalibrationFit {
  double slope;              // ns / loop
  double slope_uncertainty;  // ns / loop
  std::vector<CalibrationPoint> points;

  double tau_max(int loops) const { return slope * loops; }
};

struct MeasurementReport {
  double tau;                // ns, relative to the fast axis
  double tau_std;            // ns
  double expectation;        // clamped to [-1, 1]
  double expectation_raw;    // 2 tau / tau_max - 1 before clamping
  double sigma_pm;
  double sigma_sm;
  double ratio;
  double u_pm;
  double u_sm;
  long long n_detected;
};

/// [lo, hi) in ns; bins whose centre falls inside belong to the window.
using TimeWindow = std::pair<double, double>;

/// Bins are aligned to the TDC grid: each bin holds exactly bin_ns/tdc_bin_ns
/// consecutive TDC values, centred, so bin centres carry no half-tick bias.
Histogram build_histogram(const TimeTagDataset& data, double bin_ns);

/// Window of `width_ns` starting `offset_ns` after the peak centre, or the
/// mirror-image window before the peak when the late side runs off the gate.
TimeWindow default_background_window(const Histogram& signal, double offset_ns = 2.0, double width_ns = 2.0);

/// alpha = signal counts / background counts inside the window.  With both
/// window sums zero there is nothing to scale and alpha = 0.
double background_scale(const Histogram& signal, const Histogram& background, TimeWindow window);

/// signal - alpha * background.
Histogram scale_subtract_background(const Histogram& signal, const Histogram& background, TimeWindow window);

/// Starting at the peak, drop the first negative bin on each side and
/// everything beyond it.
Histogram truncate_histogram(const Histogram& h);

ArrivalDistribution normalize(const Histogram& h);

ArrivalStats arrival_stats(const ArrivalDistribution& d);

inline double relative_delay(double setting_mean, double fast_axis_mean) { return setting_mean - fast_axis_mean; }

/// Least squares through the origin: slope = sum(l tau) / sum(l^2), with the
/// uncertainty from the residual variance (n - 1 degrees of freedom).
CalibrationFit fit_calibration(const std::vector<CalibrationPoint>& points);

MeasurementReport compute_report(const ArrivalDistribution& d, double fast_axis_mean, double tau_max,
                                 long long n_detected);

// ---------------------------------------------------------------------------
// Whole-run pipeline: histogram -> background subtraction -> truncation ->
// normalization -> arrival statistics.

struct AnalysisOptions {
  double bin_ns = 0.1;
  double window_offset_ns = 2.0;
  double window_width_ns = 2.0;
  std::optional<TimeWindow> window;  // overrides the offset/width rule
};

struct PipelineResult {
  Histogram signal;
  Histogram background;
  Histogram subtracted;
  Histogram truncated;
  ArrivalDistribution distribution;
  TimeWindow window;
  double background_scale;
  ArrivalStats stats;
  long long n_detected;  // rounded sum of the truncated, subtracted counts
};

/// An event-free background run is skipped (alpha = 0) rather than treated as
/// an undefined scale.
PipelineResult analyze_run(const TimeTagDataset& signal, const TimeTagDataset& background,
                           const AnalysisOptions& options = {});

}  // namespace zpm
