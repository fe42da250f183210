#include "zpm/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace zpm {

Eigen::VectorXd Histogram::centers() const {
  return 0.5 * (edges.head(bins()) + edges.tail(bins()));
}

Eigen::Index Histogram::peak_bin() const {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < bins(); ++i)
    if (counts(i) > counts(best)) best = i;
  return best;
}

void Histogram::validate() const {
  require(edges.size() >= 2 && counts.size() == edges.size() - 1, ErrorKind::Validation,
          "histogram needs bins + 1 edges");
  const double w = width();
  for (Eigen::Index i = 0; i + 1 < edges.size(); ++i) {
    const double d = edges(i + 1) - edges(i);
    require(d > 0, ErrorKind::Validation, "histogram edges must increase");
    require(std::abs(d - w) <= 1e-9, ErrorKind::Validation, "histogram bins must be uniform");
  }
}

Histogram build_histogram(const TimeTagDataset& data, double bin_ns) {
  const double tdc = data.config.tdc_bin_ns;
  require(bin_ns > 0, ErrorKind::BinningMismatch, "bin width must be positive");
  const double ratio = bin_ns / tdc;
  const long long per_bin = std::llround(ratio);
  require(per_bin >= 1 && std::abs(ratio - static_cast<double>(per_bin)) <= 1e-9 * std::max(1.0, ratio),
          ErrorKind::BinningMismatch, "bin width must be an integer multiple of the TDC bin");

  const long long k0 = static_cast<long long>(std::ceil(data.gate_start / tdc - 1e-9));
  const long long k1 = static_cast<long long>(std::floor((data.gate_start + data.gate_ns) / tdc + 1e-9));
  const long long ticks = k1 - k0 + 1;
  const long long nbins = (ticks + per_bin - 1) / per_bin;

  Histogram h;
  h.edges.resize(nbins + 1);
  for (long long i = 0; i <= nbins; ++i) h.edges(i) = (static_cast<double>(k0 + i * per_bin) - 0.5) * tdc;
  h.counts = Eigen::VectorXd::Zero(nbins);
  for (double t : data.events) {
    const long long k = std::llround(t / tdc);
    require(k >= k0 && k <= k1, ErrorKind::Validation, "event outside the gate window");
    h.counts((k - k0) / per_bin) += 1.0;
  }
  return h;
}

TimeWindow default_background_window(const Histogram& signal, double offset_ns, double width_ns) {
  require(width_ns > 0 && offset_ns >= 0, ErrorKind::InvalidParameter, "background window must have positive width");
  const double peak = signal.center(signal.peak_bin());
  const double lo_edge = signal.edges(0), hi_edge = signal.edges(signal.bins());
  if (peak + offset_ns + width_ns <= hi_edge) return {peak + offset_ns, peak + offset_ns + width_ns};
  if (peak - offset_ns - width_ns >= lo_edge) return {peak - offset_ns - width_ns, peak - offset_ns};
  throw Error(ErrorKind::InvalidParameter, "gate too short for a background window away from the peak");
}

namespace {

void require_same_binning(const Histogram& a, const Histogram& b) {
  require(a.edges.size() == b.edges.size() && (a.edges - b.edges).cwiseAbs().maxCoeff() <= 1e-9,
          ErrorKind::BinningMismatch, "signal and background histograms use different bins");
}

double window_sum(const Histogram& h, TimeWindow w) {
  double s = 0;
  for (Eigen::Index i = 0; i < h.bins(); ++i) {
    const double c = h.center(i);
    if (c >= w.first && c < w.second) s += h.counts(i);
  }
  return s;
}

}  // namespace

double background_scale(const Histogram& signal, const Histogram& background, TimeWindow window) {
  require_same_binning(signal, background);
  const double s = window_sum(signal, window);
  const double b = window_sum(background, window);
  if (b > 0) return s / b;
  require(s == 0, ErrorKind::UndefinedScale, "background has no counts in the scaling window");
  return 0.0;
}

Histogram scale_subtract_background(const Histogram& signal, const Histogram& background, TimeWindow window) {
  const double alpha = background_scale(signal, background, window);
  Histogram out = signal;
  out.counts -= alpha * background.counts;
  return out;
}

Histogram truncate_histogram(const Histogram& h) {
  require(h.bins() > 0, ErrorKind::EmptySignal, "empty histogram");
  const Eigen::Index peak = h.peak_bin();
  require(h.counts(peak) > 0, ErrorKind::EmptySignal, "histogram has no positive bin");
  Eigen::Index first = 0, last = h.bins() - 1;
  for (Eigen::Index i = peak - 1; i >= 0; --i)
    if (h.counts(i) < 0) {
      first = i + 1;
      break;
    }
  for (Eigen::Index i = peak + 1; i < h.bins(); ++i)
    if (h.counts(i) < 0) {
      last = i - 1;
      break;
    }
  const Eigen::Index n = last - first + 1;
  Histogram out;
  out.edges = h.edges.segment(first, n + 1);
  out.counts = h.counts.segment(first, n);
  return out;
}

ArrivalDistribution normalize(const Histogram& h) {
  require(h.bins() > 0, ErrorKind::EmptySignal, "empty histogram");
  require(h.counts.minCoeff() >= 0, ErrorKind::InvalidParameter, "cannot normalize negative counts");
  const double sum = h.counts.sum();
  require(sum > 0, ErrorKind::EmptySignal, "histogram has zero total count");
  return {h.centers(), h.counts / sum};
}

ArrivalStats arrival_stats(const ArrivalDistribution& d) {
  const double mean = d.probabilities.dot(d.bin_centers);
  // Second moment about the mean avoids cancellation for late gates.
  const double var = d.probabilities.dot((d.bin_centers.array() - mean).square().matrix());
  return {mean, std::sqrt(std::max(0.0, var))};
}

CalibrationFit fit_calibration(const std::vector<CalibrationPoint>& points) {
  require(points.size() >= 2, ErrorKind::InsufficientData, "calibration needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].loops > 0, ErrorKind::InvalidParameter, "loop counts must be positive");
    for (std::size_t j = 0; j < i; ++j)
      require(points[i].loops != points[j].loops, ErrorKind::InvalidParameter, "loop counts must be distinct");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd l(n), tau(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    l(i) = points[static_cast<std::size_t>(i)].loops;
    tau(i) = points[static_cast<std::size_t>(i)].delay_ns;
  }
  const double sll = l.squaredNorm();
  const double slope = l.dot(tau) / sll;
  const double rss = (tau - slope * l).squaredNorm();
  const double var = rss / static_cast<double>(n - 1);
  return {slope, std::sqrt(var / sll), points};
}

MeasurementReport compute_report(const ArrivalDistribution& d, double fast_axis_mean, double tau_max,
                                 long long n_detected) {
  require(tau_max > 0 && std::isfinite(tau_max), ErrorKind::InvalidCalibration, "tau_max must be positive");
  require(n_detected >= 1, ErrorKind::EmptySignal, "no detected photons");
  const auto s = arrival_stats(d);
  MeasurementReport r{};
  r.tau = relative_delay(s.mean, fast_axis_mean);
  r.tau_std = s.std;
  r.expectation_raw = 2.0 * r.tau / tau_max - 1.0;
  r.expectation = std::clamp(r.expectation_raw, -1.0, 1.0);
  r.sigma_pm = 2.0 * s.std / tau_max;
  r.sigma_sm = std::sqrt(std::max(0.0, 1.0 - r.expectation * r.expectation));
  r.ratio = r.sigma_pm > 0 ? r.sigma_sm / r.sigma_pm : 0.0;
  const double root_n = std::sqrt(static_cast<double>(n_detected));
  r.u_pm = r.sigma_pm / root_n;
  r.u_sm = r.sigma_sm / root_n;
  r.n_detected = n_detected;
  return r;
}

PipelineResult analyze_run(const TimeTagDataset& signal, const TimeTagDataset& background,
                           const AnalysisOptions& options) {
  require(std::abs(signal.gate_start - background.gate_start) <= 1e-9 &&
              std::abs(signal.gate_ns - background.gate_ns) <= 1e-9 &&
              std::abs(signal.config.tdc_bin_ns - background.config.tdc_bin_ns) <= 1e-15,
          ErrorKind::Pairing, "signal and background runs have different gates");
  require(!signal.events.empty(), ErrorKind::EmptySignal, "signal run has no events");
  PipelineResult r;
  r.signal = build_histogram(signal, options.bin_ns);
  r.background = build_histogram(background, options.bin_ns);
  r.window = options.window ? *options.window
                            : default_background_window(r.signal, options.window_offset_ns, options.window_width_ns);
  // A background run with no events at all has nothing to subtract.
  r.background_scale = r.background.total() > 0 ? background_scale(r.signal, r.background, r.window) : 0.0;
  r.subtracted = r.signal;
  r.subtracted.counts -= r.background_scale * r.background.counts;
  r.truncated = truncate_histogram(r.subtracted);
  r.distribution = normalize(r.truncated);
  r.stats = arrival_stats(r.distribution);
  r.n_detected = std::llround(r.truncated.total());
  require(r.n_detected >= 1, ErrorKind::EmptySignal, "no signal counts survive background subtraction");
  return r;
}

}  // namespace zpm
