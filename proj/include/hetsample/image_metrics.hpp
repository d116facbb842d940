#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hetsample/image.hpp"
#include "hetsample/skeleton.hpp"

namespace hetsample {

/// mean(foreground) / mean(background).
double contrast(const GrayImage& image, const BinaryMask& mask);

inline constexpr std::size_t kMinNoiseCoefficients = 100;

/// Noise standard deviation from the one-level Haar diagonal detail band:
/// median(|HH|) / 0.6745 over coefficients whose 2x2 support is entirely
/// background. Odd trailing rows/columns are ignored.
double noise_sigma(const GrayImage& image, const BinaryMask& mask);

/// Separable Gaussian filter, kernel radius ceil(3 sigma), kernel normalized
/// to unit sum, half-sample symmetric ("reflect") borders.
GrayImage gaussian_blur(const GrayImage& image, double sigma = 1.0);

/// Normalized 1-d Gaussian taps, index 0 at offset -radius.
std::vector<double> gaussian_kernel(double sigma);

/// Reflect an out-of-range index back into [0, n): ... c b a | a b c ... .
std::size_t reflect_index(long i, std::size_t n);

struct MedialStats {
  double heterogeneity = 0.0;   // population std of blurred intensity on the skeleton
  double mean_intensity = 0.0;  // mean blurred intensity on the skeleton
};

/// Blurs `image` with unit sigma and summarizes it along the skeleton.
MedialStats medial_heterogeneity(const GrayImage& image, const Skeleton& skeleton);

/// Same, for an image that is already blurred.
MedialStats medial_stats_of_blurred(const GrayImage& blurred, const Skeleton& skeleton);

/// h = slope * m + intercept.
struct DetrendModel {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares over (m, h) points.
DetrendModel fit_detrend(std::span<const std::pair<double, double>> points);

inline double detrend(double h, double m, const DetrendModel& model) {
  return h - (model.slope * m + model.intercept);
}

struct MetricVector {
  std::optional<double> contrast;
  std::optional<double> noise_sigma;
  std::optional<double> vessel_density;
  std::optional<double> heterogeneity;
  std::optional<double> mean_medial_intensity;
  std::optional<double> detrended_heterogeneity;
  std::map<std::string, std::string> errors; // field name -> failure message

  bool complete() const {
    return contrast && noise_sigma && vessel_density && heterogeneity && mean_medial_intensity;
  }
};

/// Computes every per-image metric; a failing metric leaves its field empty
/// and records the reason instead of aborting the others. The detrended
/// heterogeneity is filled later from a dataset-wide fit.
MetricVector extract_metrics(const GrayImage& image, const BinaryMask& mask);

/// Fits the detrend line over every vector that has both h and m and fills
/// their detrended heterogeneity. Returns the fitted model.
DetrendModel apply_detrend(std::span<MetricVector> metrics);

} // namespace hetsample
