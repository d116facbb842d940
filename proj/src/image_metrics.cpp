#include "hetsample/image_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "hetsample/error.hpp"

namespace hetsample {

double contrast(const GrayImage& image, const BinaryMask& mask) {
  require_same_size(image, mask);
  double fg = 0.0, bg = 0.0;
  std::size_t nfg = 0, nbg = 0;
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      if (mask.at(x, y)) {
        fg += image.at(x, y);
        ++nfg;
      } else {
        bg += image.at(x, y);
        ++nbg;
      }
    }
  }
  if (nfg == 0) throw InfeasibleError("undefined contrast: mask has no foreground");
  if (nbg == 0) throw InfeasibleError("undefined contrast: mask has no background");
  const double mean_bg = bg / static_cast<double>(nbg);
  if (mean_bg == 0.0) throw InfeasibleError("undefined contrast: background mean is zero");
  return (fg / static_cast<double>(nfg)) / mean_bg;
}

double noise_sigma(const GrayImage& image, const BinaryMask& mask) {
  require_same_size(image, mask);
  std::vector<double> detail;
  detail.reserve(image.area() / 4);
  for (std::size_t y = 0; y + 1 < image.height(); y += 2) {
    for (std::size_t x = 0; x + 1 < image.width(); x += 2) {
      if (mask.at(x, y) || mask.at(x + 1, y) || mask.at(x, y + 1) || mask.at(x + 1, y + 1)) continue;
      const double hh =
          (image.at(x, y) - image.at(x + 1, y) - image.at(x, y + 1) + image.at(x + 1, y + 1)) / 2.0;
      detail.push_back(std::abs(hh));
    }
  }
  if (detail.size() < kMinNoiseCoefficients)
    throw InfeasibleError("insufficient background: " + std::to_string(detail.size()) +
                          " wavelet coefficients, need " + std::to_string(kMinNoiseCoefficients));
  const std::size_t mid = detail.size() / 2;
  std::nth_element(detail.begin(), detail.begin() + static_cast<std::ptrdiff_t>(mid), detail.end());
  double median = detail[mid];
  if (detail.size() % 2 == 0) {
    const double lower = *std::max_element(detail.begin(), detail.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InfeasibleError("gaussian sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (auto& v : k) v /= total;
  return k;
}

std::size_t reflect_index(long i, std::size_t n) {
  const long period = 2 * static_cast<long>(n);
  long r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<long>(n)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const long radius = static_cast<long>(kernel.size() / 2);
  const std::size_t w = image.width(), h = image.height();
  GrayImage tmp(w, h), out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (long t = -radius; t <= radius; ++t)
        s += kernel[static_cast<std::size_t>(t + radius)] *
             image.at(reflect_index(static_cast<long>(x) + t, w), y);
      tmp.at(x, y) = s;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (long t = -radius; t <= radius; ++t)
        s += kernel[static_cast<std::size_t>(t + radius)] *
             tmp.at(x, reflect_index(static_cast<long>(y) + t, h));
      out.at(x, y) = s;
    }
  }
  return out;
}

MedialStats medial_stats_of_blurred(const GrayImage& blurred, const Skeleton& skeleton) {
  if (blurred.width() != skeleton.pixels.width() || blurred.height() != skeleton.pixels.height())
    throw IoError("skeleton size does not match image size");
  const auto coords = skeleton.coordinates();
  if (coords.empty()) throw InfeasibleError("no medial line");
  double sum = 0.0;
  for (auto [x, y] : coords) sum += blurred.at(x, y);
  const double n = static_cast<double>(coords.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (auto [x, y] : coords) {
    const double d = blurred.at(x, y) - mean;
    ss += d * d;
  }
  return {std::sqrt(ss / n), mean};
}

MedialStats medial_heterogeneity(const GrayImage& image, const Skeleton& skeleton) {
  if (skeleton.size() == 0) throw InfeasibleError("no medial line");
  return medial_stats_of_blurred(gaussian_blur(image, 1.0), skeleton);
}

DetrendModel fit_detrend(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw InfeasibleError("degenerate fit: need at least 2 points");
  double mean_m = 0.0, mean_h = 0.0;
  for (auto [m, h] : points) {
    mean_m += m;
    mean_h += h;
  }
  const double n = static_cast<double>(points.size());
  mean_m /= n;
  mean_h /= n;
  double sxx = 0.0, sxy = 0.0;
  for (auto [m, h] : points) {
    sxx += (m - mean_m) * (m - mean_m);
    sxy += (m - mean_m) * (h - mean_h);
  }
  if (!(sxx > 0.0)) throw InfeasibleError("degenerate fit: all m values are equal");
  DetrendModel model;
  model.slope = sxy / sxx;
  model.intercept = mean_h - model.slope * mean_m;
  return model;
}

MetricVector extract_metrics(const GrayImage& image, const BinaryMask& mask) {
  require_same_size(image, mask);
  MetricVector v;
  auto attempt = [&](const char* field, auto&& compute) {
    try {
      compute();
    } catch (const Error& e) {
      v.errors[field] = e.what();
    }
  };
  attempt("contrast", [&] { v.contrast = contrast(image, mask); });
  attempt("noise_sigma", [&] { v.noise_sigma = noise_sigma(image, mask); });
  const Skeleton skeleton = skeletonize(mask);
  v.vessel_density = vessel_density(skeleton, image.area());
  attempt("heterogeneity", [&] {
    const auto stats = medial_heterogeneity(image, skeleton);
    v.heterogeneity = stats.heterogeneity;
    v.mean_medial_intensity = stats.mean_intensity;
  });
  if (!v.heterogeneity) v.errors["mean_medial_intensity"] = v.errors["heterogeneity"];
  return v;
}

DetrendModel apply_detrend(std::span<MetricVector> metrics) {
  std::vector<std::pair<double, double>> points;
  for (const auto& v : metrics)
    if (v.heterogeneity && v.mean_medial_intensity) points.emplace_back(*v.mean_medial_intensity, *v.heterogeneity);
  const auto model = fit_detrend(points);
  for (auto& v : metrics) {
    if (v.heterogeneity && v.mean_medial_intensity)
      v.detrended_heterogeneity = detrend(*v.heterogeneity, *v.mean_medial_intensity, model);
    else
      v.errors["detrended_heterogeneity"] = "no medial line";
  }
  return model;
}

} // namespace hetsample
