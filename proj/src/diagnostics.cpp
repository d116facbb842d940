#include "hetsample/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

#include "hetsample/error.hpp"
#include "hetsample/feature_io.hpp"
#include "hetsample/kd_tree.hpp"

namespace hetsample {

namespace {

std::vector<double> frequencies(std::span<const double> values, const std::vector<double>& edges) {
  const std::size_t bins = edges.size() - 1;
  std::vector<double> freq(bins, 0.0);
  if (values.empty()) return freq;
  const double lo = edges.front();
  const double width = (edges.back() - lo) / static_cast<double>(bins);
  for (double v : values) {
    const double pos = std::floor((v - lo) / width);
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    freq[b] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(values.size());
  return freq;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

} // namespace

HistogramPair histogram_pair(std::span<const double> full, std::span<const double> subset,
                             std::size_t bins, std::string feature_name) {
  if (full.empty()) throw InfeasibleError("histogram of an empty column");
  if (bins == 0) throw InfeasibleError("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(full.begin(), full.end());
  HistogramPair h;
  h.feature_name = std::move(feature_name);
  if (*mn == *mx) {
    h.bin_edges = {*mn - 0.5, *mn + 0.5};
  } else {
    h.bin_edges.resize(bins + 1);
    const double width = (*mx - *mn) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) h.bin_edges[b] = *mn + width * static_cast<double>(b);
    h.bin_edges.back() = *mx;
  }
  h.full_freq = frequencies(full, h.bin_edges);
  h.subset_freq = frequencies(subset, h.bin_edges);
  return h;
}

double shannon_entropy(std::span<const double> freq) {
  double e = 0.0;
  for (double p : freq)
    if (p > 0.0) e -= p * std::log(p);
  return e;
}

PcaProjection pca_project(const FeatureMatrix& standardized, std::span<const std::string> selected_ids) {
  const auto n = standardized.values.rows();
  const auto d = standardized.values.cols();
  if (n < 3 || d < 2) throw InfeasibleError("PCA needs at least 3 samples and 2 features");

  const Eigen::MatrixXd centered = standardized.values.rowwise() - standardized.values.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  if (!cov.allFinite()) throw InfeasibleError("PCA: covariance is not finite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InfeasibleError("PCA: eigendecomposition failed");

  PcaProjection p;
  p.eigenvalues = solver.eigenvalues().reverse();
  p.components.resize(2, d);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    p.components.row(c) = v.transpose();
    p.explained_variance(c) = std::max(0.0, p.eigenvalues(c));
  }
  p.coords = centered * p.components.transpose();

  p.selected_flags.assign(static_cast<std::size_t>(n), false);
  for (auto row : standardized.indices_of(selected_ids)) p.selected_flags[row] = true;
  return p;
}

double quantile_sorted(std::span<const double> ascending, double q) {
  if (ascending.empty()) return 0.0;
  const double pos = q * static_cast<double>(ascending.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, ascending.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return ascending[lo] + (ascending[hi] - ascending[lo]) * frac;
}

CoverageReport coverage_report(const SelectionResult& result, const GridPointSet& grid_points) {
  CoverageReport r;
  r.radius = result.radius;
  const auto nearest = nearest_selected_distances(result.selected_rows, grid_points);
  std::vector<double> dist;
  dist.reserve(nearest.size());
  for (auto it = nearest.rbegin(); it != nearest.rend(); ++it) dist.push_back(it->second);
  r.unselected = dist.size();
  r.fus = compute_fus(result.selected_rows, grid_points);
  r.distance_p50 = quantile_sorted(dist, 0.5);
  r.distance_p90 = quantile_sorted(dist, 0.9);
  r.distance_p100 = quantile_sorted(dist, 1.0);

  const std::size_t d = grid_points.dims();
  std::vector<double> sel;
  for (auto row : result.selected_rows)
    for (auto v : grid_points.lattice_row(row)) sel.push_back(v);
  const KdTree tree(std::move(sel), d);

  std::set<std::vector<std::int32_t>> cells;
  for (std::size_t i = 0; i < grid_points.rows(); ++i) {
    auto row = grid_points.lattice_row(i);
    cells.emplace(row.begin(), row.end());
  }
  r.cells_total = cells.size();
  const double r2 = result.radius * result.radius;
  for (const auto& cell : cells) {
    std::vector<double> q(cell.begin(), cell.end());
    if (tree.nearest(q).squared_distance <= r2) ++r.cells_covered;
  }
  return r;
}

nlohmann::json to_json(const CoverageReport& r) {
  nlohmann::json j;
  j["fus"] = r.fus;
  j["distance_quantiles"] = {{"p50", r.distance_p50}, {"p90", r.distance_p90}, {"p100", r.distance_p100}};
  j["unselected"] = r.unselected;
  j["cells_total"] = r.cells_total;
  j["cells_covered"] = r.cells_covered;
  j["coverage_radius"] = r.radius;
  return j;
}

void write_histogram_csv(std::ostream& out, const HistogramPair& h) {
  out << "bin_left,bin_right,full_freq,subset_freq\n";
  for (std::size_t b = 0; b < h.full_freq.size(); ++b)
    out << format_double(h.bin_edges[b]) << ',' << format_double(h.bin_edges[b + 1]) << ','
        << format_double(h.full_freq[b]) << ',' << format_double(h.subset_freq[b]) << '\n';
}

void write_pca_csv(std::ostream& out, const std::vector<std::string>& ids, const PcaProjection& p) {
  out << "id,pc1,pc2,selected\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out << csv_escape(ids[i]) << ',' << format_double(p.coords(row, 0)) << ','
        << format_double(p.coords(row, 1)) << ',' << (p.selected_flags[i] ? 1 : 0) << '\n';
  }
}

void write_pca_svg(std::ostream& out, const PcaProjection& p, const std::string& title,
                   const std::string& metadata_text) {
  constexpr double W = 640, H = 480, M = 40;
  const auto n = p.coords.rows();
  double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
  if (n > 0) {
    x0 = p.coords.col(0).minCoeff();
    x1 = p.coords.col(0).maxCoeff();
    y0 = p.coords.col(1).minCoeff();
    y1 = p.coords.col(1).maxCoeff();
  }
  if (x1 - x0 <= 0) x1 = x0 + 1;
  if (y1 - y0 <= 0) y1 = y0 + 1;
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  if (!metadata_text.empty()) out << "<metadata>" << xml_escape(metadata_text) << "</metadata>\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">PC1 ("
      << fixed(p.explained_variance(0)) << ")</text>\n";
  out << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << H / 2
      << ")\" text-anchor=\"middle\">PC2 (" << fixed(p.explained_variance(1)) << ")</text>\n";
  out << "<g fill=\"#9aa5b1\" fill-opacity=\"0.5\">\n";
  for (Eigen::Index i = 0; i < n; ++i)
    if (!p.selected_flags[static_cast<std::size_t>(i)])
      out << "<circle cx=\"" << fixed(sx(p.coords(i, 0))) << "\" cy=\"" << fixed(sy(p.coords(i, 1)))
          << "\" r=\"1.5\"/>\n";
  out << "</g>\n<g fill=\"#d62728\" stroke=\"black\" stroke-width=\"0.5\">\n";
  for (Eigen::Index i = 0; i < n; ++i)
    if (p.selected_flags[static_cast<std::size_t>(i)])
      out << "<circle cx=\"" << fixed(sx(p.coords(i, 0))) << "\" cy=\"" << fixed(sy(p.coords(i, 1)))
          << "\" r=\"4\"/>\n";
  out << "</g>\n</svg>\n";
}

} // namespace hetsample
