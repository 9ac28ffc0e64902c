#include "cropspec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cropspec/errors.hpp"
#include "cropspec/util.hpp"

namespace cropspec {

namespace {

// Fixed color maps keep marker colors identical across runs and figures.
const char* stage_color(StageLabel s) {
  switch (s) {
    case StageLabel::EmergeVEarly: return "#1b9e77";
    case StageLabel::EarlyMid: return "#d95f02";
    case StageLabel::Late: return "#7570b3";
    case StageLabel::Critical: return "#e7298a";
    case StageLabel::MatureSenesc: return "#66a61e";
    case StageLabel::Harvest: return "#e6ab02";
  }
  return "#000000";
}

const char* crop_color(CropLabel c) {
  switch (c) {
    case CropLabel::Corn: return "#e69f00";
    case CropLabel::Cotton: return "#56b4e9";
    case CropLabel::Rice: return "#009e73";
    case CropLabel::Soybeans: return "#cc79a7";
    case CropLabel::WinterWheat: return "#0072b2";
  }
  return "#000000";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

AxisRange padded_range(const Eigen::VectorXd& values) {
  AxisRange r{values.minCoeff(), values.maxCoeff()};
  if (r.hi == r.lo) {
    r.lo -= 1.0;
    r.hi += 1.0;
  } else {
    const double pad = 0.05 * (r.hi - r.lo);
    r.lo -= pad;
    r.hi += pad;
  }
  return r;
}

std::string axis_label(int pc_index, const Eigen::VectorXd& ratios) {
  std::string label = "PC" + std::to_string(pc_index + 1);
  if (pc_index < ratios.size())
    label += " (" + fixed(ratios[pc_index] * 100.0, 1) + "% of variance)";
  else
    label += " (absent: single-component model)";
  return label;
}

// One self-contained scatter figure. Geometry is a 760x560 canvas with the
// plot box at x in [70, 580] and y in [40, 500]; the legend sits to the
// right of the box.
std::string render_svg(const std::string& title, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y, const std::vector<std::string>& colors,
                       const AxisRange& xr, const AxisRange& yr,
                       const std::vector<std::pair<std::string, std::string>>& legend,
                       const std::string& x_label, const std::string& y_label) {
  const double left = 70, right = 580, top = 40, bottom = 500;
  const auto px = [&](double v) {
    return left + (v - xr.lo) / (xr.hi - xr.lo) * (right - left);
  };
  const auto py = [&](double v) {
    return bottom - (v - yr.lo) / (yr.hi - yr.lo) * (bottom - top);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"560\" "
         "viewBox=\"0 0 760 560\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"760\" height=\"560\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << fixed((left + right) / 2, 1)
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // gridlines and tick labels, five per axis
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg << "<line x1=\"" << fixed(px(fx), 1) << "\" y1=\"" << fixed(top, 1) << "\" x2=\""
        << fixed(px(fx), 1) << "\" y2=\"" << fixed(bottom, 1)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(py(fy), 1) << "\" x2=\""
        << fixed(right, 1) << "\" y2=\"" << fixed(py(fy), 1)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fixed(px(fx), 1) << "\" y=\"" << fixed(bottom + 18, 1)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fixed(fx, 2) << "</text>\n";
    svg << "<text x=\"" << fixed(left - 8, 1) << "\" y=\"" << fixed(py(fy) + 4, 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(fy, 2)
        << "</text>\n";
  }

  svg << "<rect x=\"" << fixed(left, 1) << "\" y=\"" << fixed(top, 1) << "\" width=\""
      << fixed(right - left, 1) << "\" height=\"" << fixed(bottom - top, 1)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  for (long i = 0; i < x.size(); ++i) {
    svg << "<circle cx=\"" << fixed(px(x[i]), 2) << "\" cy=\"" << fixed(py(y[i]), 2)
        << "\" r=\"3\" fill=\"" << colors[static_cast<std::size_t>(i)]
        << "\" fill-opacity=\"0.75\"/>\n";
  }

  svg << "<text x=\"" << fixed((left + right) / 2, 1) << "\" y=\"545\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\">"
      << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fixed((top + bottom) / 2, 1)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << fixed((top + bottom) / 2, 1) << ")\">" << y_label << "</text>\n";

  double ly = top + 10;
  for (const auto& [name, color] : legend) {
    svg << "<rect x=\"592\" y=\"" << fixed(ly - 9, 1) << "\" width=\"12\" height=\"12\" fill=\""
        << color << "\"/>\n";
    svg << "<text x=\"610\" y=\"" << fixed(ly + 2, 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
    ly += 20;
  }

  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("failed while writing " + path);
}

}  // namespace

PCAModel fit_pca(const Dataset& ds, int n_components) {
  validate(ds);
  const long n = ds.size();
  const long bands = ds.bands();
  if (n_components < 1 || n_components > std::min<long>(bands, n))
    throw UsageError("n_components must be between 1 and min(bands, records) = " +
                     std::to_string(std::min<long>(bands, n)));

  const Eigen::MatrixXd x = spectra_matrix(ds);
  PCAModel model;
  model.band_means = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - model.band_means.transpose();
  const Eigen::MatrixXd cov = (centered.adjoint() * centered) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigendecomposition of the band covariance failed");
  const Eigen::VectorXd eigvals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd eigvecs = solver.eigenvectors();

  double total = 0.0;
  for (long i = 0; i < eigvals.size(); ++i) total += std::max(eigvals[i], 0.0);

  model.components.resize(n_components, bands);
  model.explained_variance_ratio.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    Eigen::VectorXd comp = eigvecs.col(bands - 1 - k);
    long largest = 0;
    for (long i = 1; i < comp.size(); ++i)
      if (std::abs(comp[i]) > std::abs(comp[largest])) largest = i;
    if (comp[largest] < 0.0) comp = -comp;
    model.components.row(k) = comp.transpose();
    const double ev = std::max(eigvals[bands - 1 - k], 0.0);
    model.explained_variance_ratio[k] = total > 0.0 ? ev / total : 0.0;
  }
  return model;
}

ScoreTable project(const PCAModel& m, const Dataset& ds) {
  validate(ds);
  if (ds.bands() != m.bands())
    throw DataError("dataset has " + std::to_string(ds.bands()) + " bands, model has " +
                    std::to_string(m.bands()));
  ScoreTable table;
  const Eigen::MatrixXd x = spectra_matrix(ds);
  table.scores =
      (x.rowwise() - m.band_means.transpose()) * m.components.transpose();
  table.explained_variance_ratio = m.explained_variance_ratio;
  table.crops.reserve(ds.records.size());
  table.stages.reserve(ds.records.size());
  for (const SampleRecord& rec : ds.records) {
    table.crops.push_back(rec.crop);
    table.stages.push_back(rec.stage);
  }
  return table;
}

void write_scores_csv(const ScoreTable& table, const std::string& path) {
  std::ostringstream out;
  out << "record_index";
  for (int k = 0; k < table.count(); ++k) out << ",pc" << (k + 1);
  out << ",crop,stage\n";
  for (long i = 0; i < table.size(); ++i) {
    out << i;
    for (int k = 0; k < table.count(); ++k) out << "," << format_double(table.scores(i, k));
    out << "," << to_string(table.crops[static_cast<std::size_t>(i)]) << ","
        << to_string(table.stages[static_cast<std::size_t>(i)]) << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<std::string> emit_scatter(const ScoreTable& table, ScatterGroup group_by,
                                      const std::string& out_dir) {
  if (table.size() == 0) throw UsageError("scatter emission needs a non-empty score table");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());

  std::vector<std::string> written;
  const std::string scores_path = (std::filesystem::path(out_dir) / "scores.csv").string();
  write_scores_csv(table, scores_path);
  written.push_back(scores_path);

  const Eigen::VectorXd all_x = table.scores.col(0);
  const Eigen::VectorXd all_y = table.count() >= 2
                                    ? Eigen::VectorXd(table.scores.col(1))
                                    : Eigen::VectorXd(Eigen::VectorXd::Zero(table.size()));
  const AxisRange xr = padded_range(all_x);
  const AxisRange yr = padded_range(all_y);
  const std::string x_label = axis_label(0, table.explained_variance_ratio);
  const std::string y_label = table.count() >= 2
                                  ? axis_label(1, table.explained_variance_ratio)
                                  : std::string("PC2 (absent: single-component model)");

  const auto emit_group = [&](const std::string& group_name, const std::vector<long>& rows,
                              const auto& color_of,
                              const std::vector<std::pair<std::string, std::string>>& legend) {
    Eigen::VectorXd gx(static_cast<long>(rows.size()));
    Eigen::VectorXd gy(static_cast<long>(rows.size()));
    std::vector<std::string> colors(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      gx[static_cast<long>(i)] = all_x[rows[i]];
      gy[static_cast<long>(i)] = all_y[rows[i]];
      colors[i] = color_of(rows[i]);
    }
    const std::string path =
        (std::filesystem::path(out_dir) / ("scatter_" + to_lower(group_name) + ".svg")).string();
    write_text_file(path, render_svg(group_name + ": first two principal components", gx, gy,
                                     colors, xr, yr, legend, x_label, y_label));
    written.push_back(path);
  };

  if (group_by == ScatterGroup::Crop) {
    std::vector<std::pair<std::string, std::string>> legend;
    for (StageLabel s : all_stages()) legend.emplace_back(to_string(s), stage_color(s));
    for (CropLabel crop : all_crops()) {
      std::vector<long> rows;
      for (long i = 0; i < table.size(); ++i)
        if (table.crops[static_cast<std::size_t>(i)] == crop) rows.push_back(i);
      if (rows.empty()) continue;
      emit_group(
          std::string(to_string(crop)), rows,
          [&](long i) { return stage_color(table.stages[static_cast<std::size_t>(i)]); }, legend);
    }
  } else {
    std::vector<std::pair<std::string, std::string>> legend;
    for (CropLabel c : all_crops()) legend.emplace_back(to_string(c), crop_color(c));
    for (StageLabel stage : all_stages()) {
      std::vector<long> rows;
      for (long i = 0; i < table.size(); ++i)
        if (table.stages[static_cast<std::size_t>(i)] == stage) rows.push_back(i);
      if (rows.empty()) continue;
      emit_group(
          std::string(to_string(stage)), rows,
          [&](long i) { return crop_color(table.crops[static_cast<std::size_t>(i)]); }, legend);
    }
  }
  return written;
}

}  // namespace cropspec
