#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cropspec/types.hpp"

namespace cropspec {

// Principal components of the spectral library. Components are stored as
// rows; each row's largest-magnitude entry is made positive so the basis is
// reproducible across runs and platforms.
struct PCAModel {
  Eigen::VectorXd band_means;
  Eigen::MatrixXd components;               // n_components x bands, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;  // non-increasing, entries in [0, 1]

  int bands() const { return static_cast<int>(band_means.size()); }
  int count() const { return static_cast<int>(components.rows()); }
};

// Centers by band means (no per-band scaling) and takes the top eigenvectors
// of the biased sample covariance via symmetric eigendecomposition. Ratios
// are each eigenvalue over the eigenvalue total, with tiny negative
// eigenvalues clamped to zero; an all-zero covariance yields all-zero ratios.
// Throws UsageError unless 1 <= n_components <= min(bands, records).
PCAModel fit_pca(const Dataset& ds, int n_components);

// Per-record principal-component scores with the labels carried along, plus
// the model's variance ratios so downstream rendering can annotate axes.
struct ScoreTable {
  Eigen::MatrixXd scores;  // records x n_components
  std::vector<CropLabel> crops;
  std::vector<StageLabel> stages;
  Eigen::VectorXd explained_variance_ratio;

  long size() const { return scores.rows(); }
  int count() const { return static_cast<int>(scores.cols()); }
};

// scores = components * (spectrum - band_means) for every record. Throws
// DataError when the dataset's band count does not match the model.
ScoreTable project(const PCAModel& m, const Dataset& ds);

// Writes "record_index,pc1..pcN,crop,stage" rows. Throws DataError when the
// file cannot be written.
void write_scores_csv(const ScoreTable& table, const std::string& path);

enum class ScatterGroup { Crop, Stage };

// Writes scores.csv plus one standalone SVG scatter per group value present
// in the table: grouping by crop yields one figure per crop with points
// colored by growth stage, grouping by stage one figure per stage colored by
// crop. All figures share axis limits computed over the whole table, axis
// labels carry the variance percentages, and the color maps are fixed, so
// output is identical across runs. Returns the paths written. Throws
// UsageError on an empty table and DataError on an unwritable directory.
std::vector<std::string> emit_scatter(const ScoreTable& table, ScatterGroup group_by,
                                      const std::string& out_dir);

}  // namespace cropspec
