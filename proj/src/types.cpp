#include "cropspec/types.hpp"

#include <cmath>

#include "cropspec/errors.hpp"

namespace cropspec {

std::string_view to_string(CropLabel crop) {
  switch (crop) {
    case CropLabel::Corn: return "Corn";
    case CropLabel::Cotton: return "Cotton";
    case CropLabel::Rice: return "Rice";
    case CropLabel::Soybeans: return "Soybeans";
    case CropLabel::WinterWheat: return "WinterWheat";
  }
  return "?";
}

std::string_view to_string(StageLabel stage) {
  switch (stage) {
    case StageLabel::EmergeVEarly: return "EmergeVEarly";
    case StageLabel::EarlyMid: return "EarlyMid";
    case StageLabel::Late: return "Late";
    case StageLabel::Critical: return "Critical";
    case StageLabel::MatureSenesc: return "MatureSenesc";
    case StageLabel::Harvest: return "Harvest";
  }
  return "?";
}

std::optional<CropLabel> crop_from_string(std::string_view s) {
  for (CropLabel c : all_crops())
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::optional<StageLabel> stage_from_string(std::string_view s) {
  for (StageLabel v : all_stages())
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::string to_string(const JointLabel& label) {
  return std::string(to_string(label.crop)) + "/" + std::string(to_string(label.stage));
}

std::string to_string(const ClassId& id) {
  std::string out{to_string(id.crop)};
  if (id.stage) out += "/" + std::string(to_string(*id.stage));
  return out;
}

void validate(const WavelengthGrid& grid) {
  if (grid.wavelengths_nm.size() < 2)
    throw DataError("wavelength grid needs at least two bands, has " +
                    std::to_string(grid.wavelengths_nm.size()));
  for (std::size_t i = 0; i < grid.wavelengths_nm.size(); ++i) {
    const double w = grid.wavelengths_nm[i];
    if (!std::isfinite(w))
      throw DataError("wavelength at band " + std::to_string(i) + " is not finite");
    if (i > 0 && w <= grid.wavelengths_nm[i - 1])
      throw DataError("wavelengths must be strictly increasing; band " + std::to_string(i) +
                      " (" + std::to_string(w) + " nm) does not follow band " +
                      std::to_string(i - 1));
  }
}

void validate(const Dataset& ds) {
  validate(ds.grid);
  if (ds.records.empty()) throw DataError("dataset has no records");
  const long bands = ds.bands();
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.records[i].reflectance.size() != bands)
      throw DataError("record " + std::to_string(i) + " has " +
                      std::to_string(ds.records[i].reflectance.size()) +
                      " reflectance values, grid has " + std::to_string(bands) + " bands");
  }
}

Eigen::MatrixXd spectra_matrix(const Dataset& ds) {
  Eigen::MatrixXd x(ds.size(), ds.bands());
  for (long i = 0; i < ds.size(); ++i)
    x.row(i) = ds.records[static_cast<std::size_t>(i)].reflectance.transpose();
  return x;
}

Eigen::MatrixXd spectra_matrix(const Dataset& ds, const std::vector<long>& indices) {
  Eigen::MatrixXd x(static_cast<long>(indices.size()), ds.bands());
  for (std::size_t i = 0; i < indices.size(); ++i)
    x.row(static_cast<long>(i)) =
        ds.records[static_cast<std::size_t>(indices[i])].reflectance.transpose();
  return x;
}

}  // namespace cropspec
