#pragma once

#include <Eigen/Dense>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cropspec {

// The five crops covered by the library. Enumeration order is alphabetical;
// argmax tie-breaking relies on it.
enum class CropLabel : std::uint8_t { Corn, Cotton, Rice, Soybeans, WinterWheat };

// The six growth stages, in phenological order from emergence to harvest.
enum class StageLabel : std::uint8_t { EmergeVEarly, EarlyMid, Late, Critical, MatureSenesc, Harvest };

inline constexpr int kNumCrops = 5;
inline constexpr int kNumStages = 6;

constexpr std::array<CropLabel, kNumCrops> all_crops() {
  return {CropLabel::Corn, CropLabel::Cotton, CropLabel::Rice, CropLabel::Soybeans,
          CropLabel::WinterWheat};
}

constexpr std::array<StageLabel, kNumStages> all_stages() {
  return {StageLabel::EmergeVEarly, StageLabel::EarlyMid, StageLabel::Late,
          StageLabel::Critical,     StageLabel::MatureSenesc, StageLabel::Harvest};
}

std::string_view to_string(CropLabel crop);
std::string_view to_string(StageLabel stage);

// Parse the canonical enum spellings ("Corn", "EmergeVEarly", ...). Raw file
// strings go through the ingest canonicalization table instead.
std::optional<CropLabel> crop_from_string(std::string_view s);
std::optional<StageLabel> stage_from_string(std::string_view s);

// A (crop, growth stage) pair treated as a single model class.
struct JointLabel {
  CropLabel crop;
  StageLabel stage;
  auto operator<=>(const JointLabel&) const = default;
};

std::string to_string(const JointLabel& label);

// Class identifier for a discriminant model: a crop, optionally qualified by a
// growth stage when the model is fit on joint labels.
struct ClassId {
  CropLabel crop;
  std::optional<StageLabel> stage;
  auto operator<=>(const ClassId&) const = default;
};

std::string to_string(const ClassId& id);

// Band wavelengths in nanometers, strictly increasing.
struct WavelengthGrid {
  std::vector<double> wavelengths_nm;

  int bands() const { return static_cast<int>(wavelengths_nm.size()); }
};

// Throws DataError unless the grid has at least two strictly increasing finite values.
void validate(const WavelengthGrid& grid);

// Percent-reflectance vector over the grid's bands.
using Spectrum = Eigen::VectorXd;

struct GeoPoint {
  double latitude;
  double longitude;
};

// One labeled spectrum with its metadata. Location may be absent; aez and
// source_id are opaque passthrough tags.
struct SampleRecord {
  Spectrum reflectance;
  CropLabel crop;
  StageLabel stage;
  std::optional<GeoPoint> location;
  std::string aez;
  std::string source_id;
};

// An immutable spectral library: a wavelength grid plus conforming records.
struct Dataset {
  WavelengthGrid grid;
  std::vector<SampleRecord> records;

  int bands() const { return grid.bands(); }
  long size() const { return static_cast<long>(records.size()); }
};

// Checks grid validity and that every record conforms to it; nonempty required.
void validate(const Dataset& ds);

// Records stacked as a size() x bands() matrix, preserving record order.
Eigen::MatrixXd spectra_matrix(const Dataset& ds);
Eigen::MatrixXd spectra_matrix(const Dataset& ds, const std::vector<long>& indices);

}  // namespace cropspec
