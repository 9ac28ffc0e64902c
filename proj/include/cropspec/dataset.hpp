#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cropspec/types.hpp"

namespace cropspec {

// How band columns are identified in the input file.
enum class BandMode {
  NumericHeader,  // a column is a band iff its header parses as a numeric wavelength
  IndexRange,     // bands are the half-open column range [band_begin, band_end)
};

// Column mapping and label canonicalization for a delimiter-separated library
// export. Loaded from a flat key=value profile; see docs/file-formats.md.
// Column references are header names (case-insensitive) or "#<index>" with a
// zero-based column index. Empty reference means the column is absent.
struct IngestConfig {
  char delimiter = ',';
  std::string crop_column = "crop";
  std::string stage_column = "stage";
  std::string lat_column = "latitude";
  std::string lon_column = "longitude";
  std::string aez_column = "aez";
  std::string source_column = "source_id";
  BandMode band_mode = BandMode::NumericHeader;
  int band_begin = -1;  // used by IndexRange only
  int band_end = -1;
  double reflectance_scale = 1.0;  // set to 100 for libraries stored as fractions
  // Canonicalization tables; keys are lower-cased trimmed raw strings.
  std::map<std::string, CropLabel> crop_map;
  std::map<std::string, StageLabel> stage_map;
};

// Profile matching this toolkit's own writer layout; every canonical enum
// spelling maps to itself.
IngestConfig canonical_ingest_config();

// Shipped best-effort profile for the GHISACONUS library export (also at
// profiles/ghisaconus.cfg). Column names should be confirmed against the real
// file; the profile is user-editable for that reason.
IngestConfig ghisaconus_ingest_config();

// Parses a flat key=value profile. Throws UsageError on unknown keys or values
// and when a crop or stage has no canonicalization entry at all.
IngestConfig load_ingest_config(const std::filesystem::path& path);
IngestConfig parse_ingest_config(const std::string& text);

// Every enum value must be reachable through the canonicalization tables.
void validate(const IngestConfig& config);

// Reads a delimiter-separated library with a mandatory header row. Row order
// is preserved. Unparseable or out-of-range geolocation marks the location
// absent; label strings without a canonicalization entry and non-numeric
// reflectance cells are hard errors naming the row.
Dataset load_library(const std::filesystem::path& path, const IngestConfig& config);

struct SummaryInfo {
  long records = 0;
  int bands = 0;
  double wavelength_min = 0.0;
  double wavelength_max = 0.0;
  double reflectance_min = 0.0;
  double reflectance_max = 0.0;
  long out_of_range_values = 0;  // reflectance outside [0, 100], kept not rejected
  std::array<long, kNumCrops> per_crop{};
  std::array<long, kNumStages> per_stage{};
  std::array<std::array<long, kNumStages>, kNumCrops> per_joint{};
};

SummaryInfo summarize(const Dataset& ds);
std::string render_summary(const SummaryInfo& info);

// Writes the canonical layout: crop,stage,latitude,longitude,aez,source_id
// followed by one column per band headed by its wavelength. Values use
// shortest round-trip formatting, so write + load is value-identical.
void write_library(const Dataset& ds, const std::filesystem::path& path, char delimiter = ',');

// Per-class Gaussian generator for synthetic fixtures.
struct SyntheticClassSpec {
  CropLabel crop;
  StageLabel stage;
  long count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric positive semi-definite
};

struct SyntheticSpec {
  WavelengthGrid grid;
  std::vector<SyntheticClassSpec> classes;
};

// Draws each class from its Gaussian; deterministic given seed. Throws
// DataError when a covariance is not positive semi-definite.
Dataset synthesize(const SyntheticSpec& spec, std::uint64_t seed);

// JSON description of a SyntheticSpec; see docs/file-formats.md.
SyntheticSpec parse_synthetic_spec(const std::string& json_text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

}  // namespace cropspec
