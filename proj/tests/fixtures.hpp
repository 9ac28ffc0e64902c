#pragma once

// Dataset builders shared across test suites.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <cropspec/rng.hpp>
#include <cropspec/types.hpp>

namespace fixtures {

inline cropspec::WavelengthGrid grid2() {
  return cropspec::WavelengthGrid{{500.0, 600.0}};
}

inline cropspec::WavelengthGrid make_grid(int bands) {
  std::vector<double> w;
  for (int b = 0; b < bands; ++b) w.push_back(450.0 + 10.0 * b);
  return cropspec::WavelengthGrid{std::move(w)};
}

inline cropspec::SampleRecord make_record(cropspec::CropLabel crop, cropspec::StageLabel stage,
                                          const std::vector<double>& reflectance) {
  cropspec::SampleRecord rec;
  rec.reflectance.resize(static_cast<long>(reflectance.size()));
  for (std::size_t i = 0; i < reflectance.size(); ++i)
    rec.reflectance[static_cast<long>(i)] = reflectance[i];
  rec.crop = crop;
  rec.stage = stage;
  rec.aez = "test";
  rec.source_id = "fixture";
  return rec;
}

// Four two-band samples at mean + {(1,1), (1,-1), (-1,1), (-1,-1)}: the
// sample mean is exactly `mean` and the biased covariance is exactly the
// identity, so fitted Gaussians have closed-form parameters.
inline void add_corner_class(cropspec::Dataset& ds, cropspec::CropLabel crop,
                             cropspec::StageLabel stage, double mx, double my) {
  for (const auto [dx, dy] : {std::pair{1.0, 1.0}, std::pair{1.0, -1.0}, std::pair{-1.0, 1.0},
                              std::pair{-1.0, -1.0}})
    ds.records.push_back(make_record(crop, stage, {mx + dx, my + dy}));
}

// Well-separated two-band blobs, one per listed class, sampled with the
// library generator so fixtures are reproducible.
inline cropspec::Dataset separable_dataset(
    const std::vector<std::pair<cropspec::CropLabel, cropspec::StageLabel>>& classes,
    int per_class, std::uint64_t seed = 42, double spread = 0.05) {
  cropspec::Dataset ds;
  ds.grid = grid2();
  cropspec::Rng rng(seed);
  double cx = 0.0;
  for (const auto& [crop, stage] : classes) {
    for (int i = 0; i < per_class; ++i)
      ds.records.push_back(make_record(
          crop, stage, {cx + spread * rng.normal(), cx * 0.5 + spread * rng.normal()}));
    cx += 10.0;
  }
  return ds;
}

}  // namespace fixtures
