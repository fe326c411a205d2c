// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

struct CropSpec {
  double crop_size = 35.0;   // square side, meters
  double inner_size = 8.0;   // supervised core side, meters
  std::uint64_t seed = 0;
  std::size_t count = 1;

  void validate() const;
};

/// Mask sidecar bits, one byte per crop point.
inline constexpr std::uint8_t kMaskInnerBit = 1;       // inside inner square
inline constexpr std::uint8_t kMaskSupervisedBit = 2;  // inner and annotated

struct Crop {
  LabeledCloud cloud;                       // re-centered to the crop center
  std::vector<std::uint8_t> mask;           // kMask* bits per point
  double center_x = 0.0;                    // in source cloud coordinates
  double center_y = 0.0;
  std::vector<std::uint32_t> source_index;  // into the source cloud
};

/// Draws the crop center uniformly (deterministic in spec.seed and index)
/// so that the inner square lies inside the cloud's 2D bounds, gathers all
/// points of the crop square, and flags inner/supervised points.
Crop sample_crop(const LabeledCloud& cloud, const CropSpec& spec,
                 std::size_t index);

struct CropManifestEntry {
  std::string file;
  std::string mask_file;
  double center_x = 0.0;
  double center_y = 0.0;
  std::size_t n_points = 0;
  std::size_t n_inner = 0;
  std::size_t n_supervised = 0;
};

struct CropManifest {
  CropSpec spec;
  std::vector<CropManifestEntry> crops;

  std::string to_json_string() const;
};

/// Writes spec.count crops into out_dir as packed binary clouds with mask
/// sidecars, plus a manifest.json. Re-running with the same spec produces
/// byte-identical files.
CropManifest export_crops(const LabeledCloud& cloud, const CropSpec& spec,
                          const std::string& out_dir);

/// FMSK sidecar: one flag byte per point.
void save_mask(const std::vector<std::uint8_t>& mask, const std::string& path);
std::vector<std::uint8_t> load_mask(const std::string& path);

}  // namespace forestseg
