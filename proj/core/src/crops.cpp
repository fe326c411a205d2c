// SPDX-License-Identifier: Apache-2.0
#include "forestseg/crops.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "forestseg/cloud_io.hpp"
#include "forestseg/errors.hpp"
#include "forestseg/rng.hpp"
#include "forestseg/spatial_index.hpp"

namespace forestseg {

namespace {
constexpr char kMaskMagic[4] = {'F', 'M', 'S', 'K'};
}

void CropSpec::validate() const {
  if (!(inner_size > 0.0) || crop_size < inner_size) {
    throw argument_error("need crop_size >= inner_size > 0");
  }
  if (count < 1) throw argument_error("count must be >= 1");
}

Crop sample_crop(const LabeledCloud& cloud, const CropSpec& spec,
                 std::size_t index) {
  spec.validate();
  const Box2 bounds = bounding_box_2d(cloud.points);
  const double half_inner = spec.inner_size / 2.0;
  const double half_crop = spec.crop_size / 2.0;
  if (bounds.width() < spec.inner_size || bounds.height() < spec.inner_size) {
    throw argument_error(
        "cloud bounds are smaller than the inner square; cannot crop");
  }

  SplitMix64 rng(mix_seed(spec.seed, index));
  const double cx =
      rng.uniform(bounds.min_x + half_inner, bounds.max_x - half_inner);
  const double cy =
      rng.uniform(bounds.min_y + half_inner, bounds.max_y - half_inner);

  Crop crop;
  crop.center_x = cx;
  crop.center_y = cy;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    if (std::abs(p.x - cx) > half_crop || std::abs(p.y - cy) > half_crop)
      continue;
    crop.source_index.push_back(static_cast<std::uint32_t>(i));
    crop.cloud.points.push_back(Point3{p.x - cx, p.y - cy, p.z});
    crop.cloud.labels.push_back(cloud.labels[i]);
    if (cloud.has_heights()) crop.cloud.heights.push_back(cloud.heights[i]);
    const bool inner =
        std::abs(p.x - cx) <= half_inner && std::abs(p.y - cy) <= half_inner;
    std::uint8_t bits = inner ? kMaskInnerBit : 0;
    if (inner && !cloud.labels[i].is_non_annotated())
      bits |= kMaskSupervisedBit;
    crop.mask.push_back(bits);
  }
  crop.cloud.meta = cloud.meta;
  return crop;
}

std::string CropManifest::to_json_string() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const CropManifestEntry& e : crops) {
    entries.push_back({
        {"file", e.file},
        {"mask", e.mask_file},
        {"center", {e.center_x, e.center_y}},
        {"n_points", e.n_points},
        {"n_inner", e.n_inner},
        {"n_supervised", e.n_supervised},
    });
  }
  const nlohmann::json j{
      {"seed", spec.seed},
      {"crop_size", spec.crop_size},
      {"inner_size", spec.inner_size},
      {"count", spec.count},
      {"crops", entries},
  };
  return j.dump(2);
}

CropManifest export_crops(const LabeledCloud& cloud, const CropSpec& spec,
                          const std::string& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw io_error("cannot create directory " + out_dir + ": " + ec.message());
  }

  CropManifest manifest;
  manifest.spec = spec;
  manifest.crops.resize(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const Crop crop = sample_crop(cloud, spec, i);
    char name[32];
    std::snprintf(name, sizeof(name), "crop_%06zu", i);
    const std::string base = std::string(name);
    const std::string cloud_path = out_dir + "/" + base + ".fseg";
    const std::string mask_path = out_dir + "/" + base + ".mask";
    save_cloud(crop.cloud, cloud_path, CloudFormat::packed_binary);
    save_mask(crop.mask, mask_path);

    CropManifestEntry& e = manifest.crops[i];
    e.file = base + ".fseg";
    e.mask_file = base + ".mask";
    e.center_x = crop.center_x;
    e.center_y = crop.center_y;
    e.n_points = crop.cloud.size();
    for (const std::uint8_t bits : crop.mask) {
      if (bits & kMaskInnerBit) ++e.n_inner;
      if (bits & kMaskSupervisedBit) ++e.n_supervised;
    }
  }

  std::ofstream out(out_dir + "/manifest.json", std::ios::trunc);
  if (!out) throw io_error("cannot write " + out_dir + "/manifest.json");
  out << manifest.to_json_string() << "\n";
  if (!out) throw io_error("write failed for " + out_dir + "/manifest.json");
  return manifest;
}

void save_mask(const std::vector<std::uint8_t>& mask,
               const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  out.write(kMaskMagic, 4);
  const std::uint64_t count = mask.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(mask.data()),
            static_cast<std::streamsize>(mask.size()));
  if (!out) throw io_error("write failed for " + path);
}

std::vector<std::uint8_t> load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMaskMagic, 4) != 0) {
    throw parse_error(path, 0, 0, "bad magic, expected FMSK");
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw parse_error(path, 0, 4, "truncated header");
  std::vector<std::uint8_t> mask(count);
  in.read(reinterpret_cast<char*>(mask.data()),
          static_cast<std::streamsize>(count));
  if (!in) throw parse_error(path, 0, 12, "truncated mask data");
  return mask;
}

}  // namespace forestseg
