// SPDX-License-Identifier: Apache-2.0
#include "forestseg/predictions.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "forestseg/errors.hpp"

namespace forestseg {

namespace {
constexpr char kMagic[4] = {'F', 'P', 'R', 'D'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

PredictionSet load_predictions(const std::string& path,
                               std::size_t expected_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw parse_error(path, 0, 0, "bad magic, expected FPRD");
  }
  std::uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    throw parse_error(path, 0, 4,
                      "unsupported version " + std::to_string(version));
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw parse_error(path, 0, 6, "truncated header");
  if (count != expected_count) {
    throw argument_error("prediction file holds " + std::to_string(count) +
                         " records but the cloud has " +
                         std::to_string(expected_count) + " points");
  }

  auto read_column = [&](std::vector<float>& col, const char* what) {
    col.resize(count);
    in.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) {
      throw parse_error(path, 0, 14, std::string("truncated ") + what);
    }
  };

  std::vector<float> score, ox, oy, oz;
  read_column(score, "semantic_score column");
  read_column(ox, "offset_x column");
  read_column(oy, "offset_y column");
  read_column(oz, "offset_z column");

  PredictionSet pred;
  pred.semantic_score = std::move(score);
  pred.offset.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const float s = pred.semantic_score[i];
    if (!(s >= 0.0f && s <= 1.0f)) {  // also rejects NaN
      throw parse_error(path, 0, 14 + i * sizeof(float),
                        "semantic score " + std::to_string(s) +
                            " outside [0, 1] at record " + std::to_string(i));
    }
    pred.offset[i] = {ox[i], oy[i], oz[i]};
    if (!std::isfinite(ox[i]) || !std::isfinite(oy[i]) ||
        !std::isfinite(oz[i])) {
      throw parse_error(path, 0, 14 + count * sizeof(float),
                        "non-finite offset at record " + std::to_string(i));
    }
  }
  return pred;
}

PredictionSet load_predictions(const std::string& path,
                               const LabeledCloud& cloud) {
  return load_predictions(path, cloud.size());
}

void save_predictions(const PredictionSet& pred, const std::string& path) {
  if (pred.offset.size() != pred.semantic_score.size()) {
    throw argument_error("prediction set has " +
                         std::to_string(pred.semantic_score.size()) +
                         " scores but " + std::to_string(pred.offset.size()) +
                         " offsets");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::uint64_t count = pred.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));

  out.write(reinterpret_cast<const char*>(pred.semantic_score.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
  std::vector<float> col(count);
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < count; ++i) col[i] = pred.offset[i][(std::size_t)axis];
    out.write(reinterpret_cast<const char*>(col.data()),
              static_cast<std::streamsize>(count * sizeof(float)));
  }
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace forestseg
