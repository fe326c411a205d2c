// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "forestseg/types.hpp"

namespace forestseg {

/// Per-point network outputs: probability of class tree and a 3D offset
/// vector pointing towards the point's tree base. Aligned 1:1 with a cloud.
struct PredictionSet {
  std::vector<float> semantic_score;            // in [0, 1]
  std::vector<std::array<float, 3>> offset;     // meters

  std::size_t size() const { return semantic_score.size(); }
};

/// Reads a prediction file and checks alignment against the cloud's point
/// count, score range and offset finiteness.
PredictionSet load_predictions(const std::string& path,
                               const LabeledCloud& cloud);

/// Reads a prediction file validating against an expected point count.
PredictionSet load_predictions(const std::string& path,
                               std::size_t expected_count);

void save_predictions(const PredictionSet& pred, const std::string& path);

}  // namespace forestseg
