// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "forestseg/rng.hpp"
#include "forestseg/types.hpp"

namespace testsupport {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("forestseg-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<forestseg::Point3> random_points(std::uint64_t seed,
                                                    std::size_t n, double lo,
                                                    double hi) {
  forestseg::SplitMix64 rng(seed);
  std::vector<forestseg::Point3> pts(n);
  for (auto& p : pts) {
    p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
  }
  return pts;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

/// Canonical form of an instance labeling: positive ids renumbered by first
/// occurrence, 0 (noise) kept as is. Two labelings describe the same
/// partition up to id permutation iff their canonical forms are equal.
inline std::vector<std::int32_t> canonical_partition(
    const std::vector<std::int32_t>& ids) {
  std::vector<std::int32_t> out(ids.size(), 0);
  std::int32_t next = 1;
  std::vector<std::pair<std::int32_t, std::int32_t>> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] <= 0) continue;
    std::int32_t mapped = 0;
    for (const auto& [from, to] : seen) {
      if (from == ids[i]) {
        mapped = to;
        break;
      }
    }
    if (mapped == 0) {
      mapped = next++;
      seen.emplace_back(ids[i], mapped);
    }
    out[i] = mapped;
  }
  return out;
}

}  // namespace testsupport
