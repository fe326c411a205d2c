// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "forestseg/types.hpp"

namespace forestseg {

enum class CloudFormat {
  xyz_text,       // "x y z label" per line
  ply,            // ascii or binary_little_endian, x/y/z + instance_id
  packed_binary,  // FSEG columnar binary
};

/// Maps a file extension to a format: .xyz/.txt, .ply, .fseg/.bin.
CloudFormat format_from_path(const std::string& path);

/// Loads a labeled cloud, validating coordinates (finite) and label codes.
/// Throws parse_error with the failing position on malformed content and
/// io_error when the file cannot be read.
LabeledCloud load_cloud(const std::string& path, CloudFormat format);
LabeledCloud load_cloud(const std::string& path);

/// Writes a cloud so that load_cloud reads back identical labels and
/// coordinates up to the format's precision (exact for xyz_text and ply,
/// 32-bit floats for packed_binary).
void save_cloud(const LabeledCloud& cloud, const std::string& path,
                CloudFormat format);
void save_cloud(const LabeledCloud& cloud, const std::string& path);

/// Dataset metadata sidecar (JSON object with the DatasetMeta fields).
DatasetMeta load_dataset_meta(const std::string& path);
void save_dataset_meta(const DatasetMeta& meta, const std::string& path);
std::string dataset_meta_to_json(const DatasetMeta& meta);

}  // namespace forestseg
