// SPDX-License-Identifier: Apache-2.0
#include "forestseg/cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "forestseg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need swaps");

namespace forestseg {

namespace {

constexpr char kPackedMagic[4] = {'F', 'S', 'E', 'G'};
constexpr std::uint16_t kPackedVersion = 1;

void validate_cloud_for_save(const LabeledCloud& cloud) {
  if (cloud.points.size() != cloud.labels.size()) {
    throw argument_error("cloud has " + std::to_string(cloud.points.size()) +
                         " points but " + std::to_string(cloud.labels.size()) +
                         " labels");
  }
}

void check_point(const Point3& p, const std::string& path, std::size_t line,
                 std::size_t offset) {
  if (!p.finite()) {
    throw parse_error(path, line, offset, "non-finite coordinate");
  }
}

PointLabel decode_label(std::int32_t code, const std::string& path,
                        std::size_t line, std::size_t offset) {
  if (!PointLabel::valid_code(code)) {
    throw parse_error(path, line, offset,
                      "label code " + std::to_string(code) +
                          " outside encoding (>=1 tree, 0 non-tree, "
                          "-1 unlabeled, -2 non-annotated)");
  }
  return PointLabel::from_code(code);
}

// ---------------------------------------------------------------- xyz_text

LabeledCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  LabeledCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  std::size_t byte_offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_start = byte_offset;
    byte_offset += line.size() + 1;
    const char* p = line.data();
    const char* end = p + line.size();
    auto skip_ws = [&] {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    };
    skip_ws();
    if (p == end || *p == '#') continue;  // blank line or comment

    double coords[3];
    for (double& c : coords) {
      skip_ws();
      const auto r = std::from_chars(p, end, c);
      if (r.ec != std::errc{}) {
        throw parse_error(path, line_no, line_start + (p - line.data()),
                          "expected coordinate");
      }
      p = r.ptr;
    }
    skip_ws();
    std::int32_t code = PointLabel::kUnlabeledCode;  // label column optional
    if (p < end) {
      const auto r = std::from_chars(p, end, code);
      if (r.ec != std::errc{}) {
        throw parse_error(path, line_no, line_start + (p - line.data()),
                          "expected integer label");
      }
      p = r.ptr;
      skip_ws();
      if (p < end) {
        throw parse_error(path, line_no, line_start + (p - line.data()),
                          "trailing characters after label");
      }
    }
    const Point3 pt{coords[0], coords[1], coords[2]};
    check_point(pt, path, line_no, line_start);
    cloud.points.push_back(pt);
    cloud.labels.push_back(decode_label(code, path, line_no, line_start));
  }
  return cloud;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, r.ptr);
}

void save_xyz(const LabeledCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  std::string buf;
  buf.reserve(1 << 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    append_double(buf, cloud.points[i].x);
    buf.push_back(' ');
    append_double(buf, cloud.points[i].y);
    buf.push_back(' ');
    append_double(buf, cloud.points[i].z);
    buf.push_back(' ');
    buf.append(std::to_string(cloud.labels[i].code()));
    buf.push_back('\n');
    if (buf.size() > (1 << 15)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw io_error("write failed for " + path);
}

// --------------------------------------------------------------------- ply

enum class PlyType { f32, f64, i8, u8, i16, u16, i32, u32 };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    default: return 4;
  }
}

bool parse_ply_type(const std::string& name, PlyType& out) {
  if (name == "float" || name == "float32") out = PlyType::f32;
  else if (name == "double" || name == "float64") out = PlyType::f64;
  else if (name == "char" || name == "int8") out = PlyType::i8;
  else if (name == "uchar" || name == "uint8") out = PlyType::u8;
  else if (name == "short" || name == "int16") out = PlyType::i16;
  else if (name == "ushort" || name == "uint16") out = PlyType::u16;
  else if (name == "int" || name == "int32") out = PlyType::i32;
  else if (name == "uint" || name == "uint32") out = PlyType::u32;
  else return false;
  return true;
}

double decode_scalar(const unsigned char* p, PlyType t) {
  switch (t) {
    case PlyType::f32: { float v; std::memcpy(&v, p, 4); return v; }
    case PlyType::f64: { double v; std::memcpy(&v, p, 8); return v; }
    case PlyType::i8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
    case PlyType::u8: { std::uint8_t v; std::memcpy(&v, p, 1); return v; }
    case PlyType::i16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::u16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::i32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    default: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
  }
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  std::size_t offset = 0;  // byte offset within a binary vertex record
};

LabeledCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);

  std::size_t line_no = 0;
  std::size_t byte_offset = 0;
  auto read_line = [&](std::string& line) {
    if (!std::getline(in, line)) {
      throw parse_error(path, line_no, byte_offset, "unexpected end of header");
    }
    ++line_no;
    byte_offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  std::string line;
  read_line(line);
  if (line != "ply") throw parse_error(path, 1, 0, "missing ply magic");

  bool binary = false;
  bool format_seen = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  bool vertex_seen = false;
  std::vector<PlyProperty> props;
  std::size_t record_size = 0;

  for (;;) {
    read_line(line);
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else
        throw parse_error(path, line_no, byte_offset,
                          "unsupported ply format " + fmt);
      format_seen = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      in_vertex_element = (name == "vertex");
      if (in_vertex_element) {
        vertex_count = count;
        vertex_seen = true;
      }
    } else if (tok == "property") {
      if (!in_vertex_element) continue;  // properties of other elements
      std::string type_name;
      ls >> type_name;
      if (type_name == "list") {
        throw parse_error(path, line_no, byte_offset,
                          "list properties on vertex element not supported");
      }
      PlyProperty prop;
      if (!parse_ply_type(type_name, prop.type)) {
        throw parse_error(path, line_no, byte_offset,
                          "unknown property type " + type_name);
      }
      ls >> prop.name;
      prop.offset = record_size;
      record_size += ply_type_size(prop.type);
      props.push_back(prop);
    } else if (tok == "end_header") {
      break;
    } else {
      throw parse_error(path, line_no, byte_offset,
                        "unknown header keyword " + tok);
    }
  }
  if (!format_seen) throw parse_error(path, line_no, byte_offset, "missing format line");
  if (!vertex_seen) throw parse_error(path, line_no, byte_offset, "missing vertex element");

  int ix = -1, iy = -1, iz = -1, ilabel = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = static_cast<int>(i);
    else if (props[i].name == "y") iy = static_cast<int>(i);
    else if (props[i].name == "z") iz = static_cast<int>(i);
    else if (props[i].name == "instance_id") ilabel = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw parse_error(path, line_no, byte_offset,
                      "vertex element must carry x, y, z properties");
  }
  // instance_id is optional on load; absent means unlabeled raw data.

  LabeledCloud cloud;
  cloud.points.resize(vertex_count);
  cloud.labels.assign(vertex_count, PointLabel::unlabeled());

  if (binary) {
    std::vector<unsigned char> record(record_size);
    for (std::size_t v = 0; v < vertex_count; ++v) {
      in.read(reinterpret_cast<char*>(record.data()),
              static_cast<std::streamsize>(record_size));
      if (!in) {
        throw parse_error(path, line_no, byte_offset,
                          "truncated vertex data at vertex " +
                              std::to_string(v));
      }
      byte_offset += record_size;
      const auto scalar = [&](int pi) {
        return decode_scalar(record.data() + props[(std::size_t)pi].offset,
                             props[(std::size_t)pi].type);
      };
      cloud.points[v] = Point3{scalar(ix), scalar(iy), scalar(iz)};
      check_point(cloud.points[v], path, line_no, byte_offset);
      if (ilabel >= 0) {
        cloud.labels[v] = decode_label(
            static_cast<std::int32_t>(scalar(ilabel)), path, line_no,
            byte_offset);
      }
    }
  } else {
    std::vector<double> values(props.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
      read_line(line);
      const char* p = line.data();
      const char* end = p + line.size();
      for (std::size_t k = 0; k < props.size(); ++k) {
        while (p < end && (*p == ' ' || *p == '\t')) ++p;
        const auto r = std::from_chars(p, end, values[k]);
        if (r.ec != std::errc{}) {
          throw parse_error(path, line_no, byte_offset,
                            "expected value for property " + props[k].name);
        }
        p = r.ptr;
      }
      cloud.points[v] = Point3{values[(std::size_t)ix], values[(std::size_t)iy],
                               values[(std::size_t)iz]};
      check_point(cloud.points[v], path, line_no, byte_offset);
      if (ilabel >= 0) {
        cloud.labels[v] = decode_label(
            static_cast<std::int32_t>(values[(std::size_t)ilabel]), path,
            line_no, byte_offset);
      }
    }
  }
  return cloud;
}

void save_ply(const LabeledCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\n"
      << "property double y\n"
      << "property double z\n"
      << "property int instance_id\n"
      << "end_header\n";
  std::vector<char> record(8 * 3 + 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const std::int32_t code = cloud.labels[i].code();
    std::memcpy(record.data(), &p.x, 8);
    std::memcpy(record.data() + 8, &p.y, 8);
    std::memcpy(record.data() + 16, &p.z, 8);
    std::memcpy(record.data() + 24, &code, 4);
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw io_error("write failed for " + path);
}

// ------------------------------------------------------------ packed_binary

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_column(std::ofstream& out, const std::vector<T>& col) {
  out.write(reinterpret_cast<const char*>(col.data()),
            static_cast<std::streamsize>(col.size() * sizeof(T)));
}

LabeledCloud load_packed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kPackedMagic, 4) != 0) {
    throw parse_error(path, 0, 0, "bad magic, expected FSEG");
  }
  std::uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kPackedVersion) {
    throw parse_error(path, 0, 4,
                      "unsupported version " + std::to_string(version));
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw parse_error(path, 0, 6, "truncated header");

  auto read_column = [&](auto& col, const char* what, std::size_t offset) {
    using T = typename std::remove_reference_t<decltype(col)>::value_type;
    col.resize(count);
    in.read(reinterpret_cast<char*>(col.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) {
      throw parse_error(path, 0, offset,
                        std::string("truncated ") + what + " column");
    }
  };

  std::vector<float> xs, ys, zs;
  std::vector<std::int32_t> codes;
  std::size_t offset = 14;
  read_column(xs, "x", offset);
  offset += count * 4;
  read_column(ys, "y", offset);
  offset += count * 4;
  read_column(zs, "z", offset);
  offset += count * 4;
  read_column(codes, "label", offset);

  LabeledCloud cloud;
  cloud.points.resize(count);
  cloud.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    cloud.points[i] = Point3{xs[i], ys[i], zs[i]};
    check_point(cloud.points[i], path, 0, 14 + i * 4);
    cloud.labels[i] = decode_label(codes[i], path, 0, 14 + count * 12 + i * 4);
  }
  return cloud;
}

void save_packed(const LabeledCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  out.write(kPackedMagic, 4);
  write_pod(out, kPackedVersion);
  write_pod(out, static_cast<std::uint64_t>(cloud.size()));

  const std::size_t n = cloud.size();
  std::vector<float> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.points[i].x);
  write_column(out, col);
  for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.points[i].y);
  write_column(out, col);
  for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<float>(cloud.points[i].z);
  write_column(out, col);
  std::vector<std::int32_t> codes(n);
  for (std::size_t i = 0; i < n; ++i) codes[i] = cloud.labels[i].code();
  write_column(out, codes);
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == "xyz" || ext == "txt") return CloudFormat::xyz_text;
  if (ext == "ply") return CloudFormat::ply;
  if (ext == "fseg" || ext == "bin") return CloudFormat::packed_binary;
  throw argument_error("cannot infer cloud format from path: " + path);
}

LabeledCloud load_cloud(const std::string& path, CloudFormat format) {
  LabeledCloud cloud;
  switch (format) {
    case CloudFormat::xyz_text: cloud = load_xyz(path); break;
    case CloudFormat::ply: cloud = load_ply(path); break;
    case CloudFormat::packed_binary: cloud = load_packed(path); break;
  }
  return cloud;
}

LabeledCloud load_cloud(const std::string& path) {
  return load_cloud(path, format_from_path(path));
}

void save_cloud(const LabeledCloud& cloud, const std::string& path,
                CloudFormat format) {
  validate_cloud_for_save(cloud);
  switch (format) {
    case CloudFormat::xyz_text: save_xyz(cloud, path); break;
    case CloudFormat::ply: save_ply(cloud, path); break;
    case CloudFormat::packed_binary: save_packed(cloud, path); break;
  }
}

void save_cloud(const LabeledCloud& cloud, const std::string& path) {
  save_cloud(cloud, path, format_from_path(path));
}

// ------------------------------------------------------------- DatasetMeta

std::string dataset_meta_to_json(const DatasetMeta& meta) {
  nlohmann::json j{
      {"name", meta.name},
      {"country", meta.country},
      {"n_plots", meta.n_plots},
      {"n_trees", meta.n_trees},
      {"annotated_area_ha", meta.annotated_area_ha},
      {"forest_type", meta.forest_type},
      {"sensor", meta.sensor},
  };
  return j.dump(2);
}

DatasetMeta load_dataset_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(path, 0, e.byte, e.what());
  }
  DatasetMeta meta;
  meta.name = j.value("name", "");
  meta.country = j.value("country", "");
  meta.n_plots = j.value("n_plots", 0);
  meta.n_trees = j.value("n_trees", 0);
  meta.annotated_area_ha = j.value("annotated_area_ha", 0.0);
  meta.forest_type = j.value("forest_type", "");
  meta.sensor = j.value("sensor", "");
  if (meta.n_trees < 0) throw argument_error("n_trees must be >= 0");
  if (meta.annotated_area_ha < 0)
    throw argument_error("annotated_area_ha must be >= 0");
  return meta;
}

void save_dataset_meta(const DatasetMeta& meta, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write " + path);
  out << dataset_meta_to_json(meta) << "\n";
  if (!out) throw io_error("write failed for " + path);
}

}  // namespace forestseg
