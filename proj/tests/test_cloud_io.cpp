// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "forestseg/cloud_io.hpp"
#include "forestseg/errors.hpp"
#include "forestseg/predictions.hpp"
#include "forestseg/rng.hpp"
#include "test_support.hpp"

using namespace forestseg;
using testsupport::TempDir;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

LabeledCloud random_cloud(std::uint64_t seed, std::size_t n) {
  SplitMix64 rng(seed);
  LabeledCloud cloud;
  cloud.points.resize(n);
  cloud.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points[i] = {rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0),
                       rng.uniform(-5.0, 40.0)};
    const int kind = static_cast<int>(rng.next_below(4));
    cloud.labels[i] =
        kind == 0   ? PointLabel::tree(1 + (std::int32_t)rng.next_below(50))
        : kind == 1 ? PointLabel::non_tree()
        : kind == 2 ? PointLabel::unlabeled()
                    : PointLabel::non_annotated();
  }
  return cloud;
}

}  // namespace

TEST_CASE("xyz text decodes the documented label codes") {
  TempDir dir("io");
  const std::string path = dir.file("a.xyz");
  write_file(path, "0 0 0 1\n1 0 0 1\n0 1 0 0\n");
  const LabeledCloud cloud = load_cloud(path, CloudFormat::xyz_text);
  REQUIRE(cloud.size() == 3);
  CHECK(cloud.labels[0] == PointLabel::tree(1));
  CHECK(cloud.labels[1] == PointLabel::tree(1));
  CHECK(cloud.labels[2] == PointLabel::non_tree());
  CHECK(cloud.points[1].x == 1.0);
}

TEST_CASE("empty file loads as an empty cloud") {
  TempDir dir("io");
  const std::string path = dir.file("empty.xyz");
  write_file(path, "");
  CHECK(load_cloud(path).size() == 0);
}

TEST_CASE("xyz text without a label column is unlabeled") {
  TempDir dir("io");
  const std::string path = dir.file("raw.xyz");
  write_file(path, "1.5 2.5 3.5\n# comment\n\n4 5 6\n");
  const LabeledCloud cloud = load_cloud(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.labels[0].is_unlabeled());
  CHECK(cloud.labels[1].is_unlabeled());
}

TEST_CASE("malformed xyz content reports the position") {
  TempDir dir("io");
  const std::string path = dir.file("bad.xyz");
  write_file(path, "0 0 0 1\n0 zzz 0 1\n");
  CHECK_THROWS_WITH_AS(load_cloud(path), doctest::Contains(":2"),
                       parse_error);

  write_file(path, "0 0 0 1 junk\n");
  CHECK_THROWS_AS(load_cloud(path), parse_error);

  write_file(path, "0 nan 0 1\n");
  CHECK_THROWS_AS(load_cloud(path), parse_error);

  write_file(path, "0 0 0 -3\n");  // below the smallest valid code
  CHECK_THROWS_AS(load_cloud(path), parse_error);
}

TEST_CASE("missing file raises io_error, unknown extension argument_error") {
  CHECK_THROWS_AS(load_cloud("/nonexistent/x.xyz"), io_error);
  CHECK_THROWS_AS(format_from_path("cloud.laz"), argument_error);
}

TEST_CASE("xyz round trip preserves coordinates and labels exactly") {
  TempDir dir("io");
  const LabeledCloud cloud = random_cloud(7, 10000);
  const std::string path = dir.file("rt.xyz");
  save_cloud(cloud, path);
  const LabeledCloud back = load_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.points[i] == cloud.points[i]);  // shortest round-trip digits
    CHECK(back.labels[i] == cloud.labels[i]);
  }
}

TEST_CASE("saved labels use the documented integer codes") {
  TempDir dir("io");
  LabeledCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 1, 1}};
  cloud.labels = {PointLabel::tree(7), PointLabel::non_annotated()};
  const std::string path = dir.file("codes.xyz");
  save_cloud(cloud, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "0 0 0 7");
  std::getline(in, line);
  CHECK(line == "1 1 1 -2");
}

TEST_CASE("zero point cloud round trips through every format") {
  TempDir dir("io");
  const LabeledCloud empty;
  for (const char* name : {"e.xyz", "e.ply", "e.fseg"}) {
    const std::string path = dir.file(name);
    save_cloud(empty, path);
    CHECK(load_cloud(path).size() == 0);
  }
}

TEST_CASE("ply binary round trip is exact") {
  TempDir dir("io");
  const LabeledCloud cloud = random_cloud(8, 5000);
  const std::string path = dir.file("rt.ply");
  save_cloud(cloud, path);
  const LabeledCloud back = load_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.points[i] == cloud.points[i]);
    CHECK(back.labels[i] == cloud.labels[i]);
  }
}

TEST_CASE("ascii ply with extra scalar properties parses") {
  TempDir dir("io");
  const std::string path = dir.file("a.ply");
  write_file(path,
             "ply\n"
             "format ascii 1.0\n"
             "comment made elsewhere\n"
             "element vertex 2\n"
             "property float x\n"
             "property float y\n"
             "property float z\n"
             "property uchar intensity\n"
             "property int instance_id\n"
             "end_header\n"
             "1 2 3 200 5\n"
             "4 5 6 100 0\n");
  const LabeledCloud cloud = load_cloud(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0].x == 1.0);
  CHECK(cloud.labels[0] == PointLabel::tree(5));
  CHECK(cloud.labels[1] == PointLabel::non_tree());
}

TEST_CASE("ply without instance_id loads unlabeled") {
  TempDir dir("io");
  const std::string path = dir.file("noid.ply");
  write_file(path,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\n"
             "end_header\n1 2 3\n");
  const LabeledCloud cloud = load_cloud(path);
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.labels[0].is_unlabeled());
}

TEST_CASE("binary little endian ply with float32 coordinates parses") {
  TempDir dir("io");
  const std::string path = dir.file("f32.ply");
  std::string bytes =
      "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
      "property float x\nproperty float y\nproperty float z\n"
      "property int instance_id\nend_header\n";
  const float coords[2][3] = {{1.5f, 2.5f, 3.5f}, {-4.0f, 0.25f, 9.0f}};
  const std::int32_t codes[2] = {3, -2};
  for (int v = 0; v < 2; ++v) {
    bytes.append(reinterpret_cast<const char*>(coords[v]), 12);
    bytes.append(reinterpret_cast<const char*>(&codes[v]), 4);
  }
  write_file(path, bytes);
  const LabeledCloud cloud = load_cloud(path);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0] == Point3{1.5, 2.5, 3.5});
  CHECK(cloud.points[1].y == 0.25);
  CHECK(cloud.labels[0] == PointLabel::tree(3));
  CHECK(cloud.labels[1].is_non_annotated());
}

TEST_CASE("unwritable destinations raise io_error") {
  LabeledCloud cloud;
  cloud.points = {{0, 0, 0}};
  cloud.labels = {PointLabel::non_tree()};
  CHECK_THROWS_AS(save_cloud(cloud, "/nonexistent-dir/x.xyz"), io_error);
  CHECK_THROWS_AS(save_cloud(cloud, "/nonexistent-dir/x.fseg"), io_error);
  PredictionSet pred;
  pred.semantic_score = {0.5f};
  pred.offset = {{0, 0, 0}};
  CHECK_THROWS_AS(save_predictions(pred, "/nonexistent-dir/p.fprd"), io_error);
}

TEST_CASE("ply header problems raise parse_error") {
  TempDir dir("io");
  const std::string path = dir.file("bad.ply");
  write_file(path,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float y\nproperty float z\nend_header\n1 2\n");
  CHECK_THROWS_AS(load_cloud(path), parse_error);  // x missing

  write_file(path,
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property list uchar int vertex_indices\nend_header\n");
  CHECK_THROWS_AS(load_cloud(path), parse_error);  // list property

  write_file(path, "not a ply\n");
  CHECK_THROWS_AS(load_cloud(path), parse_error);
}

TEST_CASE("packed binary preserves labels exactly and coords to f32") {
  TempDir dir("io");
  const LabeledCloud cloud = random_cloud(9, 20000);
  const std::string path = dir.file("rt.fseg");
  save_cloud(cloud, path);
  const LabeledCloud back = load_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(back.labels[i] == cloud.labels[i]);
    CHECK(back.points[i].x == static_cast<double>(
                                  static_cast<float>(cloud.points[i].x)));
    CHECK(back.points[i].z == static_cast<double>(
                                  static_cast<float>(cloud.points[i].z)));
  }
}

TEST_CASE("one million point packed round trip keeps labels exact") {
  TempDir dir("io");
  const LabeledCloud cloud = random_cloud(10, 1000000);
  const std::string path = dir.file("big.fseg");
  save_cloud(cloud, path);
  const LabeledCloud back = load_cloud(path);
  REQUIRE(back.size() == cloud.size());
  bool labels_equal = true;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    labels_equal = labels_equal && back.labels[i] == cloud.labels[i];
  }
  CHECK(labels_equal);
}

TEST_CASE("truncated packed file raises parse_error") {
  TempDir dir("io");
  const LabeledCloud cloud = random_cloud(11, 100);
  const std::string path = dir.file("t.fseg");
  save_cloud(cloud, path);
  const std::string bytes = testsupport::read_file_bytes(path);
  write_file(path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_cloud(path), parse_error);
  write_file(path, "XXXX");
  CHECK_THROWS_AS(load_cloud(path), parse_error);
}

TEST_CASE("prediction files round trip and validate") {
  TempDir dir("io");
  SplitMix64 rng(12);
  PredictionSet pred;
  const std::size_t n = 5000;
  pred.semantic_score.resize(n);
  pred.offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred.semantic_score[i] = static_cast<float>(rng.next_double());
    pred.offset[i] = {static_cast<float>(rng.uniform(-3, 3)),
                      static_cast<float>(rng.uniform(-3, 3)),
                      static_cast<float>(rng.uniform(-3, 3))};
  }
  const std::string path = dir.file("p.fprd");
  save_predictions(pred, path);
  const PredictionSet back = load_predictions(path, n);
  CHECK(back.semantic_score == pred.semantic_score);
  CHECK(back.offset == pred.offset);

  CHECK_THROWS_WITH_AS(load_predictions(path, n + 1),
                       doctest::Contains("5000"), argument_error);
  CHECK_THROWS_WITH_AS(load_predictions(path, n + 1),
                       doctest::Contains("5001"), argument_error);
}

TEST_CASE("prediction scores outside [0,1] are rejected") {
  TempDir dir("io");
  PredictionSet pred;
  pred.semantic_score = {0.5f, 1.5f};
  pred.offset = {{0, 0, 0}, {0, 0, 0}};
  const std::string path = dir.file("bad.fprd");
  save_predictions(pred, path);  // writer does not police the range
  CHECK_THROWS_AS(load_predictions(path, 2), parse_error);
}

TEST_CASE("dataset metadata json round trips") {
  TempDir dir("io");
  DatasetMeta meta;
  meta.name = "PLOT1";
  meta.country = "Nowhere";
  meta.n_plots = 3;
  meta.n_trees = 47;
  meta.annotated_area_ha = 0.33;
  meta.forest_type = "temperate mixed forest";
  meta.sensor = "test scanner";
  const std::string path = dir.file("meta.json");
  save_dataset_meta(meta, path);
  const DatasetMeta back = load_dataset_meta(path);
  CHECK(back.name == meta.name);
  CHECK(back.n_trees == 47);
  CHECK(back.annotated_area_ha == doctest::Approx(0.33));

  write_file(path, "{\"n_trees\": -5}");
  CHECK_THROWS_AS(load_dataset_meta(path), argument_error);
}
