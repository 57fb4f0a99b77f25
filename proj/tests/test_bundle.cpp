#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include <Eigen/QR>

#include "detrank/bundle.hpp"
#include "detrank/error.hpp"
#include "detrank/geometry.hpp"
#include "detrank/io.hpp"
#include "detrank/transfer_scores.hpp"

using namespace detrank;
namespace fs = std::filesystem;

namespace {

FeatureBundle tiny_bundle(Eigen::Index m, Eigen::Index d, std::uint32_t k) {
  FeatureBundle b;
  b.model_name = "tiny";
  b.dataset_name = "unit";
  b.extractor_info = "hand made";
  b.num_classes = k;
  b.features = FloatMatrix(m, d);
  b.boxes = FloatMatrix(m, 4);
  b.image_dims = FloatMatrix(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) b.features(i, j) = 0.25f * float(i) - 0.5f * float(j);
    b.boxes.row(i) << 10.0f + float(i), 20.0f, 30.0f + float(i), 60.0f;
    b.image_dims.row(i) << 100.0f, 200.0f;
    b.labels.push_back(static_cast<std::uint32_t>(i) % k);
  }
  return b;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("detrank-test-bundle-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("crc32 check value") {
  const std::string s = "123456789";
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(s.data()),
                                            s.size());
  CHECK(crc32_of(bytes) == 0xCBF43926u);
}

TEST_CASE("write then read keeps dimensions and metadata") {
  const auto dir = scratch_dir("dims");
  const auto b = tiny_bundle(3, 8, 2);
  write_bundle(b, dir / "x.dtfb");
  CHECK(fs::exists(dir / "x.manifest.json"));
  const auto r = read_bundle(dir / "x.dtfb");
  CHECK(r.num_objects() == 3);
  CHECK(r.feature_dim() == 8);
  CHECK(r.num_classes == 2);
  CHECK(r.model_name == "tiny");
  CHECK(r.dataset_name == "unit");
  CHECK(r.extractor_info == "hand made");
  CHECK(r == b);
}

TEST_CASE("encode/decode is byte-level identity with optional sections") {
  auto b = synth_bundle(37, 9, 4, 0.6, 11);
  b.levels = std::vector<std::uint8_t>(37);
  for (std::size_t i = 0; i < 37; ++i) (*b.levels)[i] = static_cast<std::uint8_t>(i % 4);
  b.level_count = 4;
  b.gradients = FloatMatrix::Random(37, 5);
  const auto bytes = encode_bundle(b);
  auto back = decode_bundle(bytes);
  back.model_name = b.model_name;
  back.dataset_name = b.dataset_name;
  back.extractor_info = b.extractor_info;
  CHECK(back == b);
  CHECK(encode_bundle(back) == bytes);
}

TEST_CASE("minimal bundle size follows the layout") {
  const auto b = tiny_bundle(1, 1, 1);
  const auto bytes = encode_bundle(b);
  // header 32 + features 4 + boxes 16 + label 4 + dims 8 + crc 4
  CHECK(bytes.size() == 68u);
  CHECK(encoded_bundle_size(1, 1, 0, false) == 68u);
  CHECK(encoded_bundle_size(1, 1, 0, true) == 69u);
  CHECK(encoded_bundle_size(1, 1, 3, true) == 81u);
}

TEST_CASE("header carries magic, version and flags") {
  auto b = tiny_bundle(2, 3, 2);
  auto plain = encode_bundle(b);
  CHECK(std::string(plain.begin(), plain.begin() + 4) == "DTFB");
  CHECK(plain[4] == 1);
  CHECK(plain[6] == 0);

  b.levels = std::vector<std::uint8_t>{0, 1};
  b.level_count = 2;
  CHECK((encode_bundle(b)[6] & 1) == 1);
  b.gradients = FloatMatrix::Ones(2, 2);
  CHECK(encode_bundle(b)[6] == 3);
}

TEST_CASE("validation errors name the row") {
  auto b = tiny_bundle(3, 8, 2);
  b.labels[1] = 5;
  try {
    validate_bundle(b);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()) == "label out of range at row 1");
  }

  auto flipped = tiny_bundle(3, 8, 2);
  flipped.boxes(2, 0) = 50.0f;  // x1 > x2
  CHECK_THROWS_AS(validate_bundle(flipped), ValidationError);
  CHECK_THROWS_WITH(validate_bundle(flipped), doctest::Contains("at row 2"));

  auto outside = tiny_bundle(2, 2, 1);
  outside.boxes(0, 3) = 250.0f;
  CHECK_THROWS_AS(validate_bundle(outside), ValidationError);

  auto nan = tiny_bundle(2, 2, 1);
  nan.features(1, 1) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(validate_bundle(nan), "non-finite feature value at row 1", ValidationError);

  auto bad_level = tiny_bundle(2, 2, 1);
  bad_level.levels = std::vector<std::uint8_t>{0, 4};
  bad_level.level_count = 4;
  CHECK_THROWS_AS(validate_bundle(bad_level), ValidationError);
}

TEST_CASE("decode rejects malformed input with typed errors") {
  const auto good = encode_bundle(tiny_bundle(4, 3, 2));

  SUBCASE("flipped payload bit is a checksum failure") {
    auto bad = good;
    bad[40] ^= 0x01;
    CHECK_THROWS_AS((void)decode_bundle(bad), CorruptionError);
  }
  SUBCASE("flipped checksum byte") {
    auto bad = good;
    bad.back() ^= 0xFF;
    CHECK_THROWS_AS((void)decode_bundle(bad), CorruptionError);
  }
  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS((void)decode_bundle(bad), FormatError);
  }
  SUBCASE("unsupported version") {
    auto bad = good;
    bad[4] = 9;
    CHECK_THROWS_WITH_AS((void)decode_bundle(bad), "unsupported bundle version 9", FormatError);
  }
  SUBCASE("truncated") {
    std::vector<std::uint8_t> bad(good.begin(), good.end() - 7);
    CHECK_THROWS_AS((void)decode_bundle(bad), FormatError);
    std::vector<std::uint8_t> header_only(good.begin(), good.begin() + 20);
    CHECK_THROWS_AS((void)decode_bundle(header_only), FormatError);
  }
  SUBCASE("header dimension disagrees with payload") {
    auto bad = good;
    bad[16] = 4;  // D 3 -> 4
    CHECK_THROWS_AS((void)decode_bundle(bad), FormatError);
  }
  SUBCASE("gradient flag without gradient dimension") {
    auto bad = good;
    bad[6] = 2;
    CHECK_THROWS_AS((void)decode_bundle(bad), FormatError);
  }
}

TEST_CASE("manifest checksum mismatch is reported as corruption") {
  const auto dir = scratch_dir("manifest");
  write_bundle(tiny_bundle(3, 2, 2), dir / "a.dtfb");
  auto text = read_file_text(dir / "a.manifest.json");
  const auto pos = text.find("\"checksum\": \"");
  REQUIRE(pos != std::string::npos);
  auto& c = text[pos + 13];
  c = c == '0' ? '1' : '0';
  write_file_atomic(dir / "a.manifest.json", std::string_view(text));
  CHECK_THROWS_AS((void)read_bundle(dir / "a.dtfb"), CorruptionError);
}

TEST_CASE("missing manifest falls back to the file stem") {
  const auto dir = scratch_dir("stem");
  write_bundle(tiny_bundle(3, 2, 2), dir / "resnet50.dtfb");
  fs::remove(dir / "resnet50.manifest.json");
  CHECK(read_bundle(dir / "resnet50.dtfb").model_name == "resnet50");
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS((void)read_bundle("/nonexistent/nowhere.dtfb"), IoError);
}

TEST_CASE("manifest path replaces the extension") {
  CHECK(manifest_path_for("models/x.dtfb") == fs::path("models/x.manifest.json"));
}

TEST_CASE("synthetic bundle with quality 1 is exactly linear in its features") {
  const auto b = synth_bundle(100, 16, 3, 1.0, 7);
  validate_bundle(b);
  const Eigen::MatrixXd f = feature_matrix(b);
  const auto boxes = center_boxes(b);
  Eigen::MatrixXd y(100, 4);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const auto& c = boxes[static_cast<std::size_t>(i)];
    y.row(i) << c.xc, c.yc, c.wc, c.hc;
  }
  const Eigen::MatrixXd w = f.colPivHouseholderQr().solve(y);
  CHECK((f * w - y).norm() <= 1e-6);
}

TEST_CASE("synthetic bundles are deterministic per seed") {
  const auto a = encode_bundle(synth_bundle(100, 16, 3, 0.4, 7));
  const auto b = encode_bundle(synth_bundle(100, 16, 3, 0.4, 7));
  const auto c = encode_bundle(synth_bundle(100, 16, 3, 0.4, 8));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("synthetic quality raises U-LogME") {
  ScoreConfig cfg;
  const auto clean = score_u_logme(synth_bundle(200, 16, 3, 1.0, 3), cfg).score;
  const auto noisy = score_u_logme(synth_bundle(200, 16, 3, 0.0, 3), cfg).score;
  CHECK(clean > noisy);
}
