#include "detrank/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include <zlib.h>

#include <Eigen/QR>
#include <json.hpp>

#include "detrank/error.hpp"
#include "detrank/geometry.hpp"
#include "detrank/io.hpp"
#include "detrank/table.hpp"
#include "detrank/random.hpp"

namespace detrank {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'F', 'B'};

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }

  template <typename T>
  void put(T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_raw(const char* data, std::size_t n) {
    bytes_.insert(bytes_.end(), data, data + n);
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return value;
  }
  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("bundle truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_matrix(ByteWriter& w, const FloatMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.put_f32(m(r, c));
  }
}

FloatMatrix get_matrix(ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
  FloatMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.get_f32();
  }
  return m;
}

bool bitwise_equal(const FloatMatrix& a, const FloatMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(float)) == 0;
}

[[noreturn]] void fail_row(const std::string& what, Eigen::Index row) {
  std::ostringstream msg;
  msg << what << " at row " << row;
  throw ValidationError(msg.str());
}

void require_finite(const FloatMatrix& m, const char* name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) fail_row(std::string("non-finite ") + name, i);
    }
  }
}

std::string hex32(std::uint32_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(8) << std::setfill('0') << v;
  return s.str();
}

}  // namespace

bool operator==(const FeatureBundle& a, const FeatureBundle& b) {
  if (a.model_name != b.model_name || a.dataset_name != b.dataset_name ||
      a.extractor_info != b.extractor_info || a.num_classes != b.num_classes ||
      a.labels != b.labels || a.levels != b.levels || a.level_count != b.level_count ||
      a.gradients.has_value() != b.gradients.has_value()) {
    return false;
  }
  if (a.gradients && !bitwise_equal(*a.gradients, *b.gradients)) return false;
  return bitwise_equal(a.features, b.features) && bitwise_equal(a.boxes, b.boxes) &&
         bitwise_equal(a.image_dims, b.image_dims);
}

void validate_bundle(const FeatureBundle& b) {
  const Eigen::Index m = b.features.rows();
  if (m < 1) throw ValidationError("bundle has no objects");
  if (b.features.cols() < 1) throw ValidationError("feature dimension must be at least 1");
  if (b.num_classes < 1) throw ValidationError("class count must be at least 1");
  if (b.boxes.rows() != m || b.boxes.cols() != 4) {
    throw ValidationError("boxes must be M x 4");
  }
  if (b.image_dims.rows() != m || b.image_dims.cols() != 2) {
    throw ValidationError("image_dims must be M x 2");
  }
  if (static_cast<Eigen::Index>(b.labels.size()) != m) {
    throw ValidationError("labels must have length M");
  }
  if (b.levels) {
    if (static_cast<Eigen::Index>(b.levels->size()) != m) {
      throw ValidationError("levels must have length M");
    }
    if (b.level_count == 0) throw ValidationError("levels present but level count is 0");
    for (std::size_t i = 0; i < b.levels->size(); ++i) {
      if ((*b.levels)[i] >= b.level_count) fail_row("level out of range", static_cast<Eigen::Index>(i));
    }
  } else if (b.level_count != 0) {
    throw ValidationError("level count set but levels absent");
  }
  if (b.gradients && b.gradients->rows() != m) {
    throw ValidationError("gradients must have M rows");
  }
  if (b.gradients && b.gradients->cols() < 1) {
    throw ValidationError("gradients present with zero columns");
  }

  require_finite(b.features, "feature value");
  require_finite(b.boxes, "box coordinate");
  require_finite(b.image_dims, "image dimension");
  if (b.gradients) require_finite(*b.gradients, "gradient value");

  for (Eigen::Index i = 0; i < m; ++i) {
    if (b.labels[static_cast<std::size_t>(i)] >= b.num_classes) {
      fail_row("label out of range", i);
    }
    const float w = b.image_dims(i, 0), h = b.image_dims(i, 1);
    if (!(w > 0) || !(h > 0)) fail_row("non-positive image size", i);
    const float x1 = b.boxes(i, 0), y1 = b.boxes(i, 1), x2 = b.boxes(i, 2), y2 = b.boxes(i, 3);
    if (!(x1 < x2) || !(y1 < y2)) fail_row("box corners not ordered (x1<x2, y1<y2)", i);
    if (x1 < 0 || y1 < 0 || x2 > w || y2 > h) fail_row("box outside its image", i);
  }
}

std::size_t encoded_bundle_size(std::uint64_t objects, std::uint32_t dim,
                                std::uint32_t gradient_dim, bool has_levels) {
  std::size_t n = kBundleHeaderSize;
  n += objects * dim * 4;   // features
  n += objects * 4 * 4;     // boxes
  n += objects * 4;         // labels
  n += objects * 2 * 4;     // image dims
  if (has_levels) n += objects;
  n += objects * gradient_dim * 4;
  return n + 4;  // crc
}

std::vector<std::uint8_t> encode_bundle(const FeatureBundle& b) {
  validate_bundle(b);
  const auto m = static_cast<std::uint64_t>(b.num_objects());
  const auto d = static_cast<std::uint32_t>(b.feature_dim());
  const auto p = static_cast<std::uint32_t>(b.gradient_dim());
  std::uint16_t flags = 0;
  if (b.levels) flags |= kHasLevels;
  if (b.gradients) flags |= kHasGradients;

  ByteWriter w(encoded_bundle_size(m, d, p, b.levels.has_value()));
  w.put_raw(kMagic, 4);
  w.put(kBundleFormatVersion);
  w.put(flags);
  w.put(m);
  w.put(d);
  w.put(b.num_classes);
  w.put(p);
  w.put(b.level_count);
  w.put(std::uint8_t{0});
  w.put(std::uint8_t{0});
  w.put(std::uint8_t{0});

  put_matrix(w, b.features);
  put_matrix(w, b.boxes);
  for (auto label : b.labels) w.put(label);
  put_matrix(w, b.image_dims);
  if (b.levels) {
    for (auto level : *b.levels) w.put(level);
  }
  if (b.gradients) put_matrix(w, *b.gradients);

  const auto crc = crc32_of(w.bytes());
  w.put(crc);
  return std::move(w.bytes());
}

FeatureBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBundleHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a feature bundle (bad magic)");
  }
  ByteReader r(bytes);
  r.skip(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kBundleFormatVersion) {
    throw FormatError("unsupported bundle version " + std::to_string(version));
  }
  const auto flags = r.get<std::uint16_t>();
  if ((flags & ~(kHasLevels | kHasGradients)) != 0) {
    throw FormatError("unknown bundle flag bits");
  }
  const auto m = r.get<std::uint64_t>();
  const auto d = r.get<std::uint32_t>();
  const auto k = r.get<std::uint32_t>();
  const auto p = r.get<std::uint32_t>();
  const auto level_count = r.get<std::uint8_t>();
  r.skip(3);

  const bool has_levels = (flags & kHasLevels) != 0;
  const bool has_gradients = (flags & kHasGradients) != 0;
  if (has_gradients != (p != 0)) {
    throw FormatError("gradient flag and gradient dimension disagree");
  }
  // Guard the size arithmetic against absurd headers before trusting it.
  if (m == 0 || m > (std::uint64_t{1} << 40) || d == 0) {
    throw FormatError("implausible bundle dimensions");
  }
  const auto expected = encoded_bundle_size(m, d, p, has_levels);
  if (bytes.size() != expected) {
    std::ostringstream msg;
    msg << "bundle size " << bytes.size() << " does not match header (expected " << expected
        << ")";
    throw FormatError(msg.str());
  }
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) {
    stored_crc |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)])
                  << (8 * i);
  }
  const auto actual_crc = crc32_of(bytes.first(bytes.size() - 4));
  if (stored_crc != actual_crc) {
    throw CorruptionError("checksum mismatch: stored " + hex32(stored_crc) + ", computed " +
                          hex32(actual_crc));
  }

  const auto rows = static_cast<Eigen::Index>(m);
  FeatureBundle b;
  b.num_classes = k;
  b.level_count = level_count;
  b.features = get_matrix(r, rows, d);
  b.boxes = get_matrix(r, rows, 4);
  b.labels.resize(m);
  for (auto& label : b.labels) label = r.get<std::uint32_t>();
  b.image_dims = get_matrix(r, rows, 2);
  if (has_levels) {
    std::vector<std::uint8_t> levels(m);
    for (auto& level : levels) level = r.get<std::uint8_t>();
    b.levels = std::move(levels);
  }
  if (has_gradients) b.gradients = get_matrix(r, rows, p);
  validate_bundle(b);
  return b;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& bundle_path) {
  auto p = bundle_path;
  p.replace_extension(".manifest.json");
  return p;
}

void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_bundle(bundle);
  std::uint32_t crc = 0;
  for (int i = 0; i < 4; ++i) {
    crc |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + static_cast<std::size_t>(i)])
           << (8 * i);
  }
  nlohmann::ordered_json manifest = {
      {"format_version", kBundleFormatVersion},
      {"flags", bytes[6] | (bytes[7] << 8)},
      {"model_name", bundle.model_name},
      {"dataset_name", bundle.dataset_name},
      {"extractor_info", bundle.extractor_info},
      {"checksum", hex32(crc)},
  };
  write_file_atomic(path, bytes);
  write_file_atomic(manifest_path_for(path), manifest.dump(2) + "\n");
}

BundleManifest read_manifest(const std::filesystem::path& manifest_path) {
  const auto text = read_file_text(manifest_path);
  BundleManifest out;
  try {
    const auto j = nlohmann::json::parse(text);
    out.format_version = j.value("format_version", std::uint16_t{0});
    out.flags = j.value("flags", std::uint16_t{0});
    out.model_name = j.value("model_name", std::string{});
    out.dataset_name = j.value("dataset_name", std::string{});
    out.extractor_info = j.value("extractor_info", std::string{});
    const auto hex = j.at("checksum").get<std::string>();
    std::size_t used = 0;
    const unsigned long v = std::stoul(hex, &used, 16);
    if (used != hex.size() || v > 0xffffffffUL) throw FormatError("bad checksum field");
    out.checksum = static_cast<std::uint32_t>(v);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest '" + manifest_path.string() + "': " + e.what());
  } catch (const std::logic_error&) {
    throw FormatError("malformed checksum in manifest '" + manifest_path.string() + "'");
  }
  if (out.format_version != kBundleFormatVersion) {
    throw FormatError("manifest format_version must be 1");
  }
  return out;
}

FeatureBundle read_bundle(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  auto bundle = decode_bundle(bytes);
  const auto manifest_path = manifest_path_for(path);
  if (std::filesystem::exists(manifest_path)) {
    const auto manifest = read_manifest(manifest_path);
    const auto actual = crc32_of(std::span(bytes).first(bytes.size() - 4));
    if (manifest.checksum != actual) {
      throw CorruptionError("manifest checksum " + hex32(manifest.checksum) +
                            " does not match bundle " + hex32(actual));
    }
    bundle.model_name = manifest.model_name;
    bundle.dataset_name = manifest.dataset_name;
    bundle.extractor_info = manifest.extractor_info;
  }
  if (bundle.model_name.empty()) bundle.model_name = path.stem().string();
  return bundle;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1U << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

FeatureBundle synth_bundle(std::uint64_t objects, std::uint32_t dim, std::uint32_t classes,
                           double quality, std::uint64_t seed) {
  if (classes < 1 || objects < classes) throw UsageError("synth requires M >= K >= 1");
  if (dim < 4) throw UsageError("synth requires D >= 4");
  if (!(quality >= 0.0 && quality <= 1.0)) throw UsageError("quality must lie in [0, 1]");

  constexpr float kImageSide = 1000.0F;
  constexpr double kNoiseScale = 0.25;
  constexpr double kLatentScale = 0.3;

  Rng rng(seed);
  const auto m = static_cast<Eigen::Index>(objects);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto k = static_cast<Eigen::Index>(classes);

  FeatureBundle b;
  b.model_name = "synth-q" + format_double(quality) + "-s" + std::to_string(seed);
  b.dataset_name = "synthetic";
  b.extractor_info = "synth_bundle";
  b.num_classes = classes;
  b.boxes.resize(m, 4);
  b.image_dims.resize(m, 2);
  b.labels.resize(objects);

  std::vector<CenterBox> targets(objects);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto c = static_cast<std::uint32_t>(i % k);
    b.labels[static_cast<std::size_t>(i)] = c;
    const double w = rng.uniform(0.05, 0.4);
    const double h = rng.uniform(0.05, 0.4);
    const double xc = rng.uniform(0.5 * w, 1.0 - 0.5 * w);
    const double yc = rng.uniform(0.5 * h, 1.0 - 0.5 * h);
    const float x1 = std::clamp(static_cast<float>((xc - 0.5 * w) * kImageSide), 0.0F, kImageSide);
    const float y1 = std::clamp(static_cast<float>((yc - 0.5 * h) * kImageSide), 0.0F, kImageSide);
    const float x2 = std::clamp(static_cast<float>((xc + 0.5 * w) * kImageSide), 0.0F, kImageSide);
    const float y2 = std::clamp(static_cast<float>((yc + 0.5 * h) * kImageSide), 0.0F, kImageSide);
    b.boxes.row(i) << x1, y1, x2, y2;
    b.image_dims.row(i) << kImageSide, kImageSide;
    // Targets come from the stored single-precision corners so that they are
    // exactly what downstream scoring recomputes.
    targets[static_cast<std::size_t>(i)] =
        to_center_normalized({x1, y1, x2, y2}, {kImageSide, kImageSide});
  }

  // The planted signal is the class-slotted target row when the feature space
  // can hold it, otherwise the plain 4-d center box.
  const bool slotted = d >= 4 * k;
  const Eigen::Index signal_dim = slotted ? 4 * k : 4;
  const auto unified = expand_unified_labels(targets, b.labels, classes);

  Eigen::MatrixXd latent(m, d);
  const double noise = (1.0 - quality) * kNoiseScale;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j < signal_dim) {
        const double s = slotted ? unified.targets(i, j)
                                 : unified.targets(i, 4 * b.labels[static_cast<std::size_t>(i)] + j);
        latent(i, j) = s + noise * rng.normal();
      } else {
        latent(i, j) = kLatentScale * rng.normal();
      }
    }
  }

  Eigen::MatrixXd gaussian(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) gaussian(i, j) = rng.normal();
  }
  const Eigen::MatrixXd rotation =
      Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ() *
      Eigen::MatrixXd::Identity(d, d);
  b.features = (latent * rotation).cast<float>();
  return b;
}

}  // namespace detrank
