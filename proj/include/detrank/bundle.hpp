#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace detrank {

/// Row-major single-precision matrix; matches the on-disk layout.
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-model package of object-level features, ground-truth boxes, class
/// labels and source image sizes. Boxes are corner pixel coordinates
/// (x1, y1, x2, y2); image_dims rows are (width, height).
struct FeatureBundle {
  std::string model_name;
  std::string dataset_name;
  std::string extractor_info;
  std::uint32_t num_classes = 0;

  FloatMatrix features;    // M x D
  FloatMatrix boxes;       // M x 4
  std::vector<std::uint32_t> labels;  // M
  FloatMatrix image_dims;  // M x 2

  std::optional<std::vector<std::uint8_t>> levels;  // M, pyramid level minus l_min
  std::uint8_t level_count = 0;                     // 0 iff levels absent
  std::optional<FloatMatrix> gradients;             // M x P

  [[nodiscard]] Eigen::Index num_objects() const { return features.rows(); }
  [[nodiscard]] Eigen::Index feature_dim() const { return features.cols(); }
  [[nodiscard]] Eigen::Index gradient_dim() const { return gradients ? gradients->cols() : 0; }

  /// Bitwise equality of every array and every scalar field.
  friend bool operator==(const FeatureBundle& a, const FeatureBundle& b);
};

inline constexpr std::uint16_t kBundleFormatVersion = 1;
inline constexpr std::size_t kBundleHeaderSize = 32;

enum BundleFlags : std::uint16_t {
  kHasLevels = 1U << 0,
  kHasGradients = 1U << 1,
};

/// Sidecar metadata written next to each bundle file.
struct BundleManifest {
  std::uint16_t format_version = kBundleFormatVersion;
  std::uint16_t flags = 0;
  std::uint32_t checksum = 0;
  std::string model_name;
  std::string dataset_name;
  std::string extractor_info;
};

/// Throws ValidationError naming the first offending row.
void validate_bundle(const FeatureBundle& bundle);

/// Serialized byte image of the bundle (header + payload + trailing CRC).
[[nodiscard]] std::vector<std::uint8_t> encode_bundle(const FeatureBundle& bundle);

/// Inverse of encode_bundle; metadata strings are left empty.
[[nodiscard]] FeatureBundle decode_bundle(std::span<const std::uint8_t> bytes);

/// Exact encoded size for the given dimensions.
[[nodiscard]] std::size_t encoded_bundle_size(std::uint64_t objects, std::uint32_t dim,
                                              std::uint32_t gradient_dim, bool has_levels);

/// `models/x.dtfb` -> `models/x.manifest.json`.
[[nodiscard]] std::filesystem::path manifest_path_for(const std::filesystem::path& bundle_path);

/// Writes the binary file and its manifest atomically (temp file + rename).
void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path);

/// Reads, checksums and validates. The manifest is optional; when absent the
/// model name falls back to the file stem.
[[nodiscard]] FeatureBundle read_bundle(const std::filesystem::path& path);

[[nodiscard]] BundleManifest read_manifest(const std::filesystem::path& manifest_path);

[[nodiscard]] std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

/// Deterministic synthetic bundle whose center-normalized box targets are an
/// exact linear function of a hidden signal; `quality` in [0, 1] scales down
/// the noise added to the copy of that signal embedded in the features.
[[nodiscard]] FeatureBundle synth_bundle(std::uint64_t objects, std::uint32_t dim,
                                         std::uint32_t classes, double quality,
                                         std::uint64_t seed);

}  // namespace detrank
