#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace detrank {

/// Corner box in pixels: (x1, y1) top-left, (x2, y2) bottom-right.
struct CornerBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

struct ImageSize {
  double width = 0, height = 0;
};

/// Center-form box with every coordinate divided by the image dimensions.
struct CenterBox {
  double xc = 0, yc = 0, wc = 0, hc = 0;
};

/// Corner box with x divided by image width and y by image height.
struct BorderBox {
  double x1n = 0, y1n = 0, x2n = 0, y2n = 0;
};

/// Feature-pyramid level matching. Objects whose longer side is below
/// `small_thresh` go to `l_min`, above `large_thresh` to `l_max`; the rest use
/// floor(l0 + log2(sqrt(w*h) / 224)) clamped to [l_min, l_max].
struct PyramidConfig {
  int l0 = 3;
  int l_min = 2;
  int l_max = 5;
  double small_thresh = 64.0;
  double large_thresh = 512.0;
};

/// Class-slotted targets: row i holds the center box of object i in columns
/// [4*c_i, 4*c_i + 4) and zeros elsewhere.
struct UnifiedLabelMatrix {
  Eigen::MatrixXd targets;  // M x 4K
  std::uint32_t num_classes = 0;
  std::vector<std::uint32_t> source_labels;
};

[[nodiscard]] CenterBox to_center_normalized(const CornerBox& box, const ImageSize& image);
[[nodiscard]] BorderBox to_border_normalized(const CornerBox& box, const ImageSize& image);

/// Back to pixel corners; inverse of to_center_normalized.
[[nodiscard]] CornerBox center_to_corner(const CenterBox& box, const ImageSize& image);

void validate(const PyramidConfig& cfg);

[[nodiscard]] int assign_pyramid_level(double box_w, double box_h, const PyramidConfig& cfg);

[[nodiscard]] UnifiedLabelMatrix expand_unified_labels(std::span<const CenterBox> boxes,
                                                       std::span<const std::uint32_t> labels,
                                                       std::uint32_t num_classes);

/// IoU of a prediction `a` against a ground-truth box `b`. Predicted widths and
/// heights are clamped at zero, so degenerate predictions score 0.
[[nodiscard]] double iou_pair(const CenterBox& a, const CenterBox& b);

}  // namespace detrank
