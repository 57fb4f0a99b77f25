#include "detrank/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detrank/error.hpp"

namespace detrank {

namespace {

void require_image(const ImageSize& image) {
  if (!(image.width > 0) || !(image.height > 0) || !std::isfinite(image.width) ||
      !std::isfinite(image.height)) {
    throw ValidationError("image dimensions must be positive and finite");
  }
}

}  // namespace

CenterBox to_center_normalized(const CornerBox& box, const ImageSize& image) {
  require_image(image);
  if (!(box.x2 > box.x1) || !(box.y2 > box.y1)) {
    throw ValidationError("degenerate box: zero or negative width/height");
  }
  return {(box.x1 + box.x2) / (2.0 * image.width), (box.y1 + box.y2) / (2.0 * image.height),
          (box.x2 - box.x1) / image.width, (box.y2 - box.y1) / image.height};
}

BorderBox to_border_normalized(const CornerBox& box, const ImageSize& image) {
  require_image(image);
  return {box.x1 / image.width, box.y1 / image.height, box.x2 / image.width,
          box.y2 / image.height};
}

CornerBox center_to_corner(const CenterBox& box, const ImageSize& image) {
  const double cx = box.xc * image.width;
  const double cy = box.yc * image.height;
  const double hw = 0.5 * box.wc * image.width;
  const double hh = 0.5 * box.hc * image.height;
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

void validate(const PyramidConfig& cfg) {
  if (cfg.l_min > cfg.l0 || cfg.l0 > cfg.l_max) {
    throw UsageError("pyramid config requires l_min <= l0 <= l_max");
  }
  if (!(cfg.small_thresh > 0) || !(cfg.large_thresh >= cfg.small_thresh)) {
    throw UsageError("pyramid thresholds require 0 < small <= large");
  }
}

int assign_pyramid_level(double box_w, double box_h, const PyramidConfig& cfg) {
  if (!(box_w > 0) || !(box_h > 0) || !std::isfinite(box_w) || !std::isfinite(box_h)) {
    throw ValidationError("pyramid level assignment needs positive finite box sides");
  }
  const double longest = std::max(box_w, box_h);
  if (longest < cfg.small_thresh) return cfg.l_min;
  if (longest > cfg.large_thresh) return cfg.l_max;
  const double raw = std::floor(cfg.l0 + std::log2(std::sqrt(box_w * box_h) / 224.0));
  return std::clamp(static_cast<int>(raw), cfg.l_min, cfg.l_max);
}

UnifiedLabelMatrix expand_unified_labels(std::span<const CenterBox> boxes,
                                         std::span<const std::uint32_t> labels,
                                         std::uint32_t num_classes) {
  if (boxes.size() != labels.size()) {
    throw ValidationError("box and label counts differ");
  }
  if (num_classes == 0) throw ValidationError("class count must be at least 1");
  const auto rows = static_cast<Eigen::Index>(boxes.size());
  UnifiedLabelMatrix out;
  out.num_classes = num_classes;
  out.source_labels.assign(labels.begin(), labels.end());
  out.targets = Eigen::MatrixXd::Zero(rows, 4 * static_cast<Eigen::Index>(num_classes));
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    if (c >= num_classes) {
      std::ostringstream msg;
      msg << "label out of range at row " << i << " (" << c << " >= " << num_classes << ")";
      throw ValidationError(msg.str());
    }
    const auto& b = boxes[static_cast<std::size_t>(i)];
    const Eigen::Index col = 4 * static_cast<Eigen::Index>(c);
    out.targets(i, col + 0) = b.xc;
    out.targets(i, col + 1) = b.yc;
    out.targets(i, col + 2) = b.wc;
    out.targets(i, col + 3) = b.hc;
  }
  return out;
}

double iou_pair(const CenterBox& a, const CenterBox& b) {
  const double aw = std::max(a.wc, 0.0);
  const double ah = std::max(a.hc, 0.0);
  const double bw = std::max(b.wc, 0.0);
  const double bh = std::max(b.hc, 0.0);
  if (aw <= 0.0 || ah <= 0.0) return 0.0;

  const double ax1 = a.xc - 0.5 * aw, ax2 = a.xc + 0.5 * aw;
  const double ay1 = a.yc - 0.5 * ah, ay2 = a.yc + 0.5 * ah;
  const double bx1 = b.xc - 0.5 * bw, bx2 = b.xc + 0.5 * bw;
  const double by1 = b.yc - 0.5 * bh, by2 = b.yc + 0.5 * bh;

  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double uni = aw * ah + bw * bh - inter;
  if (!(uni > 0.0) || !std::isfinite(uni)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace detrank
