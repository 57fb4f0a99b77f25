#include "detrank/transfer_scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detrank/error.hpp"
#include "detrank/parallel.hpp"

namespace detrank {

void ScoreConfig::validate() const {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw UsageError("mu must be a finite value >= 0");
  if (!(evidence.tolerance > 0.0)) throw UsageError("evidence tolerance must be positive");
  if (evidence.max_iterations < 1) throw UsageError("max iterations must be at least 1");
  detrank::validate(pyramid);
}

Eigen::MatrixXd feature_matrix(const FeatureBundle& bundle) {
  return bundle.features.cast<double>();
}

std::vector<CenterBox> center_boxes(const FeatureBundle& bundle) {
  const auto m = bundle.num_objects();
  std::vector<CenterBox> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    out.push_back(to_center_normalized(
        {bundle.boxes(i, 0), bundle.boxes(i, 1), bundle.boxes(i, 2), bundle.boxes(i, 3)},
        {bundle.image_dims(i, 0), bundle.image_dims(i, 1)}));
  }
  return out;
}

namespace {

Eigen::MatrixXd normalized_box_targets(const FeatureBundle& bundle, BoxNormalization mode) {
  const auto m = bundle.num_objects();
  Eigen::MatrixXd out(m, 4);
  for (Eigen::Index i = 0; i < m; ++i) {
    const CornerBox box{bundle.boxes(i, 0), bundle.boxes(i, 1), bundle.boxes(i, 2),
                        bundle.boxes(i, 3)};
    const ImageSize image{bundle.image_dims(i, 0), bundle.image_dims(i, 1)};
    if (mode == BoxNormalization::center) {
      const auto c = to_center_normalized(box, image);
      out.row(i) << c.xc, c.yc, c.wc, c.hc;
    } else {
      const auto b = to_border_normalized(box, image);
      out.row(i) << b.x1n, b.y1n, b.x2n, b.y2n;
    }
  }
  return out;
}

Eigen::MatrixXd center_box_matrix(std::span<const CenterBox> boxes) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(boxes.size()), 4);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r) << boxes[i].xc, boxes[i].yc, boxes[i].wc, boxes[i].hc;
  }
  return out;
}

// Mean of independent single-output evidence solves over the columns of Y.
double mean_single_target_evidence(const Eigen::MatrixXd& f, const SpectralCache& cache,
                                   const Eigen::MatrixXd& y, const EvidenceOptions& opts) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    total += maximize_evidence(f, cache, y.col(c), opts).log_evidence;
  }
  return total / static_cast<double>(y.cols());
}

}  // namespace

double score_logme(const FeatureBundle& bundle, const ScoreConfig& cfg) {
  cfg.validate();
  const auto f = feature_matrix(bundle);
  const auto cache = spectral_decompose(f);
  const double regression =
      mean_single_target_evidence(f, cache, normalized_box_targets(bundle, cfg.normalization),
                                  cfg.evidence);
  if (bundle.num_classes < 2) return regression;

  Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(f.rows(), bundle.num_classes);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    one_hot(i, bundle.labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  const double classification = mean_single_target_evidence(f, cache, one_hot, cfg.evidence);
  return 0.5 * (regression + classification);
}

UnifiedScore score_u_logme(const FeatureBundle& bundle, const ScoreConfig& cfg) {
  cfg.validate();
  const auto f = feature_matrix(bundle);
  const auto boxes = center_boxes(bundle);
  const auto unified = expand_unified_labels(boxes, bundle.labels, bundle.num_classes);
  const auto cache = spectral_decompose(f);

  if (cfg.unified_fit == UnifiedFit::joint) {
    auto sol = maximize_evidence(f, cache, unified.targets, cfg.evidence);
    const double score = sol.log_evidence;
    return {score, std::move(sol)};
  }

  // Fit the plain 4-column targets, then score the class-slotted targets with
  // the fitted weights copied into every class block.
  auto sol = maximize_evidence(f, cache, center_box_matrix(boxes), cfg.evidence);
  const auto k = static_cast<Eigen::Index>(bundle.num_classes);
  Eigen::MatrixXd tiled(f.cols(), 4 * k);
  for (Eigen::Index c = 0; c < k; ++c) tiled.middleCols(4 * c, 4) = sol.weights;
  sol.log_evidence = log_evidence_at(f, cache, unified.targets, sol.alpha, sol.beta, tiled,
                                     cfg.evidence.denominator);
  const double score = sol.log_evidence;
  return {score, std::move(sol)};
}

double score_iou_logme(const FeatureBundle& bundle, const EvidenceSolution& solution,
                       const ScoreConfig& cfg) {
  cfg.validate();
  const auto d = bundle.feature_dim();
  const auto k = static_cast<Eigen::Index>(bundle.num_classes);
  const auto& w = solution.weights;
  const bool slotted = w.cols() == 4 * k;
  if (w.rows() != d || (!slotted && w.cols() != 4)) {
    throw ValidationError("evidence solution does not match the bundle (expected D x 4K weights)");
  }
  const auto f = feature_matrix(bundle);
  const auto truth = center_boxes(bundle);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(bundle.labels[static_cast<std::size_t>(i)]);
    const Eigen::RowVector4d pred = f.row(i) * (slotted ? w.middleCols(4 * c, 4) : w);
    total += iou_pair({pred(0), pred(1), pred(2), pred(3)}, truth[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(f.rows());
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  std::vector<double> out(values.size());
  if (!(span > 0.0)) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  std::transform(values.begin(), values.end(), out.begin(),
                 [lo = *lo, span](double v) { return (v - lo) / span; });
  return out;
}

ZooScores combine_zoo_scores(std::vector<std::string> model_ids, std::vector<double> u_raw,
                             std::vector<double> iou_raw, double mu) {
  if (model_ids.size() < 2) {
    throw ValidationError("det-logme needs a zoo of at least 2 models");
  }
  if (u_raw.size() != model_ids.size() || iou_raw.size() != model_ids.size()) {
    throw ValidationError("zoo score vectors differ in length");
  }
  if (!(mu >= 0.0)) throw UsageError("mu must be >= 0");
  ZooScores z;
  z.model_ids = std::move(model_ids);
  z.u_logme_raw = std::move(u_raw);
  z.iou_logme_raw = std::move(iou_raw);
  z.u_norm = min_max_normalize(z.u_logme_raw);
  z.iou_norm = min_max_normalize(z.iou_logme_raw);
  z.det_logme.resize(z.u_norm.size());
  for (std::size_t i = 0; i < z.det_logme.size(); ++i) {
    z.det_logme[i] = z.u_norm[i] + mu * z.iou_norm[i];
  }
  return z;
}

ZooScores score_det_logme(std::span<const FeatureBundle> zoo, const ScoreConfig& cfg) {
  cfg.validate();
  if (zoo.size() < 2) throw ValidationError("det-logme needs a zoo of at least 2 models");
  for (const auto& b : zoo) {
    if (b.num_classes != zoo.front().num_classes) {
      throw ValidationError("zoo bundles disagree on class count (" + b.model_name + " has " +
                            std::to_string(b.num_classes) + ", " + zoo.front().model_name +
                            " has " + std::to_string(zoo.front().num_classes) + ")");
    }
  }
  std::vector<std::string> ids(zoo.size());
  std::vector<double> u(zoo.size()), iou(zoo.size());
  parallel_for(zoo.size(), [&](std::size_t i) {
    const auto unified = score_u_logme(zoo[i], cfg);
    ids[i] = zoo[i].model_name;
    u[i] = unified.score;
    iou[i] = score_iou_logme(zoo[i], unified.solution, cfg);
  });
  return combine_zoo_scores(std::move(ids), std::move(u), std::move(iou), cfg.mu);
}

}  // namespace detrank
