#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "detrank/bundle.hpp"
#include "detrank/evidence.hpp"
#include "detrank/geometry.hpp"

namespace detrank {

enum class BoxNormalization { center, border };

/// How the unified (class-slotted) targets are fitted.
///  - joint: one evidence solve on (F, Y^u) with m in D x 4K (default).
///  - algorithm_literal: solve on (F, B^cen), tile m into every class block,
///    and evaluate the evidence of Y^u at the converged alpha and beta.
enum class UnifiedFit { joint, algorithm_literal };

struct ScoreConfig {
  double mu = 1.0;  // weight of the IoU term in Det-LogME
  BoxNormalization normalization = BoxNormalization::center;  // LogME baseline only
  UnifiedFit unified_fit = UnifiedFit::joint;
  PyramidConfig pyramid;
  EvidenceOptions evidence;

  void validate() const;
};

struct UnifiedScore {
  double score = 0.0;
  EvidenceSolution solution;
};

/// Model-zoo scores. Normalized vectors are min-max scaled over the zoo.
struct ZooScores {
  std::vector<std::string> model_ids;
  std::vector<double> u_logme_raw;
  std::vector<double> iou_logme_raw;
  std::vector<double> u_norm;
  std::vector<double> iou_norm;
  std::vector<double> det_logme;
};

[[nodiscard]] Eigen::MatrixXd feature_matrix(const FeatureBundle& bundle);
[[nodiscard]] std::vector<CenterBox> center_boxes(const FeatureBundle& bundle);

/// Baseline LogME: independent single-target solves per box coordinate and per
/// one-hot class column (the class branch is skipped for K = 1); returns the
/// mean of the two sub-task means.
[[nodiscard]] double score_logme(const FeatureBundle& bundle, const ScoreConfig& cfg);

/// U-LogME: center-normalized boxes expanded into the unified label matrix and
/// fitted with one shared alpha and beta.
[[nodiscard]] UnifiedScore score_u_logme(const FeatureBundle& bundle, const ScoreConfig& cfg);

/// IoU-LogME: mean IoU between each object's predicted center box f_i * m'_i
/// (m'_i = the class block of m) and its ground truth. Lies in [0, 1].
[[nodiscard]] double score_iou_logme(const FeatureBundle& bundle,
                                     const EvidenceSolution& solution, const ScoreConfig& cfg);

/// Min-max scaling to [0, 1]; an all-equal vector maps to 0.5 everywhere.
[[nodiscard]] std::vector<double> min_max_normalize(std::span<const double> values);

/// Zoo-level reduction: normalizes both raw vectors and forms
/// det = u_norm + mu * iou_norm.
[[nodiscard]] ZooScores combine_zoo_scores(std::vector<std::string> model_ids,
                                           std::vector<double> u_raw,
                                           std::vector<double> iou_raw, double mu);

/// Scores every bundle (concurrently), then combines. Requires >= 2 models
/// sharing one class count.
[[nodiscard]] ZooScores score_det_logme(std::span<const FeatureBundle> zoo,
                                        const ScoreConfig& cfg);

}  // namespace detrank
