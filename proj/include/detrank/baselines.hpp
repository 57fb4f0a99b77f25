#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "detrank/bundle.hpp"

namespace detrank {

/// Between- and within-class scatter of object features, averaged over objects.
struct ScatterPair {
  Eigen::MatrixXd between;      // S_b, D x D
  Eigen::MatrixXd within;       // S_w, D x D
  Eigen::MatrixXd class_means;  // K x D
  Eigen::VectorXd global_mean;  // D
  std::vector<std::size_t> class_counts;
};

struct SfdaOptions {
  double a = 1.0;  // lambda = exp(-a * largest eigenvalue of S_w)
};

/// Regularized-FDA projection used by the SFDA score.
struct FdaProjection {
  Eigen::MatrixXd projection;  // U, D x D'
  double lambda = 0.0;
  double a = 1.0;
  bool jitter_applied = false;  // extra diagonal loading for ill-conditioning
};

struct SfdaResult {
  double score = 0.0;
  FdaProjection fda;
};

[[nodiscard]] ScatterPair compute_scatter(const Eigen::MatrixXd& features,
                                          std::span<const std::uint32_t> labels,
                                          std::uint32_t num_classes);

/// Solves max |U^T S_b U| / |U^T [(1-lambda) S_w + lambda I] U| for the top
/// min(K-1, D) directions by whitening the regularized within-scatter.
[[nodiscard]] FdaProjection fit_reg_fda(const ScatterPair& scatter, const SfdaOptions& opts);

/// Mean posterior of each object's own class under the projected linear
/// discriminants. Throws NotApplicableError for single-class tasks.
[[nodiscard]] SfdaResult sfda_score(const Eigen::MatrixXd& features,
                                    std::span<const std::uint32_t> labels,
                                    std::uint32_t num_classes, const SfdaOptions& opts = {});
[[nodiscard]] SfdaResult sfda_score(const FeatureBundle& bundle, const SfdaOptions& opts = {});

/// Gradient-kernel score: mean of all pairwise inner products of the rows,
/// computed as ||sum_i g_i||^2 / M^2 and divided by `layer_count` when the
/// rows concatenate samples from several head layers.
[[nodiscard]] double knas_score(const Eigen::MatrixXd& gradients, std::uint32_t layer_count = 1);

}  // namespace detrank
