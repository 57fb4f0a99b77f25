#pragma once

#include <Eigen/Core>

namespace detrank {

/// Eigen-decomposition F^T F = V diag(sigma) V^T. Eigenvalues below
/// kSpectralClamp are stored as exactly 0.
struct SpectralCache {
  Eigen::MatrixXd basis;  // V, D x D orthogonal
  Eigen::VectorXd sigma;  // D, non-negative
};

inline constexpr double kSpectralClamp = 1e-10;

/// Floor applied to ||F m - Y||^2, ||m||^2 and (M*T - gamma) inside the
/// fixed-point updates, keeping alpha and beta finite on exact fits.
inline constexpr double kResidualFloor = 1e-12;

/// What the log-evidence is divided by.
enum class NormDenominator {
  objects_times_targets,  // M * T
  objects,                // M
};

struct EvidenceOptions {
  double tolerance = 1e-6;  // relative change of alpha and beta
  int max_iterations = 200;
  NormDenominator denominator = NormDenominator::objects_times_targets;
};

/// Converged hyper-parameters of the Bayesian linear model with a shared
/// isotropic prior over all T output columns.
struct EvidenceSolution {
  double alpha = 1.0;   // prior precision
  double beta = 1.0;    // noise precision
  double gamma = 0.0;   // effective number of parameters (summed over outputs)
  Eigen::MatrixXd weights;  // posterior mean m, D x T
  double log_evidence = 0.0;  // normalized
  int iterations = 0;
  bool converged = false;
};

[[nodiscard]] SpectralCache spectral_decompose(const Eigen::MatrixXd& features);

/// Maximizes the evidence of Y (M x T) given F (M x D) with the
/// eigenbasis fast path: m = beta * V Lambda^-1 V^T F^T Y.
[[nodiscard]] EvidenceSolution maximize_evidence(const Eigen::MatrixXd& features,
                                                 const Eigen::MatrixXd& targets,
                                                 const EvidenceOptions& opts = {});

/// Same, reusing a decomposition of the same F (e.g. across target columns).
[[nodiscard]] EvidenceSolution maximize_evidence(const Eigen::MatrixXd& features,
                                                 const SpectralCache& cache,
                                                 const Eigen::MatrixXd& targets,
                                                 const EvidenceOptions& opts = {});

/// Reference path: forms A = alpha I + beta F^T F and inverts it explicitly
/// every iteration. Independent of the eigen decomposition; kept as an oracle.
[[nodiscard]] EvidenceSolution naive_maximize_evidence(const Eigen::MatrixXd& features,
                                                       const Eigen::MatrixXd& targets,
                                                       const EvidenceOptions& opts = {});

/// Normalized log-evidence at fixed (alpha, beta) for an arbitrary weight
/// matrix m, e.g. one that was fitted against different targets.
[[nodiscard]] double log_evidence_at(const Eigen::MatrixXd& features, const SpectralCache& cache,
                                     const Eigen::MatrixXd& targets, double alpha, double beta,
                                     const Eigen::MatrixXd& weights,
                                     NormDenominator denominator);

}  // namespace detrank
