#include "detrank/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "detrank/error.hpp"

namespace detrank {

namespace {

void check_inputs(const Eigen::MatrixXd& f, const Eigen::MatrixXd& y) {
  if (f.rows() != y.rows()) throw ValidationError("features and targets differ in row count");
  if (f.rows() < 2) throw ValidationError("evidence maximization needs at least 2 objects");
  if (f.cols() < 1 || y.cols() < 1) throw ValidationError("empty feature or target matrix");
  if (!f.allFinite() || !y.allFinite()) throw ValidationError("non-finite feature or target");
}

struct Step {
  double alpha;
  double beta;
};

// One application of the alpha/beta updates given the current fit statistics.
Step update(double gamma, double residual, double weight_norm, double observations) {
  const double alpha = std::max(gamma, kResidualFloor) / std::max(weight_norm, kResidualFloor);
  const double beta =
      std::max(observations - gamma, kResidualFloor) / std::max(residual, kResidualFloor);
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha <= 0 || beta <= 0) {
    std::ostringstream msg;
    msg << "evidence update left the positive reals (alpha=" << alpha << ", beta=" << beta << ")";
    throw NumericalError(msg.str());
  }
  return {alpha, beta};
}

bool settled(const Step& prev, const Step& next, double tol) {
  return std::abs(next.alpha - prev.alpha) / prev.alpha < tol &&
         std::abs(next.beta - prev.beta) / prev.beta < tol;
}

double normalized_evidence(double alpha, double beta, double residual, double weight_norm,
                           double log_det_a, Eigen::Index m, Eigen::Index d, Eigen::Index t,
                           NormDenominator denominator) {
  const double n = static_cast<double>(m) * static_cast<double>(t);
  const double dt = static_cast<double>(d) * static_cast<double>(t);
  const double evidence = 0.5 * n * std::log(beta) + 0.5 * dt * std::log(alpha) -
                          0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * beta * residual -
                          0.5 * alpha * weight_norm - 0.5 * static_cast<double>(t) * log_det_a;
  const double scale =
      denominator == NormDenominator::objects ? static_cast<double>(m) : n;
  return evidence / scale;
}

}  // namespace

SpectralCache spectral_decompose(const Eigen::MatrixXd& features) {
  if (!features.allFinite()) throw ValidationError("non-finite feature value");
  const Eigen::MatrixXd gram = features.transpose() * features;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigen decomposition of F^T F failed");
  }
  SpectralCache cache{solver.eigenvectors(), solver.eigenvalues()};
  for (auto& s : cache.sigma) {
    if (s < kSpectralClamp) s = 0.0;
  }
  return cache;
}

EvidenceSolution maximize_evidence(const Eigen::MatrixXd& features,
                                   const Eigen::MatrixXd& targets, const EvidenceOptions& opts) {
  check_inputs(features, targets);
  return maximize_evidence(features, spectral_decompose(features), targets, opts);
}

EvidenceSolution maximize_evidence(const Eigen::MatrixXd& f, const SpectralCache& cache,
                                   const Eigen::MatrixXd& y, const EvidenceOptions& opts) {
  check_inputs(f, y);
  if (cache.basis.rows() != f.cols() || cache.sigma.size() != f.cols()) {
    throw ValidationError("spectral cache does not match feature dimension");
  }
  const Eigen::Index m = f.rows(), d = f.cols(), t = y.cols();
  const double observations = static_cast<double>(m * t);
  const Eigen::ArrayXd sigma = cache.sigma.array();
  // Projections of F^T Y onto the eigenbasis; constant across iterations.
  const Eigen::MatrixXd projected = cache.basis.transpose() * (f.transpose() * y);

  struct Fit {
    Eigen::MatrixXd weights;
    double gamma, residual, weight_norm;
  };
  auto fit = [&](double alpha, double beta) {
    const Eigen::ArrayXd denom = alpha + beta * sigma;
    const Eigen::VectorXd shrink = (beta / denom).matrix();
    Fit out;
    out.weights = cache.basis * (shrink.asDiagonal() * projected);
    out.gamma = static_cast<double>(t) * (beta * sigma / denom).sum();
    out.residual = (f * out.weights - y).squaredNorm();
    out.weight_norm = out.weights.squaredNorm();
    return out;
  };

  EvidenceSolution sol;
  Step current{1.0, 1.0};
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const auto stats = fit(current.alpha, current.beta);
    const auto next = update(stats.gamma, stats.residual, stats.weight_norm, observations);
    sol.iterations = it;
    const bool done = settled(current, next, opts.tolerance);
    current = next;
    if (done) {
      sol.converged = true;
      break;
    }
  }

  auto final_fit = fit(current.alpha, current.beta);
  const double log_det_a = (current.alpha + current.beta * sigma).log().sum();
  sol.alpha = current.alpha;
  sol.beta = current.beta;
  sol.gamma = final_fit.gamma;
  sol.log_evidence = normalized_evidence(current.alpha, current.beta, final_fit.residual,
                                         final_fit.weight_norm, log_det_a, m, d, t,
                                         opts.denominator);
  sol.weights = std::move(final_fit.weights);
  if (!std::isfinite(sol.log_evidence)) throw NumericalError("log-evidence is not finite");
  return sol;
}

EvidenceSolution naive_maximize_evidence(const Eigen::MatrixXd& f, const Eigen::MatrixXd& y,
                                         const EvidenceOptions& opts) {
  check_inputs(f, y);
  const Eigen::Index m = f.rows(), d = f.cols(), t = y.cols();
  const double observations = static_cast<double>(m * t);
  const Eigen::MatrixXd gram = f.transpose() * f;
  const Eigen::MatrixXd fty = f.transpose() * y;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);

  struct Fit {
    Eigen::MatrixXd weights;
    double gamma, residual, weight_norm, log_det_a;
  };
  auto fit = [&](double alpha, double beta) {
    const Eigen::MatrixXd a = alpha * identity + beta * gram;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw NumericalError("A is not positive definite");
    const Eigen::MatrixXd a_inv = llt.solve(identity);
    Fit out;
    out.weights = beta * a_inv * fty;
    // sum_i beta*sigma_i/(alpha+beta*sigma_i) = D - alpha * tr(A^-1)
    out.gamma = static_cast<double>(t) * (static_cast<double>(d) - alpha * a_inv.trace());
    out.residual = (f * out.weights - y).squaredNorm();
    out.weight_norm = out.weights.squaredNorm();
    out.log_det_a = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return out;
  };

  EvidenceSolution sol;
  Step current{1.0, 1.0};
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const auto stats = fit(current.alpha, current.beta);
    const auto next = update(stats.gamma, stats.residual, stats.weight_norm, observations);
    sol.iterations = it;
    const bool done = settled(current, next, opts.tolerance);
    current = next;
    if (done) {
      sol.converged = true;
      break;
    }
  }
  auto final_fit = fit(current.alpha, current.beta);
  sol.alpha = current.alpha;
  sol.beta = current.beta;
  sol.gamma = final_fit.gamma;
  sol.log_evidence =
      normalized_evidence(current.alpha, current.beta, final_fit.residual, final_fit.weight_norm,
                          final_fit.log_det_a, m, d, t, opts.denominator);
  sol.weights = std::move(final_fit.weights);
  if (!std::isfinite(sol.log_evidence)) throw NumericalError("log-evidence is not finite");
  return sol;
}

double log_evidence_at(const Eigen::MatrixXd& f, const SpectralCache& cache,
                       const Eigen::MatrixXd& y, double alpha, double beta,
                       const Eigen::MatrixXd& weights, NormDenominator denominator) {
  check_inputs(f, y);
  if (weights.rows() != f.cols() || weights.cols() != y.cols()) {
    throw ValidationError("weight matrix shape does not match features and targets");
  }
  const double log_det_a = (alpha + beta * cache.sigma.array()).log().sum();
  return normalized_evidence(alpha, beta, (f * weights - y).squaredNorm(), weights.squaredNorm(),
                             log_det_a, f.rows(), f.cols(), y.cols(), denominator);
}

}  // namespace detrank
