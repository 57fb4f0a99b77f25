#include "detrank/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "detrank/error.hpp"
#include "detrank/transfer_scores.hpp"

namespace detrank {

namespace {

constexpr double kIllConditioned = 1e-10;
constexpr double kJitter = 1e-8;

}  // namespace

ScatterPair compute_scatter(const Eigen::MatrixXd& f, std::span<const std::uint32_t> labels,
                            std::uint32_t num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != f.rows()) {
    throw ValidationError("label count does not match feature rows");
  }
  const Eigen::Index d = f.cols();
  const auto k = static_cast<Eigen::Index>(num_classes);
  ScatterPair s;
  s.class_counts.assign(num_classes, 0);
  s.class_means = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    if (c >= num_classes) throw ValidationError("label out of range at row " + std::to_string(i));
    s.class_means.row(c) += f.row(i);
    ++s.class_counts[c];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto n = s.class_counts[static_cast<std::size_t>(c)];
    if (n == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no objects");
    }
    s.class_means.row(c) /= static_cast<double>(n);
  }
  s.global_mean = f.colwise().mean().transpose();

  s.between = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd diff = s.class_means.row(c).transpose() - s.global_mean;
    s.between.noalias() +=
        static_cast<double>(s.class_counts[static_cast<std::size_t>(c)]) * diff * diff.transpose();
  }
  Eigen::MatrixXd centered = f;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    centered.row(i) -= s.class_means.row(labels[static_cast<std::size_t>(i)]);
  }
  s.within = centered.transpose() * centered;
  const auto m = static_cast<double>(f.rows());
  s.between /= m;
  s.within /= m;
  return s;
}

FdaProjection fit_reg_fda(const ScatterPair& scatter, const SfdaOptions& opts) {
  if (!(opts.a > 0.0)) throw UsageError("SFDA constant a must be positive");
  const Eigen::Index d = scatter.within.rows();
  const auto k = static_cast<Eigen::Index>(scatter.class_counts.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> within_eig(scatter.within,
                                                            Eigen::EigenvaluesOnly);
  const double largest = within_eig.eigenvalues().maxCoeff();
  FdaProjection out;
  out.a = opts.a;
  out.lambda = std::exp(-opts.a * largest);

  Eigen::MatrixXd regularized =
      (1.0 - out.lambda) * scatter.within + out.lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> reg_eig(regularized);
  auto conditioning = [](const Eigen::VectorXd& ev) {
    return ev.minCoeff() / std::max(1.0, ev.maxCoeff());
  };
  if (conditioning(reg_eig.eigenvalues()) < kIllConditioned) {
    regularized.diagonal().array() += kJitter;
    reg_eig.compute(regularized);
    out.jitter_applied = true;
  }
  if (reg_eig.info() != Eigen::Success || !(reg_eig.eigenvalues().minCoeff() > 0.0)) {
    std::ostringstream msg;
    msg << "regularized within-class scatter is singular (lambda=" << out.lambda
        << ", smallest eigenvalue=" << reg_eig.eigenvalues().minCoeff()
        << ", largest S_w eigenvalue=" << largest << ")";
    throw NumericalError(msg.str());
  }

  // Symmetric whitening W = S^-1/2 turns the generalized problem into an
  // ordinary symmetric one.
  const Eigen::MatrixXd whiten = reg_eig.eigenvectors() *
                                 reg_eig.eigenvalues().array().rsqrt().matrix().asDiagonal() *
                                 reg_eig.eigenvectors().transpose();
  const Eigen::MatrixXd reduced = whiten * scatter.between * whiten;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> between_eig(reduced);
  if (between_eig.info() != Eigen::Success) {
    throw NumericalError("eigen decomposition of the whitened between-class scatter failed");
  }
  const Eigen::Index components = std::min(k - 1, d);
  // Eigen sorts ascending; the leading directions are the last columns.
  out.projection = whiten * between_eig.eigenvectors().rightCols(components);
  return out;
}

SfdaResult sfda_score(const Eigen::MatrixXd& f, std::span<const std::uint32_t> labels,
                      std::uint32_t num_classes, const SfdaOptions& opts) {
  if (num_classes < 2) {
    throw NotApplicableError("sfda is not applicable to single-class tasks");
  }
  if (!f.allFinite()) throw ValidationError("non-finite feature value");
  const auto scatter = compute_scatter(f, labels, num_classes);
  SfdaResult result;
  result.fda = fit_reg_fda(scatter, opts);
  const auto& u = result.fda.projection;

  const Eigen::MatrixXd projected = f * u;                            // M x D'
  const Eigen::MatrixXd projected_means = scatter.class_means * u;    // K x D'
  const auto m = static_cast<double>(f.rows());
  Eigen::RowVectorXd offset(projected_means.rows());
  for (Eigen::Index c = 0; c < projected_means.rows(); ++c) {
    offset(c) = -0.5 * projected_means.row(c).squaredNorm() +
                std::log(static_cast<double>(scatter.class_counts[static_cast<std::size_t>(c)]) / m);
  }
  const Eigen::MatrixXd logits =
      (projected * projected_means.transpose()).rowwise() + offset;  // M x K

  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double norm = (logits.row(i).array() - top).exp().sum();
    const auto c = labels[static_cast<std::size_t>(i)];
    total += std::exp(logits(i, c) - top) / norm;
  }
  result.score = total / m;
  return result;
}

SfdaResult sfda_score(const FeatureBundle& bundle, const SfdaOptions& opts) {
  return sfda_score(feature_matrix(bundle), bundle.labels, bundle.num_classes, opts);
}

double knas_score(const Eigen::MatrixXd& gradients, std::uint32_t layer_count) {
  if (gradients.rows() == 0 || gradients.cols() == 0) {
    throw ValidationError("knas needs a non-empty gradient matrix");
  }
  if (layer_count == 0) throw UsageError("layer count must be at least 1");
  if (!gradients.allFinite()) throw ValidationError("non-finite gradient value");
  const double m = static_cast<double>(gradients.rows());
  const Eigen::VectorXd sum = gradients.colwise().sum().transpose();
  return sum.squaredNorm() / (m * m) / static_cast<double>(layer_count);
}

}  // namespace detrank
