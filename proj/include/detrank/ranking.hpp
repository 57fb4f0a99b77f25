#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detrank/table.hpp"

namespace detrank {

/// One model's transferability score and its fine-tuned ground truth.
struct RankRecord {
  std::string model_id;
  double score = 0.0;
  double gt_map = 0.0;
};

/// Mean pairwise sign agreement: 2/(N(N-1)) * sum_{n<m} sgn(g_n-g_m) sgn(s_n-s_m).
/// Ties contribute 0.
[[nodiscard]] double kendall_tau_plain(std::span<const RankRecord> records);

enum class TauWeighting {
  /// Hyperbolic additive weights 1/(r+1) on the decreasing lexicographic rank
  /// by (score, gt), averaged with the rank by (gt, score); tie-corrected
  /// denominator. Reproduces the published tables.
  lexicographic_average,
  /// Hyperbolic additive weights on the ground-truth descending rank,
  /// normalized by the total pair weight.
  ground_truth_rank,
};

[[nodiscard]] double kendall_tau_weighted(
    std::span<const RankRecord> records,
    TauWeighting weighting = TauWeighting::lexicographic_average);

/// Index of the top-scored record; ties go to the smallest model id.
[[nodiscard]] std::size_t top_scored(std::span<const RankRecord> records);

/// gt of the top-scored model divided by the best gt.
[[nodiscard]] double rel_at_1(std::span<const RankRecord> records);

/// True when the top-scored model attains the best gt.
[[nodiscard]] bool selects_best(std::span<const RankRecord> records);

[[nodiscard]] double recall_at_1(const std::vector<bool>& selected_best);

enum class PearsonWeights {
  rank_hyperbolic,  // 1/(r+1), r = gt-descending rank
  uniform,
};

[[nodiscard]] double pearson_weighted(std::span<const RankRecord> records,
                                      PearsonWeights weights = PearsonWeights::rank_hyperbolic);

/// Exact C(n, k); throws if it does not fit in 64 bits.
[[nodiscard]] std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// The rank-th k-subset of {0..n-1} in lexicographic order.
[[nodiscard]] std::vector<std::uint32_t> unrank_combination(std::uint64_t rank, std::uint32_t n,
                                                            std::uint32_t k);

/// Lexicographic ranks of ceil(fraction * C(n, k)) distinct k-subsets drawn
/// uniformly without replacement, sorted ascending. Deterministic per seed.
[[nodiscard]] std::vector<std::uint64_t> sample_subset_ranks(std::uint32_t n, std::uint32_t k,
                                                             double fraction, std::uint64_t seed);

/// The subsets behind sample_subset_ranks, unranked.
[[nodiscard]] std::vector<std::vector<std::uint32_t>> sample_subsets(std::uint32_t n,
                                                                     std::uint32_t k,
                                                                     double fraction,
                                                                     std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct MetricStability {
  std::string metric;
  MeanStd tau_plain;
  MeanStd tau_weighted;
  MeanStd rel1;
  double recall1 = 0.0;
};

struct StabilityReport {
  std::uint32_t subset_size = 0;
  std::uint64_t num_subsets = 0;
  std::uint64_t seed = 0;
  std::vector<MetricStability> metrics;
};

/// Evaluates each metric column of `scores` against `gt` on sampled subsets.
/// Models are joined by id; rows with a missing metric value make that
/// metric unavailable and it is skipped.
[[nodiscard]] StabilityReport evaluate_stability(const ScoreTable& scores,
                                                 const std::vector<std::string>& metrics,
                                                 const std::vector<RankRecord>& gt,
                                                 std::uint32_t subset_size, double fraction,
                                                 std::uint64_t seed);

[[nodiscard]] std::string stability_csv(const StabilityReport& report);
[[nodiscard]] std::string stability_summary(const StabilityReport& report);

/// Joins a metric column with ground truth by model id. Throws naming any id
/// missing from the ground truth.
[[nodiscard]] std::vector<RankRecord> join_records(const ScoreTable& scores, std::size_t column,
                                                   const ScoreTable& gt, std::size_t gt_column);

// --- reproduction of the published per-model tables -----------------------

inline constexpr const char* kFixtureDatasets[] = {"pascal_voc", "cityscapes", "soda",
                                                    "crowdhuman", "visdrone",  "deeplesion"};
inline constexpr const char* kFixtureMetrics[] = {"knas",    "sfda",    "logme",
                                                   "ulogme", "iologme", "detlogme"};

struct ReproductionCell {
  std::string dataset;
  std::string metric;
  std::optional<double> printed;      // nullopt when printed as N/A
  std::optional<double> tau_plain;    // nullopt when the column is N/A
  std::optional<double> tau_weighted;
};

struct OrdinalCheck {
  std::string dataset;
  std::string better;
  std::string worse;
  double printed_better = 0.0;
  double printed_worse = 0.0;
  double plain_better = 0.0;
  double plain_worse = 0.0;
  [[nodiscard]] bool passed() const { return plain_better > plain_worse; }
};

struct ReproductionReport {
  std::vector<ReproductionCell> cells;
  std::vector<OrdinalCheck> ordinal_checks;

  /// Datasets (with an applicable printed value) whose recomputed tau of the
  /// given variant lies within `tolerance` of the printed value.
  [[nodiscard]] std::size_t within_tolerance(std::string_view metric, bool weighted,
                                             double tolerance) const;
  [[nodiscard]] std::size_t applicable_datasets(std::string_view metric) const;
};

/// Reads `<dir>/<dataset>.csv` for the six datasets plus `<dir>/printed_tau.csv`.
[[nodiscard]] ReproductionReport reproduce_tables(const std::filesystem::path& fixtures_dir);

[[nodiscard]] std::string reproduction_csv(const ReproductionReport& report);
[[nodiscard]] std::string reproduction_markdown(const ReproductionReport& report);

}  // namespace detrank
