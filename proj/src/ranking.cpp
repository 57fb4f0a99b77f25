#include "detrank/ranking.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "detrank/error.hpp"
#include "detrank/parallel.hpp"
#include "detrank/random.hpp"

namespace detrank {

namespace {

int sgn(double x) { return (x > 0) - (x < 0); }

void require_pairs(std::span<const RankRecord> records) {
  if (records.size() < 2) throw ValidationError("rank correlation needs at least 2 records");
  for (const auto& r : records) {
    if (!std::isfinite(r.score) || !std::isfinite(r.gt_map)) {
      throw ValidationError("non-finite score or ground truth for '" + r.model_id + "'");
    }
  }
}

// Position of each record when sorted by (primary desc, secondary desc);
// full ties keep input order.
std::vector<std::size_t> descending_rank(std::span<const double> primary,
                                         std::span<const double> secondary) {
  std::vector<std::size_t> order(primary.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (primary[a] != primary[b]) return primary[a] > primary[b];
    return secondary[a] > secondary[b];
  });
  std::vector<std::size_t> rank(primary.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = pos;
  return rank;
}

double hyperbolic(std::size_t rank) { return 1.0 / (static_cast<double>(rank) + 1.0); }

// Vigna's weighted tau for one fixed ranking.
double weighted_tau_ranked(std::span<const double> x, std::span<const double> y,
                           const std::vector<std::size_t>& rank) {
  double num = 0.0, den_x = 0.0, den_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double w = hyperbolic(rank[i]) + hyperbolic(rank[j]);
      const int sx = sgn(x[i] - x[j]);
      const int sy = sgn(y[i] - y[j]);
      num += w * sx * sy;
      if (sx != 0) den_x += w;
      if (sy != 0) den_y += w;
    }
  }
  const double den = std::sqrt(den_x * den_y);
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double kendall_tau_plain(std::span<const RankRecord> records) {
  require_pairs(records);
  const std::size_t n = records.size();
  long long agreement = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      agreement += sgn(records[i].gt_map - records[j].gt_map) *
                   sgn(records[i].score - records[j].score);
    }
  }
  return 2.0 * static_cast<double>(agreement) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double kendall_tau_weighted(std::span<const RankRecord> records, TauWeighting weighting) {
  require_pairs(records);
  std::vector<double> s(records.size()), g(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    s[i] = records[i].score;
    g[i] = records[i].gt_map;
  }
  if (weighting == TauWeighting::lexicographic_average) {
    return 0.5 * (weighted_tau_ranked(s, g, descending_rank(s, g)) +
                  weighted_tau_ranked(g, s, descending_rank(g, s)));
  }
  const auto rank = descending_rank(g, s);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double w = hyperbolic(rank[i]) + hyperbolic(rank[j]);
      num += w * sgn(g[i] - g[j]) * sgn(s[i] - s[j]);
      den += w;
    }
  }
  return num / den;
}

std::size_t top_scored(std::span<const RankRecord> records) {
  if (records.empty()) throw ValidationError("no records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& b = records[best];
    if (r.score > b.score || (r.score == b.score && r.model_id < b.model_id)) best = i;
  }
  return best;
}

double rel_at_1(std::span<const RankRecord> records) {
  if (records.empty()) throw ValidationError("rel@1 needs at least one record");
  double best_gt = 0.0;
  for (const auto& r : records) {
    if (!(r.gt_map > 0.0) || !std::isfinite(r.gt_map)) {
      throw ValidationError("rel@1 needs positive ground truth ('" + r.model_id + "')");
    }
    best_gt = std::max(best_gt, r.gt_map);
  }
  return records[top_scored(records)].gt_map / best_gt;
}

bool selects_best(std::span<const RankRecord> records) {
  const double chosen = records[top_scored(records)].gt_map;
  return std::all_of(records.begin(), records.end(),
                     [chosen](const RankRecord& r) { return r.gt_map <= chosen; });
}

double recall_at_1(const std::vector<bool>& selected_best) {
  if (selected_best.empty()) throw ValidationError("recall@1 needs at least one subset");
  const auto hits = std::count(selected_best.begin(), selected_best.end(), true);
  return static_cast<double>(hits) / static_cast<double>(selected_best.size());
}

double pearson_weighted(std::span<const RankRecord> records, PearsonWeights weights) {
  if (records.size() < 3) throw ValidationError("pearson needs at least 3 records");
  require_pairs(records);
  const std::size_t n = records.size();
  std::vector<double> s(n), g(n), w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = records[i].score;
    g[i] = records[i].gt_map;
  }
  if (weights == PearsonWeights::rank_hyperbolic) {
    const auto rank = descending_rank(g, s);
    for (std::size_t i = 0; i < n; ++i) w[i] = hyperbolic(rank[i]);
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double ms = 0.0, mg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ms += w[i] * s[i];
    mg += w[i] * g[i];
  }
  ms /= wsum;
  mg /= wsum;
  double cov = 0.0, vs = 0.0, vg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += w[i] * (s[i] - ms) * (g[i] - mg);
    vs += w[i] * (s[i] - ms) * (s[i] - ms);
    vg += w[i] * (g[i] - mg) * (g[i] - mg);
  }
  if (!(vs > 0.0) || !(vg > 0.0)) throw NumericalError("pearson undefined: zero variance");
  return std::clamp(cov / std::sqrt(vs * vg), -1.0, 1.0);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // acc * (n-k+i) / i is exact; divide by the common factor first.
    const std::uint64_t g = std::gcd(acc, i);
    const std::uint64_t factor = (n - k + i) / (i / g);
    if (__builtin_mul_overflow(acc / g, factor, &acc)) {
      throw NumericalError("binomial coefficient overflows 64 bits");
    }
  }
  return acc;
}

namespace {

// C(n, k) for n <= 64; every entry fits in 64 bits.
const std::array<std::array<std::uint64_t, 65>, 65>& pascal_table() {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, 65>, 65> t{};
    for (std::size_t n = 0; n <= 64; ++n) {
      t[n][0] = 1;
      for (std::size_t k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
    }
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::uint32_t> unrank_combination(std::uint64_t rank, std::uint32_t n,
                                              std::uint32_t k) {
  if (rank >= binomial(n, k)) throw ValidationError("combination rank out of range");
  const bool small = n <= 64;
  auto choose = [&](std::uint32_t a, std::uint32_t b) {
    return small ? pascal_table()[a][b] : binomial(a, b);
  };
  std::vector<std::uint32_t> out;
  out.reserve(k);
  std::uint32_t x = 0;
  for (std::uint32_t pos = 0; pos < k; ++pos) {
    for (;; ++x) {
      const auto with_x = choose(n - x - 1, k - pos - 1);
      if (rank < with_x) break;
      rank -= with_x;
    }
    out.push_back(x++);
  }
  return out;
}

std::vector<std::uint64_t> sample_subset_ranks(std::uint32_t n, std::uint32_t k, double fraction,
                                               std::uint64_t seed) {
  if (k < 2 || k > n) throw ValidationError("subset size must satisfy 2 <= k <= N");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("fraction must lie in (0, 1]");
  }
  const std::uint64_t total = binomial(n, k);
  const auto count =
      static_cast<std::uint64_t>(std::ceil(static_cast<long double>(fraction) * total));
  if (count > total) throw ValidationError("requested more subsets than C(N, k)");

  // Floyd's algorithm: `count` distinct ranks in [0, total).
  Rng rng(seed);
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t j = total - count; j < total; ++j) {
    const auto t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> ranks(chosen.begin(), chosen.end());
  std::sort(ranks.begin(), ranks.end());
  return ranks;
}

std::vector<std::vector<std::uint32_t>> sample_subsets(std::uint32_t n, std::uint32_t k,
                                                       double fraction, std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> subsets;
  for (auto r : sample_subset_ranks(n, k, fraction, seed)) {
    subsets.push_back(unrank_combination(r, n, k));
  }
  return subsets;
}

std::vector<RankRecord> join_records(const ScoreTable& scores, std::size_t column,
                                     const ScoreTable& gt, std::size_t gt_column) {
  std::vector<RankRecord> out;
  std::vector<std::string> unmatched;
  for (std::size_t i = 0; i < scores.ids.size(); ++i) {
    const auto j = gt.row(scores.ids[i]);
    if (!j) {
      unmatched.push_back(scores.ids[i]);
      continue;
    }
    const auto& s = scores.values[column][i];
    const auto& g = gt.values[gt_column][*j];
    if (!s || !g) continue;
    out.push_back({scores.ids[i], *s, *g});
  }
  if (!unmatched.empty()) {
    std::string msg = "no ground truth for model(s):";
    for (const auto& id : unmatched) msg += " '" + id + "'";
    throw ValidationError(msg);
  }
  return out;
}

namespace {

// Running mean and squared deviation; chunks merge in a fixed order so the
// result does not depend on the thread count.
struct Moments {
  double n = 0, mean = 0, m2 = 0;
  void add(double x) {
    n += 1;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double total = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / total;
    m2 += o.m2 + delta * delta * n * o.n / total;
    n = total;
  }
  [[nodiscard]] MeanStd result() const { return {mean, n > 0 ? std::sqrt(m2 / n) : 0.0}; }
};

struct SubsetStats {
  Moments plain, weighted, rel;
  double hits = 0;
};

// Everything about one metric column that does not depend on the subset.
// Restricting a global order to a subset gives the subset's own order, so
// per-subset ranks come from one linear scan.
struct MetricTables {
  std::size_t n = 0;
  std::vector<std::uint32_t> by_score;  // (score desc, gt desc, index)
  std::vector<std::uint32_t> by_gt;     // (gt desc, score desc, index)
  std::vector<std::uint32_t> top;       // (score desc, id asc)
  std::vector<std::int8_t> agree;       // sgn(ds) * sgn(dg), n x n
  std::vector<std::uint8_t> score_tied, gt_tied;
  std::vector<double> gt;

  MetricTables(const std::vector<double>& s, const std::vector<double>& g,
               const std::vector<std::string>& ids)
      : n(s.size()), agree(n * n), score_tied(n * n), gt_tied(n * n), gt(g) {
    auto order = [&](const std::vector<double>& p, const std::vector<double>& q) {
      std::vector<std::uint32_t> o(n);
      std::iota(o.begin(), o.end(), 0u);
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return q[a] > q[b];
      });
      return o;
    };
    by_score = order(s, g);
    by_gt = order(g, s);
    top.resize(n);
    std::iota(top.begin(), top.end(), 0u);
    std::sort(top.begin(), top.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (s[a] != s[b]) return s[a] > s[b];
      return ids[a] < ids[b];
    });
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        agree[i * n + j] = static_cast<std::int8_t>(sgn(s[i] - s[j]) * sgn(g[i] - g[j]));
        score_tied[i * n + j] = s[i] == s[j];
        gt_tied[i * n + j] = g[i] == g[j];
      }
    }
  }

  void evaluate(const std::vector<std::uint32_t>& members, std::uint64_t mask,
                std::vector<double>& w_score, std::vector<double>& w_gt, SubsetStats& out) const {
    std::size_t r = 0;
    for (auto i : by_score) {
      if (mask >> i & 1U) w_score[i] = hyperbolic(r++);
    }
    r = 0;
    for (auto i : by_gt) {
      if (mask >> i & 1U) w_gt[i] = hyperbolic(r++);
    }
    long long concordance = 0;
    double num_s = 0, dx_s = 0, dy_s = 0, num_g = 0, dx_g = 0, dy_g = 0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      const auto i = members[a];
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto j = members[b];
        const std::size_t ij = i * n + j;
        const int c = agree[ij];
        const double ws = w_score[i] + w_score[j];
        const double wg = w_gt[i] + w_gt[j];
        concordance += c;
        num_s += ws * c;
        num_g += wg * c;
        if (!score_tied[ij]) {
          dx_s += ws;
          dy_g += wg;
        }
        if (!gt_tied[ij]) {
          dy_s += ws;
          dx_g += wg;
        }
      }
    }
    const double k = static_cast<double>(members.size());
    out.plain.add(2.0 * static_cast<double>(concordance) / (k * (k - 1)));
    const double den_s = std::sqrt(dx_s * dy_s);
    const double den_g = std::sqrt(dx_g * dy_g);
    out.weighted.add(0.5 * ((den_s > 0 ? num_s / den_s : 0.0) + (den_g > 0 ? num_g / den_g : 0.0)));

    double chosen = 0;
    for (auto i : top) {
      if (mask >> i & 1U) {
        chosen = gt[i];
        break;
      }
    }
    double best = 0;
    for (auto i : by_gt) {
      if (mask >> i & 1U) {
        best = gt[i];
        break;
      }
    }
    out.rel.add(chosen / best);
    if (chosen >= best) out.hits += 1;
  }
};

}  // namespace

StabilityReport evaluate_stability(const ScoreTable& scores, const std::vector<std::string>& metrics,
                                   const std::vector<RankRecord>& gt, std::uint32_t subset_size,
                                   double fraction, std::uint64_t seed) {
  const auto n = static_cast<std::uint32_t>(scores.ids.size());
  if (n < subset_size) {
    throw ValidationError("zoo has " + std::to_string(n) + " models, fewer than subset size " +
                          std::to_string(subset_size));
  }
  if (n > 64) throw ValidationError("stability sampling supports at most 64 models");
  std::vector<double> gt_by_row(n);
  std::vector<std::string> missing;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto it = std::find_if(gt.begin(), gt.end(),
                                 [&](const RankRecord& r) { return r.model_id == scores.ids[i]; });
    if (it == gt.end()) {
      missing.push_back(scores.ids[i]);
      continue;
    }
    if (!(it->gt_map > 0.0) || !std::isfinite(it->gt_map)) {
      throw ValidationError("rel@1 needs positive ground truth ('" + it->model_id + "')");
    }
    gt_by_row[i] = it->gt_map;
  }
  if (!missing.empty()) {
    std::string msg = "no ground truth for model(s):";
    for (const auto& id : missing) msg += " '" + id + "'";
    throw ValidationError(msg);
  }

  std::vector<std::string> used;
  std::vector<MetricTables> tables;
  for (const auto& metric : metrics) {
    const auto col = scores.column(metric);
    if (!col) throw ValidationError("scores have no column '" + metric + "'");
    const auto& values = scores.values[*col];
    if (std::any_of(values.begin(), values.end(), [](const auto& v) { return !v.has_value(); })) {
      continue;
    }
    std::vector<double> s(n);
    for (std::uint32_t i = 0; i < n; ++i) s[i] = *values[i];
    used.push_back(metric);
    tables.emplace_back(s, gt_by_row, scores.ids);
  }

  const auto ranks = sample_subset_ranks(n, subset_size, fraction, seed);

  // Fixed chunking keeps the reduction order independent of the thread count.
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (ranks.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<SubsetStats>> partial(chunks, std::vector<SubsetStats>(tables.size()));
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<double> w_score(n), w_gt(n);
    const std::size_t end = std::min(ranks.size(), (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      const auto members = unrank_combination(ranks[r], n, subset_size);
      std::uint64_t mask = 0;
      for (auto i : members) mask |= std::uint64_t{1} << i;
      for (std::size_t m = 0; m < tables.size(); ++m) {
        tables[m].evaluate(members, mask, w_score, w_gt, partial[c][m]);
      }
    }
  });

  StabilityReport report;
  report.subset_size = subset_size;
  report.num_subsets = ranks.size();
  report.seed = seed;
  for (std::size_t m = 0; m < tables.size(); ++m) {
    SubsetStats total;
    for (const auto& chunk : partial) {
      total.plain.merge(chunk[m].plain);
      total.weighted.merge(chunk[m].weighted);
      total.rel.merge(chunk[m].rel);
      total.hits += chunk[m].hits;
    }
    MetricStability ms;
    ms.metric = used[m];
    ms.tau_plain = total.plain.result();
    ms.tau_weighted = total.weighted.result();
    ms.rel1 = total.rel.result();
    ms.recall1 = total.hits / static_cast<double>(ranks.size());
    report.metrics.push_back(std::move(ms));
  }
  return report;
}

std::string stability_csv(const StabilityReport& report) {
  std::string out = "metric,mean_tauw,std_tauw,mean_rel1,std_rel1\n";
  for (const auto& m : report.metrics) {
    out += join_csv_row({m.metric, format_double(m.tau_plain.mean), format_double(m.tau_plain.std),
                         format_double(m.rel1.mean), format_double(m.rel1.std)});
    out += '\n';
  }
  return out;
}

std::string stability_summary(const StabilityReport& report) {
  std::ostringstream s;
  s << "subsets: " << report.num_subsets << " of size " << report.subset_size
    << " (seed " << report.seed << ")\n";
  s << "metric      tau(plain)       tau(weighted)    Rel@1            Recall@1\n";
  for (const auto& m : report.metrics) {
    auto cell = [](const MeanStd& v) {
      return format_fixed(v.mean, 2) + " +- " + format_fixed(v.std, 2);
    };
    std::string name = m.metric;
    name.resize(std::max<std::size_t>(name.size(), 11), ' ');
    s << name << ' ' << cell(m.tau_plain) << "     " << cell(m.tau_weighted) << "     "
      << cell(m.rel1) << "     " << format_fixed(m.recall1, 2) << '\n';
  }
  return s.str();
}

std::size_t ReproductionReport::within_tolerance(std::string_view metric, bool weighted,
                                                 double tolerance) const {
  std::size_t count = 0;
  for (const auto& c : cells) {
    if (c.metric != metric || !c.printed) continue;
    const auto& value = weighted ? c.tau_weighted : c.tau_plain;
    if (value && std::abs(*value - *c.printed) <= tolerance + 1e-12) ++count;
  }
  return count;
}

std::size_t ReproductionReport::applicable_datasets(std::string_view metric) const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [&](const auto& c) {
    return c.metric == metric && c.printed.has_value();
  }));
}

ReproductionReport reproduce_tables(const std::filesystem::path& dir) {
  std::vector<std::string> missing;
  for (const char* ds : kFixtureDatasets) {
    if (!std::filesystem::exists(dir / (std::string(ds) + ".csv"))) missing.emplace_back(ds);
  }
  if (!std::filesystem::exists(dir / "printed_tau.csv")) missing.emplace_back("printed_tau");
  if (!missing.empty()) {
    std::string msg = "missing fixture(s) in '" + dir.string() + "':";
    for (const auto& m : missing) msg += " " + m + ".csv";
    throw IoError(msg);
  }

  const auto printed = read_score_table(dir / "printed_tau.csv");
  ReproductionReport report;
  for (const char* ds : kFixtureDatasets) {
    const auto path = dir / (std::string(ds) + ".csv");
    const auto table = read_score_table(path);
    const auto map_col = table.column("map");
    if (!map_col) throw FormatError(path.string() + ": missing column 'map'");
    const auto printed_row = printed.row(ds);
    if (!printed_row) throw FormatError("printed_tau.csv has no row for '" + std::string(ds) + "'");

    for (const char* metric : kFixtureMetrics) {
      const auto col = table.column(metric);
      if (!col) throw FormatError(path.string() + ": missing column '" + std::string(metric) + "'");
      ReproductionCell cell{ds, metric, std::nullopt, std::nullopt, std::nullopt};
      if (auto pc = printed.column(metric)) cell.printed = printed.values[*pc][*printed_row];

      const auto& values = table.values[*col];
      const bool applicable =
          std::none_of(values.begin(), values.end(), [](const auto& v) { return !v.has_value(); });
      if (applicable) {
        std::vector<RankRecord> records;
        for (std::size_t i = 0; i < table.ids.size(); ++i) {
          const auto& g = table.values[*map_col][i];
          if (!g) throw FormatError(path.string() + ": missing map for '" + table.ids[i] + "'");
          records.push_back({table.ids[i], *values[i], *g});
        }
        cell.tau_plain = kendall_tau_plain(records);
        cell.tau_weighted = kendall_tau_weighted(records);
      }
      report.cells.push_back(std::move(cell));
    }
  }

  struct Spec {
    const char* dataset;
    const char* better;
    const char* worse;
  };
  constexpr Spec kOrdinal[] = {{"pascal_voc", "detlogme", "logme"},
                               {"cityscapes", "detlogme", "logme"},
                               {"soda", "iologme", "logme"},
                               {"deeplesion", "ulogme", "iologme"}};
  auto find = [&](std::string_view ds, std::string_view metric) -> const ReproductionCell& {
    return *std::find_if(report.cells.begin(), report.cells.end(), [&](const auto& c) {
      return c.dataset == ds && c.metric == metric;
    });
  };
  for (const auto& spec : kOrdinal) {
    const auto& b = find(spec.dataset, spec.better);
    const auto& w = find(spec.dataset, spec.worse);
    report.ordinal_checks.push_back({spec.dataset, spec.better, spec.worse, b.printed.value_or(NAN),
                                     w.printed.value_or(NAN), b.tau_plain.value_or(NAN),
                                     w.tau_plain.value_or(NAN)});
  }
  return report;
}

std::string reproduction_csv(const ReproductionReport& report) {
  std::string out = "dataset,metric,printed,tau_plain,tau_weighted,dev_plain,dev_weighted\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_fixed(*v, 4) : "N/A"; };
  for (const auto& c : report.cells) {
    std::optional<double> dp, dw;
    if (c.printed && c.tau_plain) dp = *c.tau_plain - *c.printed;
    if (c.printed && c.tau_weighted) dw = *c.tau_weighted - *c.printed;
    out += join_csv_row({c.dataset, c.metric, opt(c.printed), opt(c.tau_plain),
                         opt(c.tau_weighted), opt(dp), opt(dw)});
    out += '\n';
  }
  return out;
}

std::string reproduction_markdown(const ReproductionReport& report) {
  std::ostringstream s;
  auto opt = [](const std::optional<double>& v) { return v ? format_fixed(*v, 2) : "N/A"; };
  s << "# Ranking correlation of published per-model scores\n\n";
  s << "Each cell: printed / recomputed plain tau / recomputed weighted tau.\n\n";
  s << "| dataset |";
  for (const char* m : kFixtureMetrics) s << ' ' << m << " |";
  s << "\n|---|";
  for (std::size_t i = 0; i < std::size(kFixtureMetrics); ++i) s << "---|";
  s << '\n';
  for (const char* ds : kFixtureDatasets) {
    s << "| " << ds << " |";
    for (const char* m : kFixtureMetrics) {
      for (const auto& c : report.cells) {
        if (c.dataset == ds && c.metric == m) {
          if (!c.tau_plain) {
            s << " N/A |";
          } else {
            s << ' ' << opt(c.printed) << " / " << opt(c.tau_plain) << " / "
              << opt(c.tau_weighted) << " |";
          }
        }
      }
    }
    s << '\n';
  }

  s << "\n## Ordinal checks (plain tau)\n\n";
  for (const auto& o : report.ordinal_checks) {
    s << "- " << o.dataset << ": " << o.better << " " << format_fixed(o.plain_better, 2) << " > "
      << o.worse << " " << format_fixed(o.plain_worse, 2) << " (printed "
      << format_fixed(o.printed_better, 2) << " vs " << format_fixed(o.printed_worse, 2)
      << "): " << (o.passed() ? "PASS" : "FAIL") << '\n';
  }

  s << "\n## Datasets within +-0.10 of the printed value\n\n";
  s << "| metric | plain | weighted | applicable |\n|---|---|---|---|\n";
  for (const char* m : kFixtureMetrics) {
    s << "| " << m << " | " << report.within_tolerance(m, false, 0.10) << " | "
      << report.within_tolerance(m, true, 0.10) << " | " << report.applicable_datasets(m)
      << " |\n";
  }

  s << "\n## Deviations beyond +-0.10\n\n";
  bool any = false;
  for (const auto& c : report.cells) {
    if (!c.printed || !c.tau_plain) continue;
    const double dp = *c.tau_plain - *c.printed;
    const double dw = *c.tau_weighted - *c.printed;
    if (std::abs(dp) > 0.10 || std::abs(dw) > 0.10) {
      any = true;
      s << "- " << c.dataset << " / " << c.metric << ": printed " << opt(c.printed)
        << ", plain " << opt(c.tau_plain) << " (" << format_fixed(dp, 2) << "), weighted "
        << opt(c.tau_weighted) << " (" << format_fixed(dw, 2) << ")\n";
    }
  }
  if (!any) s << "none\n";
  return s.str();
}

}  // namespace detrank
