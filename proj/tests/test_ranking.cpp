#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "detrank/error.hpp"
#include "detrank/random.hpp"
#include "detrank/ranking.hpp"

using namespace detrank;
namespace fs = std::filesystem;

namespace {

std::vector<RankRecord> records(const std::vector<double>& s, const std::vector<double>& g) {
  std::vector<RankRecord> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({"m" + std::to_string(i), s[i], g[i]});
  return out;
}

// Counts concordant minus discordant pairs over all ordered pairs.
double brute_kendall(const std::vector<RankRecord>& r) {
  long long c = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (i == j) continue;
      const double ds = r[i].score - r[j].score;
      const double dg = r[i].gt_map - r[j].gt_map;
      if (ds * dg > 0) ++c;
      if (ds * dg < 0) --c;
    }
  }
  const double n = static_cast<double>(r.size());
  return static_cast<double>(c) / (n * (n - 1));
}

ScoreTable fixture(const std::string& name) {
  return read_score_table(fs::path(DETRANK_FIXTURES) / (name + ".csv"));
}

std::vector<RankRecord> fixture_records(const std::string& dataset, const std::string& metric) {
  const auto t = fixture(dataset);
  return join_records(t, *t.column(metric), t, *t.column("map"));
}

}  // namespace

TEST_CASE("plain kendall") {
  CHECK(kendall_tau_plain(records({1, 2, 3, 4}, {10, 20, 30, 40})) == 1.0);
  CHECK(kendall_tau_plain(records({4, 3, 2, 1}, {10, 20, 30, 40})) == -1.0);
  CHECK(kendall_tau_plain(records({1, 1, 1}, {1, 2, 3})) == 0.0);
  // one discordant pair out of six
  CHECK(kendall_tau_plain(records({1, 2, 4, 3}, {1, 2, 3, 4})) == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS((void)kendall_tau_plain(records({1}, {1})), ValidationError);
}

TEST_CASE("plain kendall matches a brute-force count") {
  Rng rng(1);
  for (int n = 0; n < 1000; ++n) {
    const auto size = 2 + static_cast<std::size_t>(rng.below(32));
    std::vector<double> s(size), g(size);
    for (std::size_t i = 0; i < size; ++i) {
      // coarse values so ties occur
      s[i] = static_cast<double>(rng.below(12));
      g[i] = static_cast<double>(rng.below(40));
    }
    const auto r = records(s, g);
    REQUIRE(kendall_tau_plain(r) == brute_kendall(r));
  }
}

TEST_CASE("weighted kendall") {
  CHECK(kendall_tau_weighted(records({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5})) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kendall_tau_weighted(records({5, 4, 3, 2, 1}, {1, 2, 3, 4, 5})) ==
        doctest::Approx(-1.0).epsilon(1e-15));
  for (auto w : {TauWeighting::lexicographic_average, TauWeighting::ground_truth_rank}) {
    CHECK(kendall_tau_weighted(records({3, 1, 2}, {30, 10, 20}), w) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("weighted kendall reference values") {
  // values from scipy.stats.weightedtau with default arguments
  CHECK(kendall_tau_weighted(records({0.9, 0.1, 0.5, 0.3, 0.7, 0.2}, {80, 60, 78, 62, 85, 61})) ==
        doctest::Approx(0.7551020408163265).epsilon(1e-12));
  CHECK(kendall_tau_weighted(records({1, 2, 2, 3, 5, 4, 4}, {3, 1, 2, 2, 5, 6, 4})) ==
        doctest::Approx(0.5754456639787053).epsilon(1e-12));
}

TEST_CASE("weighted kendall emphasizes the top of the ranking") {
  const std::vector<double> g{5, 4, 3, 2, 1};
  for (auto w : {TauWeighting::lexicographic_average, TauWeighting::ground_truth_rank}) {
    const double top_swapped = kendall_tau_weighted(records({4, 5, 3, 2, 1}, g), w);
    const double bottom_swapped = kendall_tau_weighted(records({5, 4, 3, 1, 2}, g), w);
    CHECK(1.0 - bottom_swapped < 1.0 - top_swapped);
  }
}

TEST_CASE("weighted kendall on published per-model scores") {
  CHECK(kendall_tau_weighted(fixture_records("pascal_voc", "logme")) ==
        doctest::Approx(0.2259922931112228).epsilon(1e-12));
  CHECK(kendall_tau_weighted(fixture_records("pascal_voc", "detlogme")) ==
        doctest::Approx(0.7920820882767852).epsilon(1e-12));
  CHECK(kendall_tau_weighted(fixture_records("pascal_voc", "sfda")) ==
        doctest::Approx(0.6448525595999425).epsilon(1e-12));
  CHECK(kendall_tau_weighted(fixture_records("deeplesion", "ulogme")) ==
        doctest::Approx(0.6082561364240703).epsilon(1e-12));
  CHECK(kendall_tau_weighted(fixture_records("visdrone", "iologme")) ==
        doctest::Approx(0.7253995781567093).epsilon(1e-12));
}

TEST_CASE("rel@1 and recall@1") {
  CHECK(rel_at_1(records({3, 2, 1}, {90, 80, 70})) == 1.0);
  CHECK(rel_at_1(records({1, 3, 2}, {85, 80, 70})) == doctest::Approx(80.0 / 85.0));
  CHECK(rel_at_1(records({1}, {42})) == 1.0);
  CHECK(selects_best(records({3, 2, 1}, {90, 80, 70})));
  CHECK_FALSE(selects_best(records({1, 3, 2}, {85, 80, 70})));
  CHECK_THROWS_AS((void)rel_at_1(records({1, 2}, {0, 3})), ValidationError);

  CHECK(recall_at_1({true, true}) == 1.0);
  CHECK(recall_at_1({false, false, false}) == 0.0);
  CHECK(recall_at_1({true, true, false, true}) == 0.75);
}

TEST_CASE("ties at the top go to the smallest id") {
  std::vector<RankRecord> r{{"b", 1.0, 70}, {"a", 1.0, 90}, {"c", 0.5, 80}};
  CHECK(r[top_scored(r)].model_id == "a");
  CHECK(rel_at_1(r) == 1.0);
}

TEST_CASE("rel@1 is invariant to increasing score transforms") {
  Rng rng(2);
  std::vector<double> s(10), g(10);
  for (int i = 0; i < 10; ++i) {
    s[i] = rng.normal();
    g[i] = rng.uniform(30, 90);
  }
  std::vector<double> t;
  for (double x : s) t.push_back(std::exp(3 * x) + 1);
  CHECK(rel_at_1(records(s, g)) == rel_at_1(records(t, g)));
}

TEST_CASE("weighted pearson") {
  const std::vector<double> g{10, 20, 35, 40, 70};
  std::vector<double> lin, neg;
  for (double x : g) {
    lin.push_back(2 * x + 3);
    neg.push_back(-x);
  }
  CHECK(pearson_weighted(records(lin, g)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson_weighted(records(neg, g)) == doctest::Approx(-1.0).epsilon(1e-14));
  // textbook Pearson, numpy.corrcoef
  CHECK(std::abs(pearson_weighted(records({2, 1, 4, 3, 7}, {1, 2, 3, 4, 5}), PearsonWeights::uniform) -
                 0.8241633836921342) <= 1e-12);
  CHECK_THROWS_AS((void)pearson_weighted(records({1, 1, 1}, {1, 2, 3})), NumericalError);
  CHECK_THROWS_AS((void)pearson_weighted(records({1, 2}, {1, 2})), ValidationError);
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial(33, 22) == 193536720u);
  CHECK(binomial(33, 11) == binomial(33, 22));
  CHECK(binomial(5, 0) == 1u);
  CHECK(binomial(5, 6) == 0u);
  CHECK(binomial(62, 31) == 465428353255261088u);
  CHECK_THROWS_AS((void)binomial(200, 100), NumericalError);
}

TEST_CASE("unranking enumerates combinations in lexicographic order") {
  std::vector<std::vector<std::uint32_t>> all;
  for (std::uint64_t r = 0; r < binomial(6, 3); ++r) all.push_back(unrank_combination(r, 6, 3));
  CHECK(all.front() == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(all.back() == std::vector<std::uint32_t>{3, 4, 5});
  CHECK(std::is_sorted(all.begin(), all.end()));
  CHECK(std::set(all.begin(), all.end()).size() == 20);
  CHECK_THROWS_AS((void)unrank_combination(20, 6, 3), ValidationError);
}

TEST_CASE("subset sampling") {
  SUBCASE("33 choose 22 at one percent") {
    const auto ranks = sample_subset_ranks(33, 22, 0.01, 0);
    CHECK(ranks.size() == 1935368u);
    CHECK(std::adjacent_find(ranks.begin(), ranks.end()) == ranks.end());
    CHECK(std::is_sorted(ranks.begin(), ranks.end()));
    CHECK(ranks.back() < binomial(33, 22));
  }
  SUBCASE("unranked subsets are distinct sorted k-sets") {
    const auto subsets = sample_subsets(33, 22, 1e-4, 0);
    CHECK(subsets.size() == 19354u);
    CHECK(std::set(subsets.begin(), subsets.end()).size() == subsets.size());
    for (const auto& s : subsets) {
      REQUIRE(s.size() == 22u);
      REQUIRE(std::adjacent_find(s.begin(), s.end(), std::greater_equal<>()) == s.end());
      REQUIRE(s.back() < 33u);
    }
  }
  SUBCASE("exhaustive") {
    const auto pairs = sample_subsets(4, 2, 1.0, 3);
    CHECK(pairs.size() == 6u);
    CHECK(std::set(pairs.begin(), pairs.end()).size() == 6u);
  }
  SUBCASE("deterministic per seed") {
    CHECK(sample_subsets(20, 10, 0.05, 9) == sample_subsets(20, 10, 0.05, 9));
    CHECK(sample_subsets(20, 10, 0.05, 9) != sample_subsets(20, 10, 0.05, 10));
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS((void)sample_subsets(5, 6, 0.5, 0), ValidationError);
    CHECK_THROWS_AS((void)sample_subsets(5, 3, 0.0, 0), ValidationError);
    CHECK_THROWS_AS((void)sample_subsets(5, 3, 1.5, 0), ValidationError);
  }
}

TEST_CASE("stability evaluation") {
  const auto table = fixture("pascal_voc");
  std::vector<RankRecord> gt;
  const auto map = *table.column("map");
  for (std::size_t i = 0; i < table.ids.size(); ++i) gt.push_back({table.ids[i], 0, *table.values[map][i]});

  SUBCASE("exhaustive small case") {
    ScoreTable small;
    small.ids = {"a", "b", "c", "d", "e"};
    small.columns = {"s"};
    small.values = {{1.0, 2.0, 3.0, 4.0, 5.0}};
    std::vector<RankRecord> g{{"a", 0, 10}, {"b", 0, 20}, {"c", 0, 30}, {"d", 0, 40}, {"e", 0, 50}};
    const auto r = evaluate_stability(small, {"s"}, g, 4, 1.0, 0);
    CHECK(r.num_subsets == 5u);
    REQUIRE(r.metrics.size() == 1u);
    CHECK(r.metrics[0].tau_plain.mean == 1.0);
    CHECK(r.metrics[0].tau_plain.std == 0.0);
    CHECK(r.metrics[0].recall1 == 1.0);
  }
  SUBCASE("summary statistics agree with the per-subset metrics") {
    Rng rng(12);
    ScoreTable t;
    t.columns = {"s"};
    t.values.resize(1);
    std::vector<RankRecord> g;
    for (int i = 0; i < 12; ++i) {
      t.ids.push_back("model" + std::to_string(i));
      t.values[0].push_back(static_cast<double>(rng.below(6)));  // ties
      g.push_back({t.ids.back(), 0, static_cast<double>(30 + rng.below(8))});
    }
    const auto r = evaluate_stability(t, {"s"}, g, 6, 1.0, 2);
    double plain = 0, weighted = 0, rel = 0, hits = 0;
    const auto subsets = sample_subsets(12, 6, 1.0, 2);
    for (const auto& sub : subsets) {
      std::vector<RankRecord> recs;
      for (auto i : sub) recs.push_back({t.ids[i], *t.values[0][i], g[i].gt_map});
      plain += kendall_tau_plain(recs);
      weighted += kendall_tau_weighted(recs);
      rel += rel_at_1(recs);
      hits += selects_best(recs);
    }
    const double n = static_cast<double>(subsets.size());
    CHECK(r.num_subsets == 924u);
    CHECK(r.metrics[0].tau_plain.mean == doctest::Approx(plain / n).epsilon(1e-12));
    CHECK(r.metrics[0].tau_weighted.mean == doctest::Approx(weighted / n).epsilon(1e-12));
    CHECK(r.metrics[0].rel1.mean == doctest::Approx(rel / n).epsilon(1e-12));
    CHECK(r.metrics[0].recall1 == doctest::Approx(hits / n).epsilon(1e-12));
  }
  SUBCASE("fixture run is reproducible") {
    const auto a = evaluate_stability(table, {"detlogme", "logme"}, gt, 22, 0.001, 4);
    const auto b = evaluate_stability(table, {"detlogme", "logme"}, gt, 22, 0.001, 4);
    CHECK(a.num_subsets == 193537u);
    CHECK(stability_csv(a) == stability_csv(b));
    CHECK(stability_csv(a).starts_with("metric,mean_tauw,std_tauw,mean_rel1,std_rel1\n"));
    CHECK(a.metrics[0].tau_plain.mean > a.metrics[1].tau_plain.mean);
    CHECK(a.metrics[0].rel1.mean <= 1.0);
  }
  SUBCASE("columns with missing values are skipped") {
    const auto crowd = fixture("crowdhuman");
    std::vector<RankRecord> g;
    const auto m = *crowd.column("map");
    for (std::size_t i = 0; i < crowd.ids.size(); ++i) g.push_back({crowd.ids[i], 0, *crowd.values[m][i]});
    const auto r = evaluate_stability(crowd, {"sfda", "logme"}, g, 22, 0.0005, 1);
    REQUIRE(r.metrics.size() == 1u);
    CHECK(r.metrics[0].metric == "logme");
  }
  SUBCASE("too few models") {
    CHECK_THROWS_AS((void)evaluate_stability(table, {"logme"}, gt, 40, 0.1, 0), ValidationError);
  }
}

TEST_CASE("join names unmatched models") {
  ScoreTable s;
  s.ids = {"a", "zeta"};
  s.columns = {"x"};
  s.values = {{1.0, 2.0}};
  ScoreTable g;
  g.ids = {"a"};
  g.columns = {"map"};
  g.values = {{50.0}};
  CHECK_THROWS_WITH_AS((void)join_records(s, 0, g, 0), doctest::Contains("'zeta'"), ValidationError);
}

TEST_CASE("table reproduction") {
  const auto report = reproduce_tables(DETRANK_FIXTURES);
  CHECK(report.cells.size() == 36u);
  for (const auto& o : report.ordinal_checks) {
    INFO(o.dataset << ": " << o.better << " vs " << o.worse);
    CHECK(o.passed());
  }
  const auto sfda_crowd = std::find_if(report.cells.begin(), report.cells.end(), [](const auto& c) {
    return c.dataset == "crowdhuman" && c.metric == "sfda";
  });
  REQUIRE(sfda_crowd != report.cells.end());
  CHECK_FALSE(sfda_crowd->printed.has_value());
  CHECK_FALSE(sfda_crowd->tau_plain.has_value());
  CHECK(report.applicable_datasets("sfda") == 5u);

  const auto md = reproduction_markdown(report);
  CHECK(md.find("0.79 / 0.69 / 0.79") != std::string::npos);
  const auto csv = reproduction_csv(report);
  CHECK(csv.find("pascal_voc,detlogme,0.7900,0.6913,0.7921") != std::string::npos);
}

TEST_CASE("reproduction lists missing fixtures") {
  const auto dir = fs::temp_directory_path() / "detrank-test-missing-fixtures";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(DETRANK_FIXTURES)) {
    if (e.path().stem() != "deeplesion") fs::copy_file(e.path(), dir / e.path().filename());
  }
  CHECK_THROWS_WITH_AS((void)reproduce_tables(dir), doctest::Contains("deeplesion.csv"), IoError);
}
