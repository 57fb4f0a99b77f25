#include "detrank/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "detrank/baselines.hpp"
#include "detrank/bundle.hpp"
#include "detrank/error.hpp"
#include "detrank/geometry.hpp"
#include "detrank/io.hpp"
#include "detrank/random.hpp"
#include "detrank/ranking.hpp"
#include "detrank/table.hpp"
#include "detrank/transfer_scores.hpp"

namespace detrank {

namespace {

namespace fs = std::filesystem;

struct Cell {
  std::string text;
  std::optional<double> number;
};

Cell text_cell(std::string s) { return {std::move(s), std::nullopt}; }
Cell num_cell(double v) { return {format_double(v), v}; }
Cell opt_cell(const std::optional<double>& v) { return v ? num_cell(*v) : text_cell("N/A"); }

struct OutputTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::string render(const OutputTable& t, OutputFormat format) {
  std::string out;
  switch (format) {
    case OutputFormat::csv:
      out = join_csv_row(t.header) + "\n";
      for (const auto& row : t.rows) {
        std::vector<std::string> fields;
        for (const auto& c : row) fields.push_back(c.text);
        out += join_csv_row(fields) + "\n";
      }
      break;
    case OutputFormat::markdown: {
      out = "|";
      for (const auto& h : t.header) out += " " + h + " |";
      out += "\n|";
      for (std::size_t i = 0; i < t.header.size(); ++i) out += "---|";
      out += "\n";
      for (const auto& row : t.rows) {
        out += "|";
        for (const auto& c : row) {
          out += " " + (c.number ? format_fixed(*c.number, 4) : c.text) + " |";
        }
        out += "\n";
      }
      break;
    }
    case OutputFormat::json_lines:
      for (const auto& row : t.rows) {
        nlohmann::ordered_json j;
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (row[i].number) {
            j[t.header[i]] = *row[i].number;
          } else if (row[i].text == "N/A") {
            j[t.header[i]] = nullptr;
          } else {
            j[t.header[i]] = row[i].text;
          }
        }
        out += j.dump() + "\n";
      }
      break;
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, std::string_view(text));
  }
}

const std::map<std::string, OutputFormat> kFormats{
    {"csv", OutputFormat::csv}, {"markdown", OutputFormat::markdown},
    {"jsonl", OutputFormat::json_lines}, {"json-lines", OutputFormat::json_lines}};

void add_format(CLI::App* cmd, OutputFormat& format) {
  cmd->add_option("--format", format, "Output format: csv, markdown, jsonl")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case))
      ->default_str("csv");
}

void add_score_options(CLI::App* cmd, ScoreConfig& cfg) {
  static const std::map<std::string, BoxNormalization> norms{
      {"center", BoxNormalization::center}, {"border", BoxNormalization::border}};
  static const std::map<std::string, UnifiedFit> fits{
      {"joint", UnifiedFit::joint}, {"literal", UnifiedFit::algorithm_literal}};
  static const std::map<std::string, NormDenominator> denoms{
      {"mt", NormDenominator::objects_times_targets}, {"m", NormDenominator::objects}};
  cmd->add_option("--mu", cfg.mu, "Weight of the IoU term in det-logme")->capture_default_str();
  cmd->add_option("--normalization", cfg.normalization, "Box normalization for logme: center, border")
      ->transform(CLI::CheckedTransformer(norms, CLI::ignore_case))
      ->default_str("center");
  cmd->add_option("--unified-fit", cfg.unified_fit, "Unified target fit: joint, literal")
      ->transform(CLI::CheckedTransformer(fits, CLI::ignore_case))
      ->default_str("joint");
  cmd->add_option("--norm-denominator", cfg.evidence.denominator,
                  "Divide log-evidence by M*T (mt) or M (m)")
      ->transform(CLI::CheckedTransformer(denoms, CLI::ignore_case))
      ->default_str("mt");
  cmd->add_option("--tol", cfg.evidence.tolerance, "Fixed-point relative tolerance")
      ->capture_default_str();
  cmd->add_option("--max-iter", cfg.evidence.max_iterations, "Fixed-point iteration cap")
      ->capture_default_str();
}

void add_pyramid_options(CLI::App* cmd, PyramidConfig& p) {
  cmd->add_option("--l0", p.l0, "Level of a 224x224 object")->capture_default_str();
  cmd->add_option("--l-min", p.l_min, "Smallest pyramid level")->capture_default_str();
  cmd->add_option("--l-max", p.l_max, "Largest pyramid level")->capture_default_str();
  cmd->add_option("--small-thresh", p.small_thresh, "Longer side below this goes to l-min")
      ->capture_default_str();
  cmd->add_option("--large-thresh", p.large_thresh, "Longer side above this goes to l-max")
      ->capture_default_str();
}

// --- score -------------------------------------------------------------------

struct ScoreArgs {
  std::string bundle;
  std::string method;
  ScoreConfig cfg;
  SfdaOptions sfda;
  std::uint32_t knas_layers = 1;
  OutputFormat format = OutputFormat::csv;
  std::string out;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
  if (a.method == "det-logme") throw UsageError("det-logme requires a zoo (use rank)");
  a.cfg.validate();
  if (!(a.sfda.a > 0.0)) throw UsageError("--sfda-a must be positive");

  const auto bundle = read_bundle(a.bundle);
  double score = 0.0;
  if (a.method == "logme") {
    score = score_logme(bundle, a.cfg);
  } else if (a.method == "u-logme") {
    score = score_u_logme(bundle, a.cfg).score;
  } else if (a.method == "iou-logme") {
    score = score_iou_logme(bundle, score_u_logme(bundle, a.cfg).solution, a.cfg);
  } else if (a.method == "sfda") {
    score = sfda_score(bundle, a.sfda).score;
  } else {
    if (!bundle.gradients) {
      throw NotApplicableError("knas needs per-object gradients; '" + a.bundle + "' has none");
    }
    score = knas_score(bundle.gradients->cast<double>(), a.knas_layers);
  }
  OutputTable t{{"model_name", "dataset_name", "method", "score"}, {}};
  t.rows.push_back({text_cell(bundle.model_name), text_cell(bundle.dataset_name),
                    text_cell(a.method), num_cell(score)});
  emit(render(t, a.format), a.out, out);
}

// --- rank --------------------------------------------------------------------

struct RankArgs {
  std::string bundles;
  ScoreConfig cfg;
  OutputFormat format = OutputFormat::csv;
  std::string out;
};

void cmd_rank(const RankArgs& a, std::ostream& out) {
  a.cfg.validate();
  if (!fs::is_directory(a.bundles)) throw IoError("not a directory: " + a.bundles);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(a.bundles)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dtfb") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.size() < 2) {
    throw ValidationError("rank needs at least 2 bundles, found " + std::to_string(paths.size()) +
                          " in " + a.bundles);
  }
  std::vector<FeatureBundle> zoo;
  for (const auto& p : paths) zoo.push_back(read_bundle(p));
  const auto scores = score_det_logme(zoo, a.cfg);

  std::vector<std::size_t> order(scores.model_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (scores.det_logme[x] != scores.det_logme[y]) {
      return scores.det_logme[x] > scores.det_logme[y];
    }
    return scores.model_ids[x] < scores.model_ids[y];
  });
  OutputTable t{{"model_name", "u_logme_raw", "iou_logme_raw", "u_norm", "iou_norm", "det_logme"},
                {}};
  for (auto i : order) {
    t.rows.push_back({text_cell(scores.model_ids[i]), num_cell(scores.u_logme_raw[i]),
                      num_cell(scores.iou_logme_raw[i]), num_cell(scores.u_norm[i]),
                      num_cell(scores.iou_norm[i]), num_cell(scores.det_logme[i])});
  }
  emit(render(t, a.format), a.out, out);
}

// --- evaluate / stability ---------------------------------------------------

std::vector<std::string> metric_columns(const ScoreTable& scores, const std::vector<std::string>& asked,
                                        const std::string& gt_column) {
  if (!asked.empty()) {
    for (const auto& m : asked) {
      if (!scores.column(m)) throw ValidationError("scores have no column '" + m + "'");
    }
    return asked;
  }
  std::vector<std::string> cols;
  for (const auto& c : scores.columns) {
    if (c != gt_column) cols.push_back(c);
  }
  if (cols.empty()) throw ValidationError("scores have no metric columns");
  return cols;
}

std::size_t gt_column_of(const ScoreTable& gt, const std::string& name, const std::string& path) {
  const auto c = gt.column(name);
  if (!c) throw FormatError(path + ": missing ground-truth column '" + name + "'");
  return *c;
}

struct EvaluateArgs {
  std::string scores;
  std::string gt;
  std::string gt_column = "map";
  std::vector<std::string> columns;
  std::vector<std::string> metrics{"tauw-plain", "tauw-weighted", "pearson", "rel1"};
  std::string printed;
  std::string dataset;
  OutputFormat format = OutputFormat::csv;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  static const std::vector<std::string> known{"tauw-plain", "tauw-weighted", "pearson", "rel1"};
  for (const auto& m : a.metrics) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw UsageError("unknown metric '" + m + "' (expected tauw-plain, tauw-weighted, pearson, rel1)");
    }
  }
  if (a.printed.empty() != a.dataset.empty()) {
    throw UsageError("--printed and --dataset must be given together");
  }
  const auto scores = read_score_table(a.scores);
  const auto gt = read_score_table(a.gt);
  const auto gt_col = gt_column_of(gt, a.gt_column, a.gt);
  const auto columns = metric_columns(scores, a.columns, a.gt_column);

  std::optional<ScoreTable> printed;
  std::optional<std::size_t> printed_row;
  if (!a.printed.empty()) {
    printed = read_score_table(a.printed);
    printed_row = printed->row(a.dataset);
    if (!printed_row) throw ValidationError(a.printed + " has no row for '" + a.dataset + "'");
  }

  OutputTable t;
  t.header = {"score_column", "n"};
  for (const auto& m : a.metrics) t.header.push_back(m);
  if (printed) t.header.push_back("printed");

  for (const auto& col : columns) {
    const auto records = join_records(scores, *scores.column(col), gt, gt_col);
    std::vector<Cell> row{text_cell(col), num_cell(static_cast<double>(records.size()))};
    for (const auto& m : a.metrics) {
      std::optional<double> v;
      if (m == "tauw-plain" && records.size() >= 2) v = kendall_tau_plain(records);
      if (m == "tauw-weighted" && records.size() >= 2) v = kendall_tau_weighted(records);
      if (m == "pearson" && records.size() >= 3) v = pearson_weighted(records);
      if (m == "rel1" && !records.empty()) v = rel_at_1(records);
      row.push_back(opt_cell(v));
    }
    if (printed) {
      const auto pc = printed->column(col);
      row.push_back(opt_cell(pc ? printed->values[*pc][*printed_row] : std::nullopt));
    }
    t.rows.push_back(std::move(row));
  }
  emit(render(t, a.format), a.out, out);
}

struct StabilityArgs {
  std::string scores;
  std::string gt;
  std::string gt_column = "map";
  std::vector<std::string> columns;
  std::uint32_t subset_size = 22;
  double fraction = 0.01;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_stability(const StabilityArgs& a, std::ostream& out) {
  if (!(a.fraction > 0.0 && a.fraction <= 1.0)) throw UsageError("--fraction must lie in (0, 1]");
  if (a.subset_size < 2) throw UsageError("--subset-size must be at least 2");
  const auto scores = read_score_table(a.scores);
  const auto gt = read_score_table(a.gt);
  const auto gt_col = gt_column_of(gt, a.gt_column, a.gt);
  const auto columns = metric_columns(scores, a.columns, a.gt_column);

  std::vector<RankRecord> gt_records;
  for (std::size_t i = 0; i < gt.ids.size(); ++i) {
    if (const auto& v = gt.values[gt_col][i]) gt_records.push_back({gt.ids[i], 0.0, *v});
  }
  const auto report = evaluate_stability(scores, columns, gt_records, a.subset_size, a.fraction, a.seed);
  if (a.out.empty()) {
    out << stability_csv(report);
  } else {
    write_file_atomic(a.out, std::string_view(stability_csv(report)));
    out << stability_summary(report);
  }
}

// --- synth / assign-levels / reproduce / validate -----------------------------

struct SynthArgs {
  std::string out;
  std::uint64_t objects = 500;
  std::uint32_t dim = 32;
  std::uint32_t classes = 3;
  double quality = 0.5;
  std::uint64_t seed = 0;
  std::string model_name;
  std::string dataset_name = "synthetic";
  bool with_levels = false;
  std::uint32_t gradient_dim = 0;
  PyramidConfig pyramid;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (!(a.quality >= 0.0 && a.quality <= 1.0)) throw UsageError("--quality must lie in [0, 1]");
  if (a.objects < 2 || a.dim < 1 || a.classes < 1) {
    throw UsageError("--objects must be >= 2, --dim and --classes >= 1");
  }
  if (a.with_levels) validate(a.pyramid);

  auto bundle = synth_bundle(a.objects, a.dim, a.classes, a.quality, a.seed);
  if (!a.model_name.empty()) bundle.model_name = a.model_name;
  bundle.dataset_name = a.dataset_name;
  if (a.with_levels) {
    std::vector<std::uint8_t> levels(static_cast<std::size_t>(a.objects));
    for (Eigen::Index i = 0; i < bundle.num_objects(); ++i) {
      const double w = bundle.boxes(i, 2) - bundle.boxes(i, 0);
      const double h = bundle.boxes(i, 3) - bundle.boxes(i, 1);
      levels[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(assign_pyramid_level(w, h, a.pyramid) - a.pyramid.l_min);
    }
    bundle.levels = std::move(levels);
    bundle.level_count = static_cast<std::uint8_t>(a.pyramid.l_max - a.pyramid.l_min + 1);
  }
  if (a.gradient_dim > 0) {
    Rng rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
    FloatMatrix g(bundle.num_objects(), a.gradient_dim);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = static_cast<float>(rng.normal());
    }
    bundle.gradients = std::move(g);
  }
  write_bundle(bundle, a.out);
  out << "wrote " << a.out << " (" << bundle.model_name << ", M=" << bundle.num_objects()
      << ", D=" << bundle.feature_dim() << ", K=" << bundle.num_classes << ")\n";
}

struct AssignLevelsArgs {
  std::string input;
  PyramidConfig pyramid;
  std::string out;
};

void cmd_assign_levels(const AssignLevelsArgs& a, std::ostream& out) {
  validate(a.pyramid);
  const auto csv = read_csv(a.input);
  const auto wc = csv.column("w");
  const auto hc = csv.column("h");
  if (!wc || !hc) throw FormatError(a.input + ": expected columns 'w' and 'h'");
  std::string text = "w,h,level\n";
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    double w = 0.0, h = 0.0;
    try {
      std::size_t pw = 0, ph = 0;
      w = std::stod(csv.rows[r][*wc], &pw);
      h = std::stod(csv.rows[r][*hc], &ph);
      if (pw != csv.rows[r][*wc].size() || ph != csv.rows[r][*hc].size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw FormatError(a.input + ": non-numeric size at row " + std::to_string(r + 1));
    }
    if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h)) {
      throw ValidationError(a.input + ": non-positive size at row " + std::to_string(r + 1));
    }
    text += csv.rows[r][*wc] + "," + csv.rows[r][*hc] + "," +
            std::to_string(assign_pyramid_level(w, h, a.pyramid)) + "\n";
  }
  emit(text, a.out, out);
}

struct ReproduceArgs {
  std::string fixtures;
  std::string out_dir;
};

void cmd_reproduce(const ReproduceArgs& a, std::ostream& out) {
  const auto report = reproduce_tables(a.fixtures);
  const auto md = reproduction_markdown(report);
  if (a.out_dir.empty()) {
    out << md;
    return;
  }
  fs::create_directories(a.out_dir);
  write_file_atomic(fs::path(a.out_dir) / "reproduction.csv", std::string_view(reproduction_csv(report)));
  write_file_atomic(fs::path(a.out_dir) / "reproduction.md", std::string_view(md));
  out << "wrote " << (fs::path(a.out_dir) / "reproduction.md").string() << " and reproduction.csv\n";
}

void cmd_validate(const std::vector<std::string>& bundles, std::ostream& out) {
  for (const auto& path : bundles) {
    const auto b = read_bundle(path);
    out << "ok " << path << ": " << b.model_name << ", M=" << b.num_objects()
        << ", D=" << b.feature_dim() << ", K=" << b.num_classes
        << ", levels=" << (b.levels ? std::to_string(b.level_count) : "none")
        << ", gradients=" << b.gradient_dim() << "\n";
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank pre-trained detectors by predicted transferability", "detrank"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score one feature bundle");
  score_cmd->add_option("--bundle", score.bundle, "Bundle file (.dtfb)")->required();
  score_cmd->add_option("--method", score.method, "logme, u-logme, iou-logme, sfda, knas, det-logme")
      ->required()
      ->check(CLI::IsMember({"logme", "u-logme", "iou-logme", "sfda", "knas", "det-logme"}));
  add_score_options(score_cmd, score.cfg);
  score_cmd->add_option("--sfda-a", score.sfda.a, "SFDA regularization constant a")
      ->capture_default_str();
  score_cmd->add_option("--knas-layers", score.knas_layers, "Head layers the gradient rows span")
      ->capture_default_str();
  add_format(score_cmd, score.format);
  score_cmd->add_option("--out", score.out, "Write to this file instead of stdout");

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Score a model zoo with det-logme and rank it");
  rank_cmd->add_option("--bundles", rank.bundles, "Directory of .dtfb bundles")->required();
  add_score_options(rank_cmd, rank.cfg);
  add_format(rank_cmd, rank.format);
  rank_cmd->add_option("--out", rank.out, "Write to this file instead of stdout");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Correlate score columns with ground truth");
  eval_cmd->add_option("--scores", evaluate.scores, "Score CSV")->required();
  eval_cmd->add_option("--gt", evaluate.gt, "Ground-truth CSV")->required();
  eval_cmd->add_option("--gt-column", evaluate.gt_column, "Ground-truth column")->capture_default_str();
  eval_cmd->add_option("--columns", evaluate.columns, "Score columns (default: all numeric)")
      ->delimiter(',');
  eval_cmd->add_option("--metrics", evaluate.metrics, "tauw-plain, tauw-weighted, pearson, rel1")
      ->delimiter(',');
  eval_cmd->add_option("--printed", evaluate.printed, "CSV of printed tau values to compare against");
  eval_cmd->add_option("--dataset", evaluate.dataset, "Row of --printed to compare against");
  add_format(eval_cmd, evaluate.format);
  eval_cmd->add_option("--out", evaluate.out, "Write to this file instead of stdout");

  StabilityArgs stability;
  auto* stab_cmd = app.add_subcommand("stability", "Evaluate metrics over sampled model subsets");
  stab_cmd->add_option("--scores", stability.scores, "Score CSV")->required();
  stab_cmd->add_option("--gt", stability.gt, "Ground-truth CSV")->required();
  stab_cmd->add_option("--gt-column", stability.gt_column, "Ground-truth column")->capture_default_str();
  stab_cmd->add_option("--columns", stability.columns, "Score columns (default: all numeric)")
      ->delimiter(',');
  stab_cmd->add_option("--subset-size", stability.subset_size, "Models per subset")
      ->capture_default_str();
  stab_cmd->add_option("--fraction", stability.fraction, "Fraction of all subsets to sample")
      ->capture_default_str();
  stab_cmd->add_option("--seed", stability.seed, "Sampling seed")->required();
  stab_cmd->add_option("--out", stability.out, "Write the CSV here and print a summary");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic bundle with planted quality");
  synth_cmd->add_option("--out", synth.out, "Bundle path (.dtfb)")->required();
  synth_cmd->add_option("--objects", synth.objects, "Number of objects M")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Feature dimension D")->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Number of classes K")->capture_default_str();
  synth_cmd->add_option("--quality", synth.quality, "Planted quality in [0, 1]")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->required();
  synth_cmd->add_option("--model-name", synth.model_name, "Override the generated model name");
  synth_cmd->add_option("--dataset-name", synth.dataset_name, "Dataset name")->capture_default_str();
  synth_cmd->add_flag("--with-levels", synth.with_levels, "Store pyramid levels");
  synth_cmd->add_option("--gradient-dim", synth.gradient_dim, "Store random gradients of this width")
      ->capture_default_str();
  add_pyramid_options(synth_cmd, synth.pyramid);

  AssignLevelsArgs levels;
  auto* levels_cmd = app.add_subcommand("assign-levels", "Map box sizes (w,h CSV) to pyramid levels");
  levels_cmd->add_option("--input", levels.input, "CSV with columns w,h in pixels")->required();
  add_pyramid_options(levels_cmd, levels.pyramid);
  levels_cmd->add_option("--out", levels.out, "Write to this file instead of stdout");

  ReproduceArgs reproduce;
  auto* repro_cmd = app.add_subcommand("reproduce", "Recompute tau from per-model table fixtures");
  repro_cmd->add_option("--fixtures", reproduce.fixtures, "Fixture directory")->required();
  repro_cmd->add_option("--out-dir", reproduce.out_dir, "Write reproduction.md and .csv here");

  std::vector<std::string> validate_paths;
  auto* validate_cmd = app.add_subcommand("validate", "Check bundle files");
  validate_cmd->add_option("bundles", validate_paths, "Bundle files")->required();

  std::vector<const char*> argv{"detrank"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*score_cmd) cmd_score(score, out);
    if (*rank_cmd) cmd_rank(rank, out);
    if (*eval_cmd) cmd_evaluate(evaluate, out);
    if (*stab_cmd) cmd_stability(stability, out);
    if (*synth_cmd) cmd_synth(synth, out);
    if (*levels_cmd) cmd_assign_levels(levels, out);
    if (*repro_cmd) cmd_reproduce(reproduce, out);
    if (*validate_cmd) cmd_validate(validate_paths, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io_or_format);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::io_or_format);
  }
  return 0;
}

}  // namespace detrank
