#include "churnforge/pipeline.hpp"

#include <fstream>
#include <unordered_map>
#include <sstream>

#include <fmt/format.h>

#include "churnforge/dataset.hpp"
#include "churnforge/error.hpp"
#include "churnforge/evaluation.hpp"
#include "churnforge/statistical.hpp"
#include "churnforge/util.hpp"

namespace churnforge {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::Validation, what); }

void allow_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) invalid(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      invalid(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(fmt::format("field '{}' has the wrong type", key));
  }
}

template <typename T, typename Parse>
std::vector<T> token_list(const json& j, const char* key, std::vector<T> fallback, Parse parse) {
  if (!j.contains(key)) return fallback;
  std::vector<T> out;
  try {
    for (const auto& t : j.at(key)) out.push_back(parse(t.get<std::string>()));
  } catch (const json::exception&) {
    invalid(fmt::format("field '{}' must be a list of strings", key));
  } catch (const Error& e) {
    invalid(e.what());
  }
  return out;
}

Hyperparameters hyper_from(const json& j, Hyperparameters base) {
  allow_keys(j, "hyperparameters",
             {"n_trees", "learning_rate", "max_depth", "max_nodes", "lambda", "gamma", "min_child_weight",
              "max_features", "bootstrap"});
  try {
    from_json(j, base);
  } catch (const json::exception& e) {
    invalid(std::string("bad hyperparameters: ") + e.what());
  }
  if (base.n_trees < 1 || base.max_depth < 0 || !(base.learning_rate > 0) || base.lambda < 0 || base.gamma < 0 ||
      base.min_child_weight < 0 || base.max_features < 0 || base.max_features > 1) {
    invalid("hyperparameters out of range");
  }
  return base;
}


std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require(const std::filesystem::path& path, std::string_view producer) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::MissingArtifact,
                fmt::format("{} is missing; run `churnforge {}` first", path.string(), producer));
  }
}

struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  json inputs = json::object();
  json outputs = json::object();
  std::vector<std::string> warnings;

  void input(const std::string& name, const std::filesystem::path& p) { inputs[name] = sha256_file(p); }
  void output(const std::string& name, const std::filesystem::path& p) { outputs[name] = sha256_file(p); }

  void write(const PipelineConfig& config, const Workspace& ws) const {
    const json j = {{"command", command},  {"config_hash", config.hash()}, {"seed", config.seed},
                    {"inputs", inputs},    {"outputs", outputs},           {"warnings", warnings}};
    atomic_write(ws.manifest(command), j.dump(2) + "\n");
  }
};

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream out;
  body(out);
  atomic_write(path, out.str());
}

void note_issues(Manifest& m, std::string_view file, const std::vector<ParseIssue>& issues) {
  if (issues.empty()) return;
  m.warnings.push_back(fmt::format("{}: skipped {} malformed rows", file, issues.size()));
  for (std::size_t i = 0; i < std::min<std::size_t>(issues.size(), 5); ++i) {
    m.warnings.push_back(fmt::format("{} line {}: {}", file, issues[i].line, issues[i].message));
  }
}

struct RawInputs {
  std::vector<CdrRecord> records;
  std::vector<CustomerProfile> profiles;
  std::vector<LabelRecord> labels;
};

RawInputs load_inputs(const PipelineConfig& c, const RunOptions& o, Manifest& m, bool with_labels) {
  require(c.paths.cdr, "generate");
  require(c.paths.profiles, "generate");
  if (with_labels) require(c.paths.labels, "generate");
  const ParseOptions po{o.strict};
  RawInputs in;
  auto cdr = parse_cdr_file(c.paths.cdr, c.cdr_format, po);
  note_issues(m, "cdr", cdr.issues);
  in.records = std::move(cdr.items);
  m.input("cdr", c.paths.cdr);
  auto profiles = parse_profiles(c.paths.profiles, po);
  note_issues(m, "profiles", profiles.issues);
  in.profiles = std::move(profiles.items);
  m.input("profiles", c.paths.profiles);
  if (with_labels) {
    auto labels = parse_labels(c.paths.labels, po);
    note_issues(m, "labels", labels.issues);
    in.labels = std::move(labels.items);
    m.input("labels", c.paths.labels);
  }
  return in;
}

ExperimentConfig experiment_config(const PipelineConfig& c, const RunOptions& o) {
  ExperimentConfig e = c.experiment;
  e.statistical_window_months = c.statistical_window_months;
  e.sna_window_months = c.sna_window_months;
  e.exclusion_months = c.exclusion_months;
  e.train_fraction = c.train_fraction;
  e.selection = c.selection;
  e.rank = c.rank;
  e.seed = c.seed;
  e.threads = o.threads;
  e.config_hash = c.hash();
  return e;
}

}  // namespace

std::string PipelineConfig::hash() const { return sha256_hex(canonical.dump()); }

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  allow_keys(j, "config",
             {"seed", "paths", "cdr_format", "baseline", "windows", "rank", "selection", "learner", "synthetic",
              "experiment"});
  PipelineConfig c;
  if (!j.contains("seed")) invalid("config must set 'seed'");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);

  const json paths = j.value("paths", json::object());
  allow_keys(paths, "paths", {"cdr", "profiles", "labels", "workdir"});
  const std::string cdr = get_or<std::string>(paths, "cdr", "data/cdr.csv");
  const std::string profiles = get_or<std::string>(paths, "profiles", "data/profiles.csv");
  const std::string labels = get_or<std::string>(paths, "labels", "data/labels.csv");
  const std::string workdir = get_or<std::string>(paths, "workdir", "work");
  c.paths = {resolve(base_dir, cdr), resolve(base_dir, profiles), resolve(base_dir, labels), resolve(base_dir, workdir)};

  const std::string format = get_or<std::string>(j, "cdr_format", "csv");
  try {
    c.cdr_format = parse_cdr_format(format);
  } catch (const Error& e) {
    invalid(e.what());
  }

  const json syn = j.value("synthetic", json::object());
  allow_keys(syn, "synthetic",
             {"customers", "months", "churn_rate", "baseline", "label_horizon_months", "competitor_ratio",
              "landline_ratio", "recent_activation_share", "recent_activation_months", "community_size",
              "mean_friends", "mean_monthly_events", "mean_monthly_sessions", "internet_user_share", "activity_decay",
              "active_dip_share", "competitor_shift", "dropped_call_shift", "slow_radio_shift", "shadow_probability",
              "shadow_reach", "dual_line_share"});
  auto& s = c.synthetic;
  s.customers = get_or(syn, "customers", s.customers);
  s.months = get_or(syn, "months", s.months);
  s.churn_rate = get_or(syn, "churn_rate", s.churn_rate);
  s.label_horizon_months = get_or(syn, "label_horizon_months", s.label_horizon_months);
  s.competitor_ratio = get_or(syn, "competitor_ratio", s.competitor_ratio);
  s.landline_ratio = get_or(syn, "landline_ratio", s.landline_ratio);
  s.recent_activation_share = get_or(syn, "recent_activation_share", s.recent_activation_share);
  s.recent_activation_months = get_or(syn, "recent_activation_months", s.recent_activation_months);
  s.community_size = get_or(syn, "community_size", s.community_size);
  s.mean_friends = get_or(syn, "mean_friends", s.mean_friends);
  s.mean_monthly_events = get_or(syn, "mean_monthly_events", s.mean_monthly_events);
  s.mean_monthly_sessions = get_or(syn, "mean_monthly_sessions", s.mean_monthly_sessions);
  s.internet_user_share = get_or(syn, "internet_user_share", s.internet_user_share);
  s.activity_decay = get_or(syn, "activity_decay", s.activity_decay);
  s.active_dip_share = get_or(syn, "active_dip_share", s.active_dip_share);
  s.competitor_shift = get_or(syn, "competitor_shift", s.competitor_shift);
  s.dropped_call_shift = get_or(syn, "dropped_call_shift", s.dropped_call_shift);
  s.slow_radio_shift = get_or(syn, "slow_radio_shift", s.slow_radio_shift);
  s.shadow_probability = get_or(syn, "shadow_probability", s.shadow_probability);
  s.shadow_reach = get_or(syn, "shadow_reach", s.shadow_reach);
  s.dual_line_share = get_or(syn, "dual_line_share", s.dual_line_share);
  try {
    if (syn.contains("baseline")) s.baseline = parse_date(syn["baseline"].get<std::string>());
    c.baseline = j.contains("baseline") ? parse_date(j["baseline"].get<std::string>()) : s.baseline;
  } catch (const json::exception&) {
    invalid("baseline must be a YYYY-MM-DD string");
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (s.customers == 0) invalid("synthetic.customers must be positive");
  if (!(s.churn_rate > 0 && s.churn_rate < 1)) invalid("synthetic.churn_rate must lie in (0,1)");
  if (s.months < 1) invalid("synthetic.months must be >= 1");

  const json win = j.value("windows", json::object());
  allow_keys(win, "windows", {"statistical_months", "sna_months", "exclusion_months"});
  c.statistical_window_months = get_or(win, "statistical_months", c.statistical_window_months);
  c.sna_window_months = get_or(win, "sna_months", c.sna_window_months);
  c.exclusion_months = get_or(win, "exclusion_months", c.exclusion_months);
  if (c.statistical_window_months < 1 || c.sna_window_months < 1) invalid("windows must span at least one month");
  if (c.exclusion_months < 0) invalid("exclusion_months must be >= 0");

  const json rank = j.value("rank", json::object());
  allow_keys(rank, "rank", {"damping", "tolerance", "max_iterations"});
  c.rank.damping = get_or(rank, "damping", c.rank.damping);
  c.rank.tolerance = get_or(rank, "tolerance", c.rank.tolerance);
  c.rank.max_iterations = get_or(rank, "max_iterations", c.rank.max_iterations);
  if (!(c.rank.damping > 0 && c.rank.damping < 1)) invalid("rank.damping must lie in (0,1)");
  if (!(c.rank.tolerance > 0)) invalid("rank.tolerance must be positive");
  if (c.rank.max_iterations < 1) invalid("rank.max_iterations must be >= 1");

  const json sel = j.value("selection", json::object());
  allow_keys(sel, "selection",
             {"identifier_columns", "categorical_columns", "max_row_missing", "max_column_missing", "max_categories",
              "other_category", "correlation_threshold"});
  auto& p = c.selection;
  p.identifier_columns = get_or(sel, "identifier_columns", std::vector<std::string>{"contract_id"});
  p.categorical_columns = get_or(sel, "categorical_columns", p.categorical_columns);
  p.max_row_missing = get_or(sel, "max_row_missing", p.max_row_missing);
  p.max_column_missing = get_or(sel, "max_column_missing", p.max_column_missing);
  p.max_categories = get_or(sel, "max_categories", p.max_categories);
  p.other_category = get_or(sel, "other_category", p.other_category);
  if (sel.contains("correlation_threshold")) {
    p.correlation_threshold = sel["correlation_threshold"].is_null()
                                  ? std::nullopt
                                  : std::optional<double>(get_or(sel, "correlation_threshold", 0.95));
  }
  if (p.max_row_missing < 0 || p.max_row_missing > 1 || p.max_column_missing < 0 || p.max_column_missing > 1) {
    invalid("missing-value thresholds must lie in [0,1]");
  }
  if (p.max_categories < 1 || p.max_categories + 1 > kMaxCategoryCodes) invalid("max_categories must be in [1,63]");

  const json learner = j.value("learner", json::object());
  allow_keys(learner, "learner", {"kind", "sampling", "grid", "cv_folds", "train_fraction"});
  try {
    c.learner = parse_learner_kind(get_or<std::string>(learner, "kind", "XGB"));
    if (learner.contains("sampling")) c.sampling = parse_sampling_mode(get_or<std::string>(learner, "sampling", ""));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validation) throw;
    invalid(e.what());
  }
  if (learner.contains("grid")) {
    for (const auto& g : learner["grid"]) c.grid.push_back(hyper_from(g, default_hyperparameters(c.learner)));
  }
  if (c.grid.empty()) c.grid.push_back(default_hyperparameters(c.learner));
  c.cv_folds = get_or(learner, "cv_folds", c.cv_folds);
  c.train_fraction = get_or(learner, "train_fraction", c.train_fraction);
  if (c.cv_folds < 2) invalid("learner.cv_folds must be >= 2");
  if (!(c.train_fraction > 0 && c.train_fraction < 1)) invalid("learner.train_fraction must lie in (0,1)");

  const json ex = j.value("experiment", json::object());
  allow_keys(ex, "experiment",
             {"feature_sets", "algorithms", "samplings", "sweep_families", "sweep_months", "sweep_algorithm",
              "hyperparameters"});
  auto& e = c.experiment;
  e.feature_sets = token_list(ex, "feature_sets", e.feature_sets, parse_feature_set);
  e.algorithms = token_list(ex, "algorithms", e.algorithms, parse_learner_kind);
  e.samplings = token_list(ex, "samplings", e.samplings, parse_sampling_mode);
  e.sweep_families = token_list(ex, "sweep_families", e.sweep_families, parse_feature_set);
  e.sweep_months = get_or(ex, "sweep_months", e.sweep_months);
  for (int m : e.sweep_months) {
    if (m < 1) invalid("experiment.sweep_months entries must be >= 1");
  }
  try {
    e.sweep_algorithm = parse_learner_kind(get_or<std::string>(ex, "sweep_algorithm", "XGB"));
    if (ex.contains("hyperparameters")) {
      for (const auto& [name, hj] : ex["hyperparameters"].items()) {
        const auto kind = parse_learner_kind(name);
        e.hyperparameters[kind] = hyper_from(hj, default_hyperparameters(kind));
      }
    }
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Validation) throw;
    invalid(err.what());
  }

  // Canonical form: every effective value, relative paths as written.
  json grid = json::array();
  for (const auto& g : c.grid) grid.push_back(g);
  json hyper = json::object();
  for (const auto& [kind, h] : e.hyperparameters) hyper[std::string(to_string(kind))] = h;
  auto names = [](const auto& v) {
    json out = json::array();
    for (auto x : v) out.push_back(std::string(to_string(x)));
    return out;
  };
  c.canonical = {
      {"seed", c.seed},
      {"paths", {{"cdr", cdr}, {"profiles", profiles}, {"labels", labels}, {"workdir", workdir}}},
      {"cdr_format", c.cdr_format == CdrFormat::Csv ? "csv" : "jsonl"},
      {"baseline", format_date(c.baseline)},
      {"windows",
       {{"statistical_months", c.statistical_window_months},
        {"sna_months", c.sna_window_months},
        {"exclusion_months", c.exclusion_months}}},
      {"rank", {{"damping", c.rank.damping}, {"tolerance", c.rank.tolerance}, {"max_iterations", c.rank.max_iterations}}},
      {"selection",
       {{"identifier_columns", p.identifier_columns},
        {"categorical_columns", p.categorical_columns},
        {"max_row_missing", p.max_row_missing},
        {"max_column_missing", p.max_column_missing},
        {"max_categories", p.max_categories},
        {"other_category", p.other_category},
        {"correlation_threshold", p.correlation_threshold ? json(*p.correlation_threshold) : json(nullptr)}}},
      {"learner",
       {{"kind", std::string(to_string(c.learner))},
        {"sampling", std::string(to_string(c.effective_sampling()))},
        {"grid", grid},
        {"cv_folds", c.cv_folds},
        {"train_fraction", c.train_fraction}}},
      {"synthetic",
       {{"customers", s.customers},
        {"months", s.months},
        {"churn_rate", s.churn_rate},
        {"baseline", format_date(s.baseline)},
        {"label_horizon_months", s.label_horizon_months},
        {"competitor_ratio", s.competitor_ratio},
        {"landline_ratio", s.landline_ratio},
        {"recent_activation_share", s.recent_activation_share},
        {"recent_activation_months", s.recent_activation_months},
        {"community_size", s.community_size},
        {"mean_friends", s.mean_friends},
        {"mean_monthly_events", s.mean_monthly_events},
        {"mean_monthly_sessions", s.mean_monthly_sessions},
        {"internet_user_share", s.internet_user_share},
        {"activity_decay", s.activity_decay},
        {"active_dip_share", s.active_dip_share},
        {"competitor_shift", s.competitor_shift},
        {"dropped_call_shift", s.dropped_call_shift},
        {"slow_radio_shift", s.slow_radio_shift},
        {"shadow_probability", s.shadow_probability},
        {"shadow_reach", s.shadow_reach},
        {"dual_line_share", s.dual_line_share}}},
      {"experiment",
       {{"feature_sets", names(e.feature_sets)},
        {"algorithms", names(e.algorithms)},
        {"samplings", names(e.samplings)},
        {"sweep_families", names(e.sweep_families)},
        {"sweep_months", e.sweep_months},
        {"sweep_algorithm", std::string(to_string(e.sweep_algorithm))},
        {"hyperparameters", hyper}}}};
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) invalid("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    invalid(path.string() + ": " + e.what());
  }
  return from_json(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

std::filesystem::path Workspace::manifest(std::string_view command) const {
  return root / "manifests" / (std::string(command) + ".json");
}

void cmd_generate(const PipelineConfig& config, const RunOptions&) {
  const Workspace ws{config.paths.workdir};
  Manifest m("generate");
  auto spec = config.synthetic;
  const auto data = generate_synthetic(spec, derive_seed(config.seed, "generate"));
  write_synthetic(data, {config.paths.cdr, config.paths.profiles, config.paths.labels}, config.cdr_format);
  m.output("cdr", config.paths.cdr);
  m.output("profiles", config.paths.profiles);
  m.output("labels", config.paths.labels);
  m.write(config, ws);
}

void cmd_graph(const PipelineConfig& config, const RunOptions& options) {
  const Workspace ws{config.paths.workdir};
  Manifest m("graph");
  const auto in = load_inputs(config, options, m, false);
  const Window window = months_before(config.baseline, config.sna_window_months);
  const auto graph = build_graph(in.records, window, WeightScheme::MeanOfBoth);
  const auto sna = sna_features(in.records, window, SnaConfig{config.rank, options.threads});
  for (const auto& tag : sna.unconverged) m.warnings.push_back("rank did not converge: " + tag);
  write_text(ws.edges(), [&](std::ostream& o) { write_edge_list(o, graph); });
  write_text(ws.sna(), [&](std::ostream& o) { write_sna_csv(o, sna.rows); });
  m.output("edges", ws.edges());
  m.output("sna_features", ws.sna());
  m.write(config, ws);
}

void cmd_features(const PipelineConfig& config, const RunOptions& options) {
  const Workspace ws{config.paths.workdir};
  Manifest m("features");
  require(ws.sna(), "graph");
  const auto in = load_inputs(config, options, m, true);
  std::ifstream sna_in(ws.sna(), std::ios::binary);
  const auto sna = read_sna_csv(sna_in);
  m.input("sna_features", ws.sna());

  auto stat = statistical_features(in.records, in.profiles, config.statistical_window_months, config.baseline);
  m.warnings.insert(m.warnings.end(), stat.warnings.begin(), stat.warnings.end());
  const auto merged = merge(stat.matrix, sna, in.profiles, config.rank.damping);
  const auto assembled = assemble(merged, in.labels, in.profiles, config.baseline, config.exclusion_months);
  auto selected = transform_select(assembled.matrix, config.selection);

  LabeledDataset ds;
  ds.baseline = config.baseline;
  std::unordered_map<std::string, Label> label_of;
  for (std::size_t i = 0; i < assembled.size(); ++i) label_of.emplace(assembled.matrix.ids()[i], assembled.labels[i]);
  ds.matrix = std::move(selected.matrix);
  for (const auto& id : ds.matrix.ids()) ds.labels.push_back(label_of.at(id));

  write_dataset(ds, ws.dataset(), ws.schema());
  atomic_write(ws.selection_report(), selected.report.to_json().dump(2) + "\n");
  m.output("dataset", ws.dataset());
  m.output("schema", ws.schema());
  m.output("selection_report", ws.selection_report());
  m.write(config, ws);
}

void cmd_train(const PipelineConfig& config, const RunOptions& options) {
  const Workspace ws{config.paths.workdir};
  Manifest m("train");
  require(ws.dataset(), "features");
  require(ws.schema(), "features");
  const auto ds = read_dataset(ws.dataset(), ws.schema());
  m.input("dataset", ws.dataset());
  m.input("schema", ws.schema());

  const auto split = split_indices(ds.matrix.ids(), ds.labels, config.train_fraction, config.seed);
  const auto train_set = ds.select_rows(split.train);
  const auto sampling = config.effective_sampling();
  const auto cv = cross_validate(train_set, config.learner, config.grid, config.cv_folds, sampling,
                                 derive_seed(config.seed, "cv"), options.threads);
  const auto balanced = resample(train_set, sampling, derive_seed(config.seed, "resample"));
  const auto model = train(balanced, config.learner, cv.best, derive_seed(config.seed, "train"), options.threads);

  json split_json = {{"train", json::array()}, {"test", json::array()}};
  for (auto i : split.train) split_json["train"].push_back(ds.matrix.ids()[i]);
  for (auto i : split.test) split_json["test"].push_back(ds.matrix.ids()[i]);
  atomic_write(ws.split(), split_json.dump(2) + "\n");
  json cv_json = cv.to_json();
  cv_json["sampling"] = std::string(to_string(sampling));
  cv_json["learner"] = std::string(to_string(config.learner));
  atomic_write(ws.cv_report(), cv_json.dump(2) + "\n");
  atomic_write(ws.model(), model.to_json().dump(2) + "\n");
  m.output("split", ws.split());
  m.output("cv_report", ws.cv_report());
  m.output("model", ws.model());
  m.write(config, ws);
}

void cmd_evaluate(const PipelineConfig& config, const RunOptions&) {
  const Workspace ws{config.paths.workdir};
  Manifest m("evaluate");
  require(ws.dataset(), "features");
  require(ws.model(), "train");
  require(ws.split(), "train");
  const auto ds = read_dataset(ws.dataset(), ws.schema());
  const auto model = TrainedModel::from_json(json::parse(read_file(ws.model())));
  const auto split = json::parse(read_file(ws.split()));
  m.input("dataset", ws.dataset());
  m.input("model", ws.model());
  m.input("split", ws.split());

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ds.size(); ++i) row_of.emplace(ds.matrix.ids()[i], i);
  std::vector<std::size_t> rows;
  for (const auto& id : split.at("test")) {
    auto it = row_of.find(id.get<std::string>());
    if (it == row_of.end()) throw Error(ErrorCode::SchemaMismatch, "split refers to an unknown row; rerun train");
    rows.push_back(it->second);
  }
  const auto test = ds.select_rows(rows);
  const auto curve = roc_auc(predict(model, test.matrix), test.labels);
  const auto importance = feature_importance(model);

  write_text(ws.roc_csv(), [&](std::ostream& o) { write_roc_csv(o, curve); });
  const std::vector<std::pair<std::string, RocCurve>> named{{std::string(to_string(model.kind)), curve}};
  atomic_write(ws.roc_svg(), roc_svg(named));
  write_text(ws.importance(), [&](std::ostream& o) {
    o << "feature,gain,share\n";
    for (const auto& f : importance) o << csv_escape(f.feature) << ',' << format_double(f.gain) << ',' << format_double(f.share) << '\n';
  });
  const json summary = {{"auc", curve.auc},
                        {"trapezoid_auc", curve.trapezoid_area()},
                        {"test_rows", test.size()},
                        {"test_churners", test.count(Label::Churn)},
                        {"learner", std::string(to_string(model.kind))}};
  atomic_write(ws.evaluation(), summary.dump(2) + "\n");
  m.output("roc_csv", ws.roc_csv());
  m.output("roc_svg", ws.roc_svg());
  m.output("importance", ws.importance());
  m.output("evaluation", ws.evaluation());
  m.write(config, ws);
}

void cmd_experiment(const PipelineConfig& config, const RunOptions& options) {
  const Workspace ws{config.paths.workdir};
  Manifest m("experiment");
  const auto in = load_inputs(config, options, m, true);
  const ExperimentData data{in.records, in.profiles, in.labels, config.baseline};
  const auto report = run_experiment_grid(experiment_config(config, options), data);
  atomic_write(ws.report_json(), report.to_json().dump(2) + "\n");
  atomic_write(ws.report_txt(), report.to_table());
  m.output("report_json", ws.report_json());
  m.output("report_txt", ws.report_txt());
  m.write(config, ws);
}

}  // namespace churnforge
