#include "churnforge/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "churnforge/error.hpp"
#include "churnforge/evaluation.hpp"
#include "churnforge/util.hpp"

namespace churnforge {

std::string_view to_string(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::DecisionTree: return "DT";
    case LearnerKind::RandomForest: return "RF";
    case LearnerKind::Gbm: return "GBM";
    case LearnerKind::XgbStyle: return "XGB";
  }
  return "?";
}

std::string_view to_string(SamplingMode mode) noexcept {
  switch (mode) {
    case SamplingMode::None: return "NONE";
    case SamplingMode::Oversample: return "OVERSAMPLE";
    case SamplingMode::Undersample: return "UNDERSAMPLE";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view t) {
  if (t == "DT") return LearnerKind::DecisionTree;
  if (t == "RF") return LearnerKind::RandomForest;
  if (t == "GBM") return LearnerKind::Gbm;
  if (t == "XGB") return LearnerKind::XgbStyle;
  throw Error(ErrorCode::InvalidArgument, "unknown learner '" + std::string(t) + "' (DT, RF, GBM, XGB)");
}

SamplingMode parse_sampling_mode(std::string_view t) {
  if (t == "NONE") return SamplingMode::None;
  if (t == "OVERSAMPLE") return SamplingMode::Oversample;
  if (t == "UNDERSAMPLE") return SamplingMode::Undersample;
  throw Error(ErrorCode::InvalidArgument,
              "unknown sampling mode '" + std::string(t) + "' (NONE, OVERSAMPLE, UNDERSAMPLE)");
}

void to_json(nlohmann::json& j, const Hyperparameters& h) {
  j = {{"n_trees", h.n_trees},     {"learning_rate", h.learning_rate},
       {"max_depth", h.max_depth}, {"max_nodes", h.max_nodes},
       {"lambda", h.lambda},       {"gamma", h.gamma},
       {"min_child_weight", h.min_child_weight},
       {"max_features", h.max_features},
       {"bootstrap", h.bootstrap}};
}

void from_json(const nlohmann::json& j, Hyperparameters& h) {
  h.n_trees = j.value("n_trees", h.n_trees);
  h.learning_rate = j.value("learning_rate", h.learning_rate);
  h.max_depth = j.value("max_depth", h.max_depth);
  h.max_nodes = j.value("max_nodes", h.max_nodes);
  h.lambda = j.value("lambda", h.lambda);
  h.gamma = j.value("gamma", h.gamma);
  h.min_child_weight = j.value("min_child_weight", h.min_child_weight);
  h.max_features = j.value("max_features", h.max_features);
  h.bootstrap = j.value("bootstrap", h.bootstrap);
}

Hyperparameters default_hyperparameters(LearnerKind kind) {
  Hyperparameters h;
  switch (kind) {
    case LearnerKind::DecisionTree:
      h.n_trees = 1;
      h.max_depth = 20;
      h.max_nodes = 398;
      break;
    case LearnerKind::RandomForest:
      h.n_trees = 200;
      h.max_depth = 20;
      break;
    case LearnerKind::Gbm:
      h.n_trees = 200;
      break;
    case LearnerKind::XgbStyle:
      h.n_trees = 180;
      break;
  }
  return h;
}

SamplingMode default_sampling(LearnerKind kind) {
  return kind == LearnerKind::Gbm || kind == LearnerKind::XgbStyle ? SamplingMode::None : SamplingMode::Undersample;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Tree::predict over a column-major row, without copying it out.
double predict_column_major(const Tree& tree, const TrainingMatrix& x, std::size_t i) {
  std::size_t k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const auto& n = tree.nodes[k];
    const double v = x.columns[static_cast<std::size_t>(n.feature)][i];
    bool left;
    if (n.categorical) {
      const auto code = static_cast<std::int64_t>(v);
      left = v >= 0 && code < static_cast<std::int64_t>(kMaxCategoryCodes) && ((n.left_categories >> code) & 1u);
    } else {
      left = v <= n.threshold;
    }
    k = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return tree.nodes[k].value;
}

std::vector<FeatureColumn> resolve_schema(const FeatureMatrix& m) {
  std::vector<FeatureColumn> schema;
  schema.reserve(m.column_count());
  for (const auto& c : m.columns()) {
    FeatureColumn s;
    s.name = c.name;
    s.kind = c.kind;
    s.categories = c.categories;
    if (c.kind == FeatureKind::Categorical && s.categories.empty()) {
      for (const auto& v : c.labels) {
        if (v) s.categories.push_back(*v);
      }
      std::sort(s.categories.begin(), s.categories.end());
      s.categories.erase(std::unique(s.categories.begin(), s.categories.end()), s.categories.end());
    }
    schema.push_back(std::move(s));
  }
  return schema;
}

std::string hash_of(const std::vector<FeatureColumn>& schema) {
  FeatureMatrix shell;
  for (const auto& c : schema) shell.columns().push_back(c);
  return schema_hash(shell);
}

struct Prepared {
  std::vector<FeatureColumn> schema;
  TrainingMatrix x;
  std::vector<double> y;
  std::vector<std::uint32_t> all_rows;
};

Prepared prepare(const LabeledDataset& train) {
  if (train.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty training set");
  if (train.matrix.row_count() != train.size()) throw Error(ErrorCode::InvalidArgument, "labels do not match rows");
  Prepared p;
  p.schema = resolve_schema(train.matrix);
  p.x = encode(train.matrix, p.schema);
  p.y.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) p.y[i] = train.labels[i] == Label::Churn ? 1.0 : 0.0;
  p.all_rows.resize(train.size());
  std::iota(p.all_rows.begin(), p.all_rows.end(), 0u);
  return p;
}

TrainedModel shell_model(LearnerKind kind, const Hyperparameters& h, Prepared& p) {
  TrainedModel model;
  model.kind = kind;
  model.hyperparameters = h;
  model.schema = p.schema;
  model.schema_hash = hash_of(p.schema);
  model.feature_gain.assign(p.schema.size(), 0.0);
  return model;
}

void add_gain(std::vector<double>& total, const std::vector<double>& gain) {
  for (std::size_t f = 0; f < total.size(); ++f) total[f] += gain[f];
}

/// Boosted models may have zero trees (they then predict the prior).
void check(const Hyperparameters& h, int min_trees = 1) {
  if (h.n_trees < min_trees) {
    throw Error(ErrorCode::InvalidArgument, "n_trees must be >= " + std::to_string(min_trees));
  }
  if (h.max_depth < 0) throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 0");
  if (!(h.learning_rate > 0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
  if (h.lambda < 0 || h.gamma < 0 || h.min_child_weight < 0) {
    throw Error(ErrorCode::InvalidArgument, "lambda, gamma and min_child_weight must be non-negative");
  }
  if (h.max_features < 0 || h.max_features > 1) throw Error(ErrorCode::InvalidArgument, "max_features must be in [0,1]");
}

double log_loss(const std::vector<double>& y, const std::vector<double>& margin) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log(1 + e^-m) for positives, log(1 + e^m) for negatives, in a stable form
    const double m = y[i] > 0.5 ? margin[i] : -margin[i];
    total += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return total / static_cast<double>(y.size());
}

enum class Boost { Gradient, SecondOrder };

TrainedModel train_boosted(const LabeledDataset& train, const Hyperparameters& h, Boost mode, TrainingTrace* trace) {
  check(h, 0);
  Prepared p = prepare(train);
  const LearnerKind kind = mode == Boost::Gradient ? LearnerKind::Gbm : LearnerKind::XgbStyle;
  TrainedModel model = shell_model(kind, h, p);
  const double n = static_cast<double>(p.y.size());
  const double positives = std::accumulate(p.y.begin(), p.y.end(), 0.0);
  const double prior = std::clamp(positives / n, 1e-6, 1 - 1e-6);
  model.base_score = std::log(prior / (1 - prior));
  model.learning_rate = h.learning_rate;

  const FeatureIndex index(p.x);
  GrowthParams gp;
  gp.criterion = mode == Boost::Gradient ? SplitCriterion::SquaredError : SplitCriterion::SecondOrder;
  gp.max_depth = h.max_depth;
  gp.max_nodes = h.max_nodes;
  gp.min_child_weight = h.min_child_weight;
  gp.lambda = h.lambda;
  gp.gamma = h.gamma;
  const double lambda = h.lambda;
  const std::function<double(const RowStat&)> leaf =
      mode == Boost::Gradient
          ? std::function<double(const RowStat&)>([](const RowStat& s) { return s.b > 0 ? s.a / s.b : 0.0; })
          : std::function<double(const RowStat&)>([lambda](const RowStat& s) { return -s.a / (s.b + lambda); });

  std::vector<double> margin(p.y.size(), model.base_score);
  std::vector<RowStat> stats(p.y.size());
  if (trace) trace->loss.assign(1, log_loss(p.y, margin));
  for (int t = 0; t < h.n_trees; ++t) {
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      const double prob = sigmoid(margin[i]);
      const double hess = prob * (1 - prob);
      stats[i] = mode == Boost::Gradient ? RowStat{1.0, p.y[i] - prob, hess} : RowStat{1.0, prob - p.y[i], hess};
    }
    auto grown = grow_tree(index, stats, p.all_rows, gp, leaf);
    for (std::size_t i = 0; i < p.y.size(); ++i) {
      margin[i] += h.learning_rate * predict_column_major(grown.tree, p.x, i);
    }
    add_gain(model.feature_gain, grown.feature_gain);
    model.trees.push_back(std::move(grown.tree));
    if (trace) trace->loss.push_back(log_loss(p.y, margin));
  }
  return model;
}

nlohmann::json node_json(const TreeNode& n) {
  if (n.is_leaf()) return {{"v", n.value}};
  nlohmann::json j = {{"f", n.feature}, {"l", n.left}, {"r", n.right}, {"v", n.value}};
  if (n.categorical) {
    j["mask"] = n.left_categories;
  } else {
    j["t"] = n.threshold;
  }
  return j;
}

TreeNode node_from(const nlohmann::json& j) {
  TreeNode n;
  n.value = j.at("v").get<double>();
  if (!j.contains("f")) return n;
  n.feature = j.at("f").get<std::int32_t>();
  n.left = j.at("l").get<std::int32_t>();
  n.right = j.at("r").get<std::int32_t>();
  if (j.contains("mask")) {
    n.categorical = true;
    n.left_categories = j.at("mask").get<std::uint64_t>();
  } else {
    n.threshold = j.at("t").get<double>();
  }
  return n;
}

constexpr int kModelFormat = 1;

}  // namespace

double TrainedModel::predict_row(std::span<const double> row) const {
  switch (kind) {
    case LearnerKind::DecisionTree: return trees.front().predict(row);
    case LearnerKind::RandomForest: {
      double sum = 0.0;
      for (const auto& t : trees) sum += t.predict(row);
      return sum / static_cast<double>(trees.size());
    }
    case LearnerKind::Gbm:
    case LearnerKind::XgbStyle: {
      double m = base_score;
      for (const auto& t : trees) m += learning_rate * t.predict(row);
      return sigmoid(m);
    }
  }
  return 0.0;
}

nlohmann::json TrainedModel::to_json() const {
  FeatureMatrix shell;
  for (const auto& c : schema) shell.columns().push_back(c);
  nlohmann::json tree_list = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back(node_json(n));
    tree_list.push_back(std::move(nodes));
  }
  return {{"format_version", kModelFormat},
          {"kind", std::string(churnforge::to_string(kind))},
          {"hyperparameters", hyperparameters},
          {"rng_seed", rng_seed},
          {"learning_rate", learning_rate},
          {"base_score", base_score},
          {"schema", schema_to_json(shell)},
          {"schema_hash", schema_hash},
          {"feature_gain", feature_gain},
          {"trees", tree_list}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormat) {
      throw Error(ErrorCode::Parse, "unsupported model format version");
    }
    TrainedModel m;
    m.kind = parse_learner_kind(j.at("kind").get<std::string>());
    m.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    for (const auto& c : j.at("schema").at("columns")) {
      FeatureColumn s;
      s.name = c.at("name").get<std::string>();
      s.kind = c.at("kind").get<std::string>() == "categorical" ? FeatureKind::Categorical : FeatureKind::Numeric;
      s.categories = c.at("categories").get<std::vector<std::string>>();
      m.schema.push_back(std::move(s));
    }
    m.schema_hash = j.at("schema_hash").get<std::string>();
    if (m.schema_hash != hash_of(m.schema)) throw Error(ErrorCode::SchemaMismatch, "model schema hash is stale");
    m.feature_gain = j.at("feature_gain").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) {
      Tree tree;
      for (const auto& n : t) tree.nodes.push_back(node_from(n));
      m.trees.push_back(std::move(tree));
    }
    const bool boosted = m.kind == LearnerKind::Gbm || m.kind == LearnerKind::XgbStyle;
    if (m.trees.empty() && !boosted) throw Error(ErrorCode::Parse, "model has no trees");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed model: ") + e.what());
  }
}

TrainedModel train_decision_tree(const LabeledDataset& train, const Hyperparameters& h) {
  check(h);
  Prepared p = prepare(train);
  TrainedModel model = shell_model(LearnerKind::DecisionTree, h, p);
  const FeatureIndex index(p.x);
  std::vector<RowStat> stats(p.y.size());
  for (std::size_t i = 0; i < p.y.size(); ++i) stats[i] = RowStat{1.0, p.y[i], 0.0};
  GrowthParams gp;
  gp.criterion = SplitCriterion::Gini;
  gp.max_depth = h.max_depth;
  gp.max_nodes = h.max_nodes;
  gp.min_child_weight = h.min_child_weight;
  gp.allow_zero_gain = true;
  auto grown = grow_tree(index, stats, p.all_rows, gp, [](const RowStat& s) { return s.w > 0 ? s.a / s.w : 0.0; });
  model.feature_gain = std::move(grown.feature_gain);
  model.trees.push_back(std::move(grown.tree));
  return model;
}

TrainedModel train_random_forest(const LabeledDataset& train, const Hyperparameters& h, std::uint64_t seed,
                                 unsigned threads) {
  check(h);
  Prepared p = prepare(train);
  TrainedModel model = shell_model(LearnerKind::RandomForest, h, p);
  model.rng_seed = seed;
  const FeatureIndex index(p.x);
  const std::size_t n = p.y.size();
  const std::size_t features = p.x.features();

  GrowthParams gp;
  gp.criterion = SplitCriterion::Gini;
  gp.max_depth = h.max_depth;
  gp.max_nodes = h.max_nodes;
  gp.min_child_weight = h.min_child_weight;
  gp.allow_zero_gain = true;
  gp.features_per_split =
      h.max_features == 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(features))))
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(h.max_features * static_cast<double>(features))));

  std::vector<GrowthResult> grown(static_cast<std::size_t>(h.n_trees));
  parallel_for(grown.size(), threads, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(seed, "rf_tree", t));
    std::vector<double> multiplicity(n, 1.0);
    if (h.bootstrap) {
      std::fill(multiplicity.begin(), multiplicity.end(), 0.0);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t i = 0; i < n; ++i) multiplicity[pick(rng)] += 1.0;
    }
    std::vector<RowStat> stats(n);
    std::vector<std::uint32_t> rows;
    for (std::uint32_t i = 0; i < n; ++i) {
      stats[i] = RowStat{multiplicity[i], multiplicity[i] * p.y[i], 0.0};
      if (multiplicity[i] > 0) rows.push_back(i);
    }
    grown[t] = grow_tree(index, stats, rows, gp, [](const RowStat& s) { return s.w > 0 ? s.a / s.w : 0.0; }, &rng);
  });
  for (auto& g : grown) {
    add_gain(model.feature_gain, g.feature_gain);
    model.trees.push_back(std::move(g.tree));
  }
  return model;
}

TrainedModel train_gbm(const LabeledDataset& train, const Hyperparameters& h, TrainingTrace* trace) {
  return train_boosted(train, h, Boost::Gradient, trace);
}

TrainedModel train_xgb_style(const LabeledDataset& train, const Hyperparameters& h, TrainingTrace* trace) {
  return train_boosted(train, h, Boost::SecondOrder, trace);
}

TrainedModel train(const LabeledDataset& ds, LearnerKind kind, const Hyperparameters& h, std::uint64_t seed,
                   unsigned threads) {
  TrainedModel m;
  switch (kind) {
    case LearnerKind::DecisionTree: m = train_decision_tree(ds, h); break;
    case LearnerKind::RandomForest: m = train_random_forest(ds, h, seed, threads); break;
    case LearnerKind::Gbm: m = train_gbm(ds, h); break;
    case LearnerKind::XgbStyle: m = train_xgb_style(ds, h); break;
  }
  m.rng_seed = seed;
  return m;
}

std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& m) {
  const auto schema = resolve_schema(m);
  if (hash_of(schema) != model.schema_hash) {
    throw Error(ErrorCode::SchemaMismatch, "feature schema differs from the model's training schema");
  }
  const TrainingMatrix x = encode(m, model.schema);
  std::vector<double> out(x.rows());
  std::vector<double> row(x.features());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t f = 0; f < x.features(); ++f) row[f] = x.columns[f][i];
    out[i] = model.predict_row(row);
  }
  return out;
}

namespace {

/// Row indices per class, each ordered by id, then shuffled with the stage seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> shuffled_classes(std::span<const std::string> ids,
                                                                               std::span<const Label> labels,
                                                                               std::uint64_t seed) {
  if (ids.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "ids and labels differ in length");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  std::vector<std::size_t> churn, active;
  for (auto i : order) (labels[i] == Label::Churn ? churn : active).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(churn.begin(), churn.end(), rng);
  std::shuffle(active.begin(), active.end(), rng);
  return {std::move(churn), std::move(active)};
}

}  // namespace

SplitIndices split_indices(std::span<const std::string> ids, std::span<const Label> labels, double fraction,
                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0,1)");
  auto [churn, active] = shuffled_classes(ids, labels, derive_seed(seed, "split"));
  if (churn.size() < 2 || active.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "each class needs at least two rows to split");
  }
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size())));
  const auto churn_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(churn.size()))), 1, churn.size() - 1);
  const auto active_train = std::clamp<std::size_t>(total > churn_train ? total - churn_train : 0, 1, active.size() - 1);

  SplitIndices s;
  s.train.assign(churn.begin(), churn.begin() + static_cast<std::ptrdiff_t>(churn_train));
  s.train.insert(s.train.end(), active.begin(), active.begin() + static_cast<std::ptrdiff_t>(active_train));
  s.test.assign(churn.begin() + static_cast<std::ptrdiff_t>(churn_train), churn.end());
  s.test.insert(s.test.end(), active.begin() + static_cast<std::ptrdiff_t>(active_train), active.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::pair<LabeledDataset, LabeledDataset> split_train_test(const LabeledDataset& ds, double fraction,
                                                           std::uint64_t seed) {
  const auto s = split_indices(ds.matrix.ids(), ds.labels, fraction, seed);
  return {ds.select_rows(s.train), ds.select_rows(s.test)};
}

LabeledDataset resample(const LabeledDataset& train, SamplingMode mode, std::uint64_t seed) {
  if (mode == SamplingMode::None) return train;
  std::vector<std::size_t> churn, active;
  for (std::size_t i = 0; i < train.size(); ++i) (train.labels[i] == Label::Churn ? churn : active).push_back(i);
  if (churn.empty() || active.empty()) throw Error(ErrorCode::InvalidArgument, "resampling needs both classes");
  const bool churn_minor = churn.size() <= active.size();
  const auto& minor = churn_minor ? churn : active;
  const auto& major = churn_minor ? active : churn;
  std::mt19937_64 rng(derive_seed(seed, "resample"));

  std::vector<std::size_t> rows;
  if (mode == SamplingMode::Oversample) {
    rows.resize(train.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::uniform_int_distribution<std::size_t> pick(0, minor.size() - 1);
    for (std::size_t k = minor.size(); k < major.size(); ++k) rows.push_back(minor[pick(rng)]);
  } else {
    std::vector<std::size_t> pool = major;
    for (std::size_t i = 0; i < minor.size(); ++i) {
      std::uniform_int_distribution<std::size_t> d(i, pool.size() - 1);
      std::swap(pool[i], pool[d(rng)]);
    }
    pool.resize(minor.size());
    rows = minor;
    rows.insert(rows.end(), pool.begin(), pool.end());
    std::sort(rows.begin(), rows.end());
  }
  return train.select_rows(rows);
}

std::vector<int> stratified_folds(std::span<const std::string> ids, std::span<const Label> labels, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
  auto [churn, active] = shuffled_classes(ids, labels, derive_seed(seed, "folds"));
  std::vector<int> fold(ids.size(), 0);
  for (std::size_t i = 0; i < churn.size(); ++i) fold[churn[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  // Continue the rotation so fold sizes stay balanced overall.
  for (std::size_t i = 0; i < active.size(); ++i) {
    fold[active[i]] = static_cast<int>((churn.size() + i) % static_cast<std::size_t>(k));
  }
  return fold;
}

nlohmann::json CvResult::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"params", p.params}, {"fold_aucs", p.fold_aucs}, {"mean_auc", p.mean_auc}});
  }
  return {{"best", best}, {"best_fold_aucs", best_fold_aucs}, {"points", pts}};
}

CvResult cross_validate(const LabeledDataset& ds, LearnerKind kind, std::span<const Hyperparameters> grid, int k,
                        SamplingMode sampling, std::uint64_t seed, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty hyperparameter grid");
  if (k < 2 || static_cast<std::size_t>(k) > std::min(ds.count(Label::Churn), ds.count(Label::Active))) {
    throw Error(ErrorCode::InvalidArgument, "fold count must be in [2, minority class size]");
  }
  const auto folds = stratified_folds(ds.matrix.ids(), ds.labels, k, seed);
  CvResult result;
  for (const auto& params : grid) {
    GridPointResult point;
    point.params = params;
    for (int f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
      const auto fold_train = resample(ds.select_rows(train_rows), sampling, derive_seed(seed, "cv_resample", f));
      const auto fold_test = ds.select_rows(test_rows);
      const auto model = train(fold_train, kind, params, derive_seed(seed, "cv_train", f), threads);
      const auto scores = predict(model, fold_test.matrix);
      point.fold_aucs.push_back(roc_auc(scores, fold_test.labels).auc);
    }
    point.mean_auc = std::accumulate(point.fold_aucs.begin(), point.fold_aucs.end(), 0.0) / k;
    result.points.push_back(std::move(point));
  }
  const GridPointResult* best = &result.points.front();
  for (const auto& p : result.points) {
    const bool better = p.mean_auc > best->mean_auc ||
                        (p.mean_auc == best->mean_auc &&
                         (p.params.n_trees < best->params.n_trees ||
                          (p.params.n_trees == best->params.n_trees && p.params.max_depth < best->params.max_depth)));
    if (better) best = &p;
  }
  result.best = best->params;
  result.best_fold_aucs = best->fold_aucs;
  return result;
}

}  // namespace churnforge
