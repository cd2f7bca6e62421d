#include "churnforge/tree.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <memory>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "churnforge/error.hpp"

namespace churnforge {

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    const double v = row[static_cast<std::size_t>(n.feature)];
    bool left;
    if (n.categorical) {
      const auto code = static_cast<std::int64_t>(v);
      left = v >= 0 && code < static_cast<std::int64_t>(kMaxCategoryCodes) && ((n.left_categories >> code) & 1u);
    } else {
      left = v <= n.threshold;
    }
    i = static_cast<std::size_t>(left ? n.left : n.right);
  }
  return nodes[i].value;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

std::vector<double> TrainingMatrix::row(std::size_t i) const {
  std::vector<double> out(columns.size());
  for (std::size_t f = 0; f < columns.size(); ++f) out[f] = columns[f][i];
  return out;
}

TrainingMatrix encode(const FeatureMatrix& m, std::span<const FeatureColumn> schema) {
  if (schema.size() != m.column_count()) throw Error(ErrorCode::SchemaMismatch, "column count differs from schema");
  TrainingMatrix t;
  t.columns.resize(m.column_count());
  t.kinds.resize(m.column_count());
  for (std::size_t f = 0; f < m.column_count(); ++f) {
    const auto& c = m.column(f);
    const auto& s = schema[f];
    if (c.name != s.name || c.kind != s.kind) {
      throw Error(ErrorCode::SchemaMismatch, "column '" + c.name + "' does not match schema column '" + s.name + "'");
    }
    t.kinds[f] = c.kind;
    if (c.kind == FeatureKind::Numeric) {
      t.columns[f] = c.numbers;
      continue;
    }
    if (s.categories.size() > kMaxCategoryCodes) {
      throw Error(ErrorCode::InvalidArgument, "categorical column '" + c.name + "' has more than 64 categories");
    }
    std::unordered_map<std::string, double> code;
    for (std::size_t k = 0; k < s.categories.size(); ++k) code.emplace(s.categories[k], static_cast<double>(k));
    auto& out = t.columns[f];
    out.resize(c.labels.size(), -1.0);
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
      if (!c.labels[i]) continue;
      if (auto it = code.find(*c.labels[i]); it != code.end()) out[i] = it->second;
    }
  }
  return t;
}

TrainingMatrix encode(const FeatureMatrix& m) { return encode(m, m.columns()); }

FeatureIndex::FeatureIndex(const TrainingMatrix& m) : matrix_(&m) {
  const std::size_t n = m.rows();
  order_.resize(m.features());
  rank_.resize(m.features());
  for (std::size_t f = 0; f < m.features(); ++f) {
    auto& order = order_[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto& col = m.columns[f];
    std::stable_sort(order.begin(), order.end(), [&col](std::uint32_t a, std::uint32_t b) {
      // NaN sorts last.
      if (std::isnan(col[b])) return !std::isnan(col[a]);
      return col[a] < col[b];
    });
    auto& rank = rank_[f];
    rank.resize(n);
    for (std::uint32_t r = 0; r < n; ++r) rank[order[r]] = r;
  }
}

namespace {

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  std::int32_t feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::uint64_t mask = 0;

  bool valid() const noexcept { return feature >= 0; }
};

struct Pending {
  std::vector<std::uint32_t> rows;
  RowStat total;
  int depth = 0;
  std::size_t built = 0;  // index into the growth node list
  Candidate split;
};

struct GrowNode {
  TreeNode node;
  std::int64_t left = -1, right = -1;
};

class Grower {
 public:
  Grower(const FeatureIndex& index, std::span<const RowStat> stats, const GrowthParams& params,
         const std::function<double(const RowStat&)>& leaf_value, std::mt19937_64* rng)
      : index_(index),
        m_(index.matrix()),
        stats_(stats),
        params_(params),
        leaf_value_(leaf_value),
        rng_(rng),
        slot_(m_.rows(), -1),
        gain_(m_.features(), 0.0) {}

  GrowthResult run(std::span<const std::uint32_t> rows) {
    Pending root;
    root.rows.assign(rows.begin(), rows.end());
    for (auto r : root.rows) root.total += stats_[r];
    root.built = add_node(root.total);
    if (params_.max_nodes == 0) {
      grow_levelwise(std::move(root));
    } else {
      grow_best_first(std::move(root));
    }

    GrowthResult out;
    flatten(0, out.tree.nodes);
    out.feature_gain = std::move(gain_);
    return out;
  }

 private:
  // Without a node cap every acceptable split is eventually applied, so a
  // whole level can be evaluated in one pass over each feature.
  void grow_levelwise(Pending root) {
    std::vector<Pending> level;
    level.push_back(std::move(root));
    while (!level.empty()) {
      std::vector<Pending*> batch;
      for (auto& p : level) batch.push_back(&p);
      evaluate(batch);
      std::vector<Pending> next;
      for (auto& p : level) {
        if (!p.split.valid()) continue;
        auto [left, right] = apply(p);
        p.rows = {};
        next.push_back(std::move(left));
        next.push_back(std::move(right));
      }
      level = std::move(next);
    }
  }

  void grow_best_first(Pending root) {
    auto worse = [](const Pending* a, const Pending* b) {
      if (a->split.gain != b->split.gain) return a->split.gain < b->split.gain;
      return a->built > b->built;
    };
    std::vector<std::unique_ptr<Pending>> store;
    std::priority_queue<Pending*, std::vector<Pending*>, decltype(worse)> frontier(worse);
    auto push = [&](Pending p) {
      if (!p.split.valid()) return;
      store.push_back(std::make_unique<Pending>(std::move(p)));
      frontier.push(store.back().get());
    };
    evaluate({&root});
    push(std::move(root));
    while (!frontier.empty()) {
      Pending& p = *frontier.top();
      frontier.pop();
      if (nodes_.size() + 2 > params_.max_nodes) break;
      auto [left, right] = apply(p);
      p.rows = {};
      evaluate({&left, &right});
      push(std::move(left));
      push(std::move(right));
    }
  }

  std::size_t add_node(const RowStat& total) {
    GrowNode g;
    g.node.value = leaf_value_(total);
    nodes_.push_back(g);
    return nodes_.size() - 1;
  }

  std::int32_t flatten(std::size_t i, std::vector<TreeNode>& out) {
    const auto pos = static_cast<std::int32_t>(out.size());
    out.push_back(nodes_[i].node);
    if (nodes_[i].left >= 0) {
      const auto l = flatten(static_cast<std::size_t>(nodes_[i].left), out);
      const auto r = flatten(static_cast<std::size_t>(nodes_[i].right), out);
      out[static_cast<std::size_t>(pos)].left = l;
      out[static_cast<std::size_t>(pos)].right = r;
    }
    return pos;
  }

  double score(const RowStat& s) const {
    switch (params_.criterion) {
      case SplitCriterion::Gini: return s.w > 0 ? -s.w + (s.a * s.a + (s.w - s.a) * (s.w - s.a)) / s.w : 0.0;
      case SplitCriterion::SquaredError: return s.w > 0 ? s.a * s.a / s.w : 0.0;
      case SplitCriterion::SecondOrder: return 0.5 * s.a * s.a / (s.b + params_.lambda);
    }
    return 0.0;
  }

  bool child_ok(const RowStat& s) const {
    if (s.w <= 0) return false;
    const double weight = params_.criterion == SplitCriterion::SecondOrder ? s.b : s.w;
    return weight >= params_.min_child_weight;
  }

  bool impure(const RowStat& s) const {
    return params_.criterion != SplitCriterion::Gini || (s.a > 0 && s.a < s.w);
  }

  double split_gain(const RowStat& left, const RowStat& right, double parent_score) const {
    double g = score(left) + score(right) - parent_score;
    if (params_.criterion == SplitCriterion::SecondOrder) g -= params_.gamma;
    return g;
  }

  bool acceptable(double gain, const RowStat& total) const {
    if (gain > 0) return true;
    return params_.allow_zero_gain && impure(total) && gain >= -1e-12 * std::max(1.0, std::abs(score(total)));
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t p = m_.features();
    std::vector<std::size_t> feats(p);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    if (params_.features_per_split == 0 || params_.features_per_split >= p || !rng_) return feats;
    for (std::size_t i = 0; i < params_.features_per_split; ++i) {
      std::uniform_int_distribution<std::size_t> d(i, p - 1);
      std::swap(feats[i], feats[d(*rng_)]);
    }
    feats.resize(params_.features_per_split);
    std::sort(feats.begin(), feats.end());
    return feats;
  }

  /// Numeric candidates for one node, visited in (value, row) order.
  void scan_step(const std::vector<double>& col, const RowStat& total, double parent, std::size_t f,
                 std::int64_t& prev, RowStat& left, std::uint32_t r, Candidate& best) const {
    if (prev >= 0) {
      const double v = col[static_cast<std::size_t>(prev)];
      const double next = col[r];
      if (v < next) {  // skips equal values and the NaN boundary
        const RowStat right = total - left;
        if (child_ok(left) && child_ok(right)) {
          const double gain = split_gain(left, right, parent);
          if (gain > best.gain) {
            double threshold = v + (next - v) / 2;
            if (!(threshold < next)) threshold = v;
            best = Candidate{gain, static_cast<std::int32_t>(f), false, threshold, 0};
          }
        }
      }
    }
    left += stats_[r];
    prev = r;
  }

  // Features are visited in index order for every node, so ties resolve the
  // same way whether a node is scanned alone or with others.
  void evaluate(std::vector<Pending*> batch) {
    const std::size_t p_count = m_.features();
    std::vector<Pending*> live;
    std::vector<std::vector<char>> wants;
    for (auto* p : batch) {
      p->split = Candidate{};
      if (p->depth >= params_.max_depth || p->rows.size() < 2) continue;
      std::vector<char> w(p_count, 0);
      for (auto f : candidate_features()) w[f] = 1;
      live.push_back(p);
      wants.push_back(std::move(w));
    }
    if (live.empty()) return;
    const std::size_t k = live.size();
    std::vector<double> parent(k);
    std::vector<Candidate> best(k);
    double work = 0;
    for (std::size_t s = 0; s < k; ++s) {
      parent[s] = score(live[s]->total);
      const auto m = static_cast<double>(live[s]->rows.size());
      work += m * std::log2(m + 1.0);
    }
    const bool shared = work >= static_cast<double>(m_.rows());
    if (shared) {
      for (std::size_t s = 0; s < k; ++s) {
        for (auto r : live[s]->rows) slot_[r] = static_cast<std::int32_t>(s);
      }
    }
    std::vector<std::int64_t> prev(k);
    std::vector<RowStat> left(k);
    std::vector<std::uint32_t> sorted;
    for (std::size_t f = 0; f < p_count; ++f) {
      const auto& col = m_.columns[f];
      if (m_.kinds[f] == FeatureKind::Categorical) {
        for (std::size_t s = 0; s < k; ++s) {
          if (wants[s][f]) categorical_split(*live[s], f, parent[s], best[s]);
        }
        continue;
      }
      std::fill(prev.begin(), prev.end(), -1);
      std::fill(left.begin(), left.end(), RowStat{});
      if (shared) {
        for (auto r : index_.order(f)) {
          const auto s = slot_[r];
          if (s < 0 || !wants[static_cast<std::size_t>(s)][f]) continue;
          const auto u = static_cast<std::size_t>(s);
          scan_step(col, live[u]->total, parent[u], f, prev[u], left[u], r, best[u]);
        }
        continue;
      }
      const auto rank = index_.rank(f);
      const auto order = index_.order(f);
      for (std::size_t s = 0; s < k; ++s) {
        if (!wants[s][f]) continue;
        sorted.clear();
        for (auto r : live[s]->rows) sorted.push_back(rank[r]);
        std::sort(sorted.begin(), sorted.end());
        for (auto x : sorted) scan_step(col, live[s]->total, parent[s], f, prev[s], left[s], order[x], best[s]);
      }
    }
    if (shared) {
      for (auto* p : live) {
        for (auto r : p->rows) slot_[r] = -1;
      }
    }
    for (std::size_t s = 0; s < k; ++s) {
      if (best[s].valid() && acceptable(best[s].gain, live[s]->total)) live[s]->split = best[s];
    }
  }

  void categorical_split(const Pending& p, std::size_t f, double parent, Candidate& best) const {
    const auto& col = m_.columns[f];
    std::array<RowStat, kMaxCategoryCodes> per{};
    std::array<bool, kMaxCategoryCodes> seen{};
    for (auto r : p.rows) {
      const double v = col[r];
      if (!(v >= 0) || v >= static_cast<double>(kMaxCategoryCodes)) continue;
      const auto code = static_cast<std::size_t>(v);
      per[code] += stats_[r];
      seen[code] = true;
    }
    std::vector<std::size_t> codes;
    for (std::size_t k = 0; k < kMaxCategoryCodes; ++k) {
      if (seen[k]) codes.push_back(k);
    }
    if (codes.size() < 2) return;
    const bool second = params_.criterion == SplitCriterion::SecondOrder;
    auto key = [&](std::size_t k) {
      const auto& s = per[k];
      const double denom = second ? s.b + params_.lambda : s.w;
      return denom > 0 ? s.a / denom : 0.0;
    };
    std::stable_sort(codes.begin(), codes.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    RowStat left;
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i + 1 < codes.size(); ++i) {
      left += per[codes[i]];
      mask |= std::uint64_t{1} << codes[i];
      const RowStat right = p.total - left;
      if (!child_ok(left) || !child_ok(right)) continue;
      const double gain = split_gain(left, right, parent);
      if (gain > best.gain) best = Candidate{gain, static_cast<std::int32_t>(f), true, 0.0, mask};
    }
  }

  std::pair<Pending, Pending> apply(Pending& p) {
    const auto& s = p.split;
    const auto& col = m_.columns[static_cast<std::size_t>(s.feature)];
    Pending left, right;
    left.depth = right.depth = p.depth + 1;
    for (auto r : p.rows) {
      const double v = col[r];
      bool goes_left;
      if (s.categorical) {
        const auto code = static_cast<std::int64_t>(v);
        goes_left = v >= 0 && code < static_cast<std::int64_t>(kMaxCategoryCodes) && ((s.mask >> code) & 1u);
      } else {
        goes_left = v <= s.threshold;
      }
      (goes_left ? left : right).rows.push_back(r);
      (goes_left ? left.total : right.total) += stats_[r];
    }
    left.built = add_node(left.total);
    right.built = add_node(right.total);
    auto& node = nodes_[p.built];
    node.node.feature = s.feature;
    node.node.categorical = s.categorical;
    node.node.threshold = s.threshold;
    node.node.left_categories = s.mask;
    node.left = static_cast<std::int64_t>(left.built);
    node.right = static_cast<std::int64_t>(right.built);
    gain_[static_cast<std::size_t>(s.feature)] += s.gain;
    return {std::move(left), std::move(right)};
  }

  const FeatureIndex& index_;
  const TrainingMatrix& m_;
  std::span<const RowStat> stats_;
  const GrowthParams& params_;
  const std::function<double(const RowStat&)>& leaf_value_;
  std::mt19937_64* rng_;
  std::vector<std::int32_t> slot_;
  std::vector<double> gain_;
  std::vector<GrowNode> nodes_;
};

}  // namespace

GrowthResult grow_tree(const FeatureIndex& index, std::span<const RowStat> stats, std::span<const std::uint32_t> rows,
                       const GrowthParams& params, const std::function<double(const RowStat&)>& leaf_value,
                       std::mt19937_64* rng) {
  if (stats.size() != index.matrix().rows()) throw Error(ErrorCode::InvalidArgument, "one RowStat per row required");
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "cannot grow a tree on zero rows");
  return Grower(index, stats, params, leaf_value, rng).run(rows);
}

}  // namespace churnforge
