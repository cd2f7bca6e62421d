#include "churnforge/social_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "churnforge/error.hpp"
#include "churnforge/util.hpp"

namespace churnforge {

std::string_view to_string(WeightScheme scheme) noexcept {
  switch (scheme) {
    case WeightScheme::Duration: return "DURATION";
    case WeightScheme::EventCount: return "EVENT_COUNT";
    case WeightScheme::MeanOfBoth: return "MEAN_OF_BOTH";
  }
  return "?";
}

SocialGraph::SocialGraph(std::vector<CustomerId> nodes, std::span<const InputEdge> edges, WeightScheme scheme)
    : scheme_(scheme), nodes_(std::move(nodes)) {
  for (const auto& e : edges) {
    nodes_.push_back(e.src);
    nodes_.push_back(e.dst);
  }
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  lookup_.reserve(nodes_.size());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) lookup_.emplace(nodes_[i], i);

  std::vector<std::pair<std::uint64_t, EdgeTally>> keyed;
  keyed.reserve(edges.size());
  for (const auto& e : edges) {
    const auto s = lookup_.at(e.src);
    const auto d = lookup_.at(e.dst);
    if (s == d) continue;
    keyed.emplace_back((static_cast<std::uint64_t>(s) << 32) | d, e.tally);
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, tally] : keyed) {
    const auto s = static_cast<std::uint32_t>(key >> 32);
    const auto d = static_cast<std::uint32_t>(key & 0xffffffffu);
    if (!edges_.empty() && edges_.back().src == s && edges_.back().dst == d) {
      edges_.back().tally.duration_s += tally.duration_s;
      edges_.back().tally.event_count += tally.event_count;
    } else {
      edges_.push_back(Edge{s, d, tally, 0.0});
    }
  }
  finalize();
}

void SocialGraph::finalize() {
  const std::size_t n = nodes_.size();
  double max_duration = 0.0, max_events = 0.0;
  for (const auto& e : edges_) {
    if (e.tally.duration_s < 0 || e.tally.event_count < 0) {
      throw Error(ErrorCode::InvalidArgument, "negative edge tally");
    }
    max_duration = std::max(max_duration, e.tally.duration_s);
    max_events = std::max(max_events, e.tally.event_count);
  }
  auto norm = [](double v, double max) { return max > 0.0 ? v / max : 0.0; };
  for (auto& e : edges_) {
    switch (scheme_) {
      case WeightScheme::Duration: e.weight = norm(e.tally.duration_s, max_duration); break;
      case WeightScheme::EventCount: e.weight = norm(e.tally.event_count, max_events); break;
      case WeightScheme::MeanOfBoth:
        e.weight = 0.5 * (norm(e.tally.duration_s, max_duration) + norm(e.tally.event_count, max_events));
        break;
    }
  }

  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++out_offsets_[e.src + 1];
    ++in_offsets_[e.dst + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  out_index_.resize(edges_.size());
  in_index_.resize(edges_.size());
  {
    auto out_pos = out_offsets_;
    auto in_pos = in_offsets_;
    // edges_ is sorted by (src, dst), so both lists come out ordered by the other endpoint
    // once in-lists are filled in src order.
    for (std::uint32_t k = 0; k < edges_.size(); ++k) out_index_[out_pos[edges_[k].src]++] = k;
    for (std::uint32_t k = 0; k < edges_.size(); ++k) in_index_[in_pos[edges_[k].dst]++] = k;
  }

  out_weight_.assign(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (auto k : out_edges(i)) out_weight_[i] += edges_[k].weight;
  }

  std::vector<std::vector<std::uint32_t>> nbrs(n);
  for (const auto& e : edges_) {
    nbrs[e.src].push_back(e.dst);
    nbrs[e.dst].push_back(e.src);
  }
  nbr_offsets_.assign(n + 1, 0);
  nbr_index_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    auto& v = nbrs[i];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    nbr_index_.insert(nbr_index_.end(), v.begin(), v.end());
    nbr_offsets_[i + 1] = static_cast<std::uint32_t>(nbr_index_.size());
  }
}

std::optional<std::uint32_t> SocialGraph::index_of(const CustomerId& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::uint32_t> SocialGraph::out_edges(std::uint32_t i) const {
  return {out_index_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
}

std::span<const std::uint32_t> SocialGraph::in_edges(std::uint32_t i) const {
  return {in_index_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
}

std::span<const std::uint32_t> SocialGraph::neighbors(std::uint32_t i) const {
  return {nbr_index_.data() + nbr_offsets_[i], nbr_offsets_[i + 1] - nbr_offsets_[i]};
}

SocialGraph SocialGraph::with_scheme(WeightScheme scheme) const {
  SocialGraph g = *this;
  g.scheme_ = scheme;
  g.finalize();
  return g;
}

SocialGraph SocialGraph::reversed() const {
  std::vector<InputEdge> input;
  input.reserve(edges_.size());
  for (const auto& e : edges_) input.push_back(InputEdge{nodes_[e.dst], nodes_[e.src], e.tally});
  return SocialGraph(nodes_, input, scheme_);
}

SocialGraph SocialGraph::scaled(double factor) const {
  if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale factor must be positive");
  SocialGraph g = *this;
  for (auto& e : g.edges_) {
    e.tally.duration_s *= factor;
    e.tally.event_count *= factor;
  }
  g.finalize();
  return g;
}

SocialGraph build_graph(std::span<const CdrRecord> records, const Window& window, WeightScheme scheme) {
  std::vector<SocialGraph::InputEdge> edges;
  std::vector<CustomerId> nodes;
  for (const auto& r : records) {
    if (!r.is_interaction() || !r.callee || !window.contains(r.timestamp)) continue;
    if (r.caller == *r.callee) {
      nodes.push_back(r.caller);
      continue;
    }
    edges.push_back({r.caller, *r.callee, EdgeTally{static_cast<double>(r.duration_s), 1.0}});
  }
  return SocialGraph(std::move(nodes), edges, scheme);
}

RankVector pagerank(const SocialGraph& g, const RankOptions& options) {
  const double d = options.damping;
  if (!(d > 0.0 && d < 1.0)) throw Error(ErrorCode::InvalidArgument, "damping must lie in (0,1)");
  if (!(options.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (options.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");

  const std::size_t n = g.node_count();
  RankVector rv;
  rv.kind = RankKind::PageRank;
  rv.damping = d;
  rv.values.assign(n, 1.0);
  if (n == 0) return rv;

  const auto edges = g.edges();
  std::vector<double> coef(edges.size(), 0.0);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const double out = g.out_weight(edges[k].src);
    coef[k] = out > 0.0 ? edges[k].weight / out : 0.0;
  }

  const double base = 1.0 - d;
  std::vector<double> next(n);
  rv.converged = false;
  for (int it = 1; it <= options.max_iterations; ++it) {
    double change = 0.0;
    for (std::uint32_t m = 0; m < n; ++m) {
      double sum = 0.0;
      for (auto k : g.in_edges(m)) sum += coef[k] * rv.values[edges[k].src];
      next[m] = base + d * sum;
      change += std::abs(next[m] - rv.values[m]);
    }
    rv.values.swap(next);
    rv.iterations = it;
    rv.residual = change;
    if (change < options.tolerance) {
      rv.converged = true;
      break;
    }
  }
  return rv;
}

RankVector senderrank(const SocialGraph& g, const RankOptions& options) {
  auto rv = pagerank(g.reversed(), options);
  rv.kind = RankKind::SenderRank;
  return rv;
}

std::vector<Degree> degrees(const SocialGraph& g) {
  std::vector<Degree> out(g.node_count());
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    out[i] = Degree{static_cast<std::uint32_t>(g.in_edges(i).size()),
                    static_cast<std::uint32_t>(g.out_edges(i).size())};
  }
  return out;
}

std::vector<double> neighbor_connectivity(const SocialGraph& g) {
  std::vector<double> nc(g.node_count(), 0.0);
  for (std::uint32_t m = 0; m < g.node_count(); ++m) {
    const auto nm = g.neighbors(m);
    if (nm.empty()) continue;
    double total = 0.0;
    for (auto k : nm) total += static_cast<double>(g.neighbors(k).size());
    nc[m] = total / static_cast<double>(nm.size());
  }
  return nc;
}

std::vector<double> local_clustering(const SocialGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> lc(n, 0.0);
  std::vector<char> mark(n, 0);
  for (std::uint32_t m = 0; m < n; ++m) {
    const auto nm = g.neighbors(m);
    if (nm.size() <= 1) continue;
    for (auto k : nm) mark[k] = 1;
    std::uint64_t shared = 0;
    for (auto k : nm) {
      for (auto j : g.neighbors(k)) shared += mark[j];
    }
    for (auto k : nm) mark[k] = 0;
    const double deg = static_cast<double>(nm.size());
    lc[m] = static_cast<double>(shared) / (deg * (deg - 1.0));
  }
  return lc;
}

namespace {

/// Undirected adjacency relabelled in BFS order, which keeps the per-source
/// working arrays cache-friendly.
struct LocalAdjacency {
  std::vector<std::uint32_t> offsets, targets;
  std::vector<std::uint32_t> original;  // local id -> graph node index
};

LocalAdjacency bfs_relabel(const SocialGraph& g) {
  const std::size_t n = g.node_count();
  LocalAdjacency a;
  std::vector<std::uint32_t> local(n, std::numeric_limits<std::uint32_t>::max());
  a.original.reserve(n);
  for (std::uint32_t root = 0; root < n; ++root) {
    if (local[root] != std::numeric_limits<std::uint32_t>::max()) continue;
    local[root] = static_cast<std::uint32_t>(a.original.size());
    a.original.push_back(root);
    for (std::size_t head = local[root]; head < a.original.size(); ++head) {
      for (auto w : g.neighbors(a.original[head])) {
        if (local[w] == std::numeric_limits<std::uint32_t>::max()) {
          local[w] = static_cast<std::uint32_t>(a.original.size());
          a.original.push_back(w);
        }
      }
    }
  }
  a.offsets.assign(n + 1, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto nb = g.neighbors(a.original[i]);
    a.offsets[i + 1] = a.offsets[i] + static_cast<std::uint32_t>(nb.size());
    for (auto w : nb) a.targets.push_back(local[w]);
    std::sort(a.targets.begin() + a.offsets[i], a.targets.end());
  }
  return a;
}

}  // namespace

std::vector<double> betweenness(const SocialGraph& g, unsigned threads) {
  const std::size_t n = g.node_count();
  const LocalAdjacency adj = bfs_relabel(g);
  // Sources are split into a fixed number of chunks whose partial sums are
  // added in chunk order, so the result does not depend on the thread count.
  constexpr std::size_t kChunks = 64;
  const std::size_t chunks = std::min(kChunks, std::max<std::size_t>(n, 1));
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(n, 0.0));

  parallel_for(chunks, threads, [&](std::size_t c) {
    auto& acc = partial[c];
    std::vector<std::int32_t> dist(n, -1);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    std::vector<std::uint32_t> order;
    // Shortest-path DAG edges (v, w) in BFS order; walking them backwards
    // visits every w before any of its predecessors.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dag;
    order.reserve(n);
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    for (std::size_t s = begin; s < end; ++s) {
      order.clear();
      dag.clear();
      dist[s] = 0;
      sigma[s] = 1.0;
      order.push_back(static_cast<std::uint32_t>(s));
      for (std::size_t head = 0; head < order.size(); ++head) {
        const auto v = order[head];
        const auto next = dist[v] + 1;
        for (auto k = adj.offsets[v]; k < adj.offsets[v + 1]; ++k) {
          const auto w = adj.targets[k];
          if (dist[w] < 0) {
            dist[w] = next;
            order.push_back(w);
          }
          if (dist[w] == next) {
            sigma[w] += sigma[v];
            dag.emplace_back(v, w);
          }
        }
      }
      for (auto it = dag.rbegin(); it != dag.rend(); ++it) {
        const auto [v, w] = *it;
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      for (auto v : order) {
        if (v != s) acc[v] += delta[v];
        dist[v] = -1;
        sigma[v] = 0.0;
        delta[v] = 0.0;
      }
    }
  });

  std::vector<double> bc(n, 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < n; ++i) bc[adj.original[i]] += p[i];
  }
  for (auto& v : bc) v *= 0.5;  // each unordered pair was counted from both ends
  return bc;
}

std::vector<SimilarityMaxima> top_similarities(const SocialGraph& g) {
  std::vector<std::optional<Operator>> partition(g.node_count());
  for (std::uint32_t i = 0; i < g.node_count(); ++i) {
    const auto op = g.node(i).op;
    if (op == Operator::Home || op == Operator::Competitor) partition[i] = op;
  }
  return top_similarities(g, partition);
}

std::vector<SimilarityMaxima> top_similarities(const SocialGraph& g,
                                               std::span<const std::optional<Operator>> partition) {
  const std::size_t n = g.node_count();
  if (partition.size() != n) throw Error(ErrorCode::InvalidArgument, "partition size differs from node count");
  std::vector<SimilarityMaxima> out(n);
  std::vector<std::uint32_t> shared(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t m = 0; m < n; ++m) {
    const auto nm = g.neighbors(m);
    if (nm.empty()) continue;
    touched.clear();
    for (auto f : nm) {
      for (auto k : g.neighbors(f)) {
        if (k == m) continue;
        if (shared[k]++ == 0) touched.push_back(k);
      }
    }
    auto& best = out[m];
    const double dm = static_cast<double>(nm.size());
    for (auto k : touched) {
      const double c = shared[k];
      shared[k] = 0;
      if (!partition[k]) continue;
      const double dk = static_cast<double>(g.neighbors(k).size());
      const double jaccard = c / (dm + dk - c);
      const double cosine = c / std::sqrt(dm * dk);
      if (*partition[k] == Operator::Home) {
        best.max_jaccard_home = std::max(best.max_jaccard_home, jaccard);
        best.max_cosine_home = std::max(best.max_cosine_home, cosine);
      } else if (*partition[k] == Operator::Competitor) {
        best.max_jaccard_competitor = std::max(best.max_jaccard_competitor, jaccard);
        best.max_cosine_competitor = std::max(best.max_cosine_competitor, cosine);
      }
    }
  }
  return out;
}

const std::vector<std::string>& sna_feature_names() {
  static const std::vector<std::string> names{
      "in_degree",        "out_degree",       "pr_duration",           "sr_duration",
      "pr_event_count",   "sr_event_count",   "pr_mean",               "sr_mean",
      "neighbor_connectivity", "local_clustering", "betweenness",      "power_factor",
      "max_jaccard_home", "max_jaccard_competitor", "max_cosine_home", "max_cosine_competitor"};
  return names;
}

std::vector<double> sna_feature_values(const SnaFeatureRow& r) {
  return {static_cast<double>(r.in_degree), static_cast<double>(r.out_degree),
          r.pr_duration, r.sr_duration, r.pr_event_count, r.sr_event_count, r.pr_mean, r.sr_mean,
          r.neighbor_connectivity, r.local_clustering, r.betweenness, r.power_factor,
          r.max_jaccard_home, r.max_jaccard_competitor, r.max_cosine_home, r.max_cosine_competitor};
}

SnaFeatureRow isolated_sna_row(const CustomerId& id, double damping) {
  SnaFeatureRow r;
  r.id = id;
  const double base = 1.0 - damping;
  r.pr_duration = r.sr_duration = r.pr_event_count = r.sr_event_count = r.pr_mean = r.sr_mean = base;
  r.power_factor = base;
  return r;
}

SnaResult sna_features(std::span<const CdrRecord> records, const Window& window, const SnaConfig& config) {
  SnaResult result;
  const SocialGraph base = build_graph(records, window, WeightScheme::MeanOfBoth);
  if (base.node_count() == 0) return result;

  struct SchemeRanks {
    RankVector pr, sr;
  };
  auto rank = [&](const SocialGraph& g) {
    SchemeRanks s{pagerank(g, config.rank), senderrank(g, config.rank)};
    for (const auto* rv : {&s.pr, &s.sr}) {
      if (!rv->converged) {
        result.unconverged.push_back(std::string(rv->kind == RankKind::PageRank ? "pagerank/" : "senderrank/") +
                                     std::string(to_string(g.scheme())));
      }
    }
    return s;
  };
  const auto by_duration = rank(base.with_scheme(WeightScheme::Duration));
  const auto by_events = rank(base.with_scheme(WeightScheme::EventCount));
  const auto by_mean = rank(base);

  const auto deg = degrees(base);
  const auto nc = neighbor_connectivity(base);
  const auto lc = local_clustering(base);
  const auto bc = betweenness(base, config.threads);
  const auto sims = top_similarities(base);

  for (std::uint32_t i = 0; i < base.node_count(); ++i) {
    if (base.node(i).op != Operator::Home) continue;
    SnaFeatureRow r;
    r.id = base.node(i);
    r.in_degree = deg[i].in;
    r.out_degree = deg[i].out;
    r.pr_duration = by_duration.pr.values[i];
    r.sr_duration = by_duration.sr.values[i];
    r.pr_event_count = by_events.pr.values[i];
    r.sr_event_count = by_events.sr.values[i];
    r.pr_mean = by_mean.pr.values[i];
    r.sr_mean = by_mean.sr.values[i];
    r.neighbor_connectivity = nc[i];
    r.local_clustering = lc[i];
    r.betweenness = bc[i];
    r.power_factor = 0.5 * (r.pr_mean + r.sr_mean);
    r.max_jaccard_home = sims[i].max_jaccard_home;
    r.max_jaccard_competitor = sims[i].max_jaccard_competitor;
    r.max_cosine_home = sims[i].max_cosine_home;
    r.max_cosine_competitor = sims[i].max_cosine_competitor;
    result.rows.push_back(std::move(r));
  }
  return result;
}

void write_sna_csv(std::ostream& out, std::span<const SnaFeatureRow> rows) {
  out << "id";
  for (const auto& name : sna_feature_names()) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << r.id.to_string() << ',' << r.in_degree << ',' << r.out_degree;
    const auto values = sna_feature_values(r);
    for (std::size_t k = 2; k < values.size(); ++k) out << ',' << format_double(values[k]);
    out << '\n';
  }
}

std::vector<SnaFeatureRow> read_sna_csv(std::istream& in) {
  std::vector<SnaFeatureRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  std::string expected = "id";
  for (const auto& name : sna_feature_names()) expected += "," + name;
  if (line != expected) throw Error(ErrorCode::Parse, "SNA feature header does not match");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != sna_feature_names().size() + 1) {
      throw ParseError(ErrorCode::Parse, line_no, "wrong SNA field count");
    }
    std::vector<double> v(f.size() - 1);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (!parse_double(f[k], v[k - 1])) throw ParseError(ErrorCode::Parse, line_no, "bad number '" + f[k] + "'");
    }
    SnaFeatureRow r;
    r.id = CustomerId::parse(f[0]);
    r.in_degree = static_cast<std::uint32_t>(v[0]);
    r.out_degree = static_cast<std::uint32_t>(v[1]);
    r.pr_duration = v[2];
    r.sr_duration = v[3];
    r.pr_event_count = v[4];
    r.sr_event_count = v[5];
    r.pr_mean = v[6];
    r.sr_mean = v[7];
    r.neighbor_connectivity = v[8];
    r.local_clustering = v[9];
    r.betweenness = v[10];
    r.power_factor = v[11];
    r.max_jaccard_home = v[12];
    r.max_jaccard_competitor = v[13];
    r.max_cosine_home = v[14];
    r.max_cosine_competitor = v[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_edge_list(std::ostream& out, const SocialGraph& g) {
  out << "src,dst,duration_s,event_count\n";
  for (const auto& e : g.edges()) {
    out << g.node(e.src).to_string() << ',' << g.node(e.dst).to_string() << ','
        << format_double(e.tally.duration_s) << ',' << format_double(e.tally.event_count) << '\n';
  }
}

}  // namespace churnforge
