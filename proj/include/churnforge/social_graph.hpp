#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "churnforge/records.hpp"
#include "churnforge/time.hpp"

namespace churnforge {

enum class WeightScheme : std::uint8_t { Duration, EventCount, MeanOfBoth };

std::string_view to_string(WeightScheme scheme) noexcept;

/// Raw per-pair interaction totals.
struct EdgeTally {
  double duration_s = 0.0;
  double event_count = 0.0;
};

/// Weighted directed customer graph. Nodes are kept sorted by CustomerId and
/// edges sorted by (src, dst), so equal inputs always give identical layouts.
class SocialGraph {
 public:
  struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    EdgeTally tally;
    double weight = 0.0;
  };

  struct InputEdge {
    CustomerId src;
    CustomerId dst;
    EdgeTally tally;
  };

  SocialGraph() = default;
  /// Self-loops are dropped and repeated pairs are summed. Every endpoint and
  /// every entry of `nodes` becomes a node.
  SocialGraph(std::vector<CustomerId> nodes, std::span<const InputEdge> edges, WeightScheme scheme);

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const CustomerId& node(std::uint32_t i) const { return nodes_[i]; }
  const std::vector<CustomerId>& nodes() const noexcept { return nodes_; }
  std::optional<std::uint32_t> index_of(const CustomerId& id) const;

  std::span<const Edge> edges() const noexcept { return edges_; }
  /// Edge indices leaving / entering node i, ordered by the other endpoint.
  std::span<const std::uint32_t> out_edges(std::uint32_t i) const;
  std::span<const std::uint32_t> in_edges(std::uint32_t i) const;
  /// Undirected friend set N(i): union of in- and out-neighbours, sorted.
  std::span<const std::uint32_t> neighbors(std::uint32_t i) const;

  WeightScheme scheme() const noexcept { return scheme_; }
  double out_weight(std::uint32_t i) const noexcept { return out_weight_[i]; }

  SocialGraph with_scheme(WeightScheme scheme) const;
  /// Every edge n->m becomes m->n with the same tally.
  SocialGraph reversed() const;
  /// Multiplies every tally by `factor` (> 0).
  SocialGraph scaled(double factor) const;

 private:
  void finalize();

  WeightScheme scheme_ = WeightScheme::EventCount;
  std::vector<CustomerId> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> out_offsets_, out_index_;
  std::vector<std::uint32_t> in_offsets_, in_index_;
  std::vector<std::uint32_t> nbr_offsets_, nbr_index_;
  std::vector<double> out_weight_;
  std::unordered_map<CustomerId, std::uint32_t, CustomerIdHash> lookup_;
};

/// CALL/SMS/MMS records inside `window` collapsed to per-pair tallies.
SocialGraph build_graph(std::span<const CdrRecord> records, const Window& window, WeightScheme scheme);

enum class RankKind : std::uint8_t { PageRank, SenderRank };

struct RankOptions {
  double damping = 0.85;
  double tolerance = 1e-8;
  int max_iterations = 100;
};

struct RankVector {
  RankKind kind = RankKind::PageRank;
  double damping = 0.85;
  std::vector<double> values;  // by node index
  int iterations = 0;
  /// L1 change of the final sweep.
  double residual = 0.0;
  /// False when max_iterations was reached before the tolerance.
  bool converged = true;
};

/// Weighted PageRank iterated from all-ones:
///   PR(m) = (1 - d) + d * sum_{n -> m} W(n->m) / out_weight(n) * PR(n).
/// Nodes with zero out-weight pass no rank on. Throws Error(InvalidArgument)
/// unless 0 < d < 1 and tolerance > 0.
RankVector pagerank(const SocialGraph& g, const RankOptions& options = {});
/// PageRank of the edge-reversed graph.
RankVector senderrank(const SocialGraph& g, const RankOptions& options = {});

struct Degree {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  friend bool operator==(const Degree&, const Degree&) = default;
};

std::vector<Degree> degrees(const SocialGraph& g);
/// Mean |N(k)| over k in N(m); 0 for isolated nodes.
std::vector<double> neighbor_connectivity(const SocialGraph& g);
/// sum_{k in N(m)} |N(m) ∩ N(k)| / (|N(m)| (|N(m)| - 1)); 0 when |N(m)| <= 1.
std::vector<double> local_clustering(const SocialGraph& g);
/// Exact shortest-path betweenness on the undirected skeleton, counting each
/// unordered pair once.
std::vector<double> betweenness(const SocialGraph& g, unsigned threads = 1);

struct SimilarityMaxima {
  double max_jaccard_home = 0.0;
  double max_jaccard_competitor = 0.0;
  double max_cosine_home = 0.0;
  double max_cosine_competitor = 0.0;
  friend bool operator==(const SimilarityMaxima&, const SimilarityMaxima&) = default;
};

/// Best Jaccard and cosine similarity of each node against HOME and COMPETITOR
/// candidates that share at least one friend with it. Uses the operator
/// recorded in each node's CustomerId as the partition.
std::vector<SimilarityMaxima> top_similarities(const SocialGraph& g);
/// Same, with an explicit partition (nullopt excludes the node as a candidate).
std::vector<SimilarityMaxima> top_similarities(const SocialGraph& g,
                                               std::span<const std::optional<Operator>> partition);

struct SnaFeatureRow {
  CustomerId id;
  std::uint32_t in_degree = 0;
  std::uint32_t out_degree = 0;
  double pr_duration = 0.0, sr_duration = 0.0;
  double pr_event_count = 0.0, sr_event_count = 0.0;
  double pr_mean = 0.0, sr_mean = 0.0;
  double neighbor_connectivity = 0.0;
  double local_clustering = 0.0;
  double betweenness = 0.0;
  double power_factor = 0.0;
  double max_jaccard_home = 0.0;
  double max_jaccard_competitor = 0.0;
  double max_cosine_home = 0.0;
  double max_cosine_competitor = 0.0;

  friend bool operator==(const SnaFeatureRow&, const SnaFeatureRow&) = default;
};

/// Column names after `id`, in CSV order.
const std::vector<std::string>& sna_feature_names();
std::vector<double> sna_feature_values(const SnaFeatureRow& row);
/// Feature values of a customer absent from the graph.
SnaFeatureRow isolated_sna_row(const CustomerId& id, double damping);

struct SnaConfig {
  RankOptions rank;
  unsigned threads = 1;
};

struct SnaResult {
  std::vector<SnaFeatureRow> rows;  // one per HOME node, sorted by id
  /// Rank runs that hit max_iterations, as "pagerank/DURATION" style tags.
  std::vector<std::string> unconverged;
};

SnaResult sna_features(std::span<const CdrRecord> records, const Window& window, const SnaConfig& config);

void write_sna_csv(std::ostream& out, std::span<const SnaFeatureRow> rows);
std::vector<SnaFeatureRow> read_sna_csv(std::istream& in);
/// `src,dst,duration_s,event_count`
void write_edge_list(std::ostream& out, const SocialGraph& g);

}  // namespace churnforge
