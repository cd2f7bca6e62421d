#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "churnforge/feature_matrix.hpp"
#include "churnforge/records.hpp"
#include "churnforge/social_graph.hpp"
#include "oracles.hpp"

namespace fixtures {

inline churnforge::CustomerId node_id(const oracle::Digraph& g, int i) {
  const auto op = g.op.empty() ? churnforge::Operator::Home : static_cast<churnforge::Operator>(g.op[i]);
  char buf[16];
  std::snprintf(buf, sizeof buf, "n%03d", i);
  return {op, buf};
}

inline churnforge::SocialGraph to_graph(const oracle::Digraph& g, churnforge::WeightScheme scheme) {
  std::vector<churnforge::CustomerId> nodes;
  for (int i = 0; i < g.n; ++i) nodes.push_back(node_id(g, i));
  std::vector<churnforge::SocialGraph::InputEdge> edges;
  for (const auto& a : g.arcs) edges.push_back({node_id(g, a.src), node_id(g, a.dst), {a.duration, a.events}});
  return churnforge::SocialGraph(std::move(nodes), edges, scheme);
}

/// Library node index of every oracle node.
inline std::vector<std::uint32_t> index_map(const oracle::Digraph& g, const churnforge::SocialGraph& sg) {
  std::vector<std::uint32_t> map(g.n);
  for (int i = 0; i < g.n; ++i) map[i] = *sg.index_of(node_id(g, i));
  return map;
}

/// Numeric dataset with a noisy threshold concept on the first two features.
inline churnforge::LabeledDataset toy_dataset(std::size_t rows, std::size_t features, std::uint64_t seed,
                                              double churn_share = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows; ++i) ids.push_back("HOME:r" + std::to_string(i));
  churnforge::LabeledDataset ds;
  ds.matrix = churnforge::FeatureMatrix(ids);
  std::vector<std::vector<double>> cols(features, std::vector<double>(rows));
  for (auto& c : cols) {
    for (auto& v : c) v = std::round(noise(rng) * 1000) / 100;
  }
  std::bernoulli_distribution flip(0.1);
  for (std::size_t i = 0; i < rows; ++i) {
    const double z = cols[0][i] + (features > 1 ? 0.5 * cols[1][i] : 0.0);
    bool churn = z > 10.0 * (1.0 - 2 * churn_share);
    if (flip(rng)) churn = !churn;
    ds.labels.push_back(churn ? churnforge::Label::Churn : churnforge::Label::Active);
  }
  // Both classes must be present.
  ds.labels[0] = churnforge::Label::Churn;
  ds.labels[1] = churnforge::Label::Active;
  for (std::size_t f = 0; f < features; ++f) {
    ds.matrix.add_column(churnforge::FeatureColumn::numeric("f" + std::to_string(f), cols[f]));
  }
  return ds;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("churnforge-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
