#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hashlane/core.hpp"
#include "hashlane/error.hpp"

namespace hashlane {

struct ClusterSpec {
  std::size_t clusters = 10;
  std::size_t per_cluster = 100;
  std::size_t dim = 16;
  double spread = 0.05;
  std::uint64_t seed = 1;
  std::size_t queries_per_cluster = 0;
};

struct ClusterData {
  FeatureSet base;
  std::optional<FeatureSet> queries;
};

/// Gaussian blobs: cluster means uniform on [-1, 1]^d, isotropic spread,
/// label = cluster id. Items are laid out cluster by cluster. Queries, when
/// requested, come from the same means after all base items are drawn.
inline ClusterData make_clusters(const ClusterSpec& spec) {
  if (spec.clusters == 0 || spec.per_cluster == 0 || spec.dim == 0)
    fail(Errc::invalid_argument, "cluster count, cluster size and dimension must be positive");
  if (!(spec.spread >= 0.0)) fail(Errc::invalid_argument, "spread must be non-negative");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> means(spec.clusters * spec.dim);
  for (auto& m : means) m = uniform(rng);

  auto draw = [&](std::size_t per_cluster) {
    std::vector<float> values;
    std::vector<std::int32_t> labels;
    values.reserve(spec.clusters * per_cluster * spec.dim);
    for (std::size_t c = 0; c < spec.clusters; ++c)
      for (std::size_t i = 0; i < per_cluster; ++i) {
        for (std::size_t k = 0; k < spec.dim; ++k)
          values.push_back(static_cast<float>(means[c * spec.dim + k] + spec.spread * normal(rng)));
        labels.push_back(static_cast<std::int32_t>(c));
      }
    return FeatureSet(spec.clusters * per_cluster, spec.dim, std::move(values), std::move(labels));
  };

  ClusterData data{draw(spec.per_cluster), std::nullopt};
  if (spec.queries_per_cluster > 0) data.queries = draw(spec.queries_per_cluster);
  return data;
}

}  // namespace hashlane
