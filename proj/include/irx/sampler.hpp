#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irx/corpus.hpp"
#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx::sampler {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One row per report, TF-IDF weights over `vocabulary`, rows L2-normalized
// (all-zero rows stay zero).
template <typename Scalar = double>
struct FeatureMatrix {
  std::vector<std::string> report_ids;
  RowMatrix<Scalar> vectors;
  std::vector<std::string> vocabulary;

  Index rows() const { return vectors.rows(); }
};

struct VectorizeOptions {
  // Terms found in fewer documents are dropped. Clamped to the corpus size,
  // so a corpus smaller than min_df keeps every term.
  std::size_t min_df = 2;
  // Keep at most this many terms, highest document frequency first.
  std::size_t max_features = 4096;
};

// Text that is vectorized for a report: title, status and body.
inline std::vector<std::string> report_tokens(const IncidentReport& r) {
  return text::word_tokens(r.title + "\n" + r.status + "\n" + r.body_text);
}

// TF-IDF with
//   tf(t, d)  = count(t, d) / |d|            (|d| = token count of d)
//   idf(t)    = ln((1 + N) / (1 + df(t))) + 1
//   w(t, d)   = tf * idf, then each row scaled to unit L2 norm.
template <typename Scalar = double>
FeatureMatrix<Scalar> vectorize(const std::vector<IncidentReport>& reports,
                                const VectorizeOptions& opts = {}) {
  bool any_body = std::any_of(reports.begin(), reports.end(),
                              [](const IncidentReport& r) { return !text::trim(r.body_text).empty(); });
  if (reports.empty() || !any_body) throw SamplingError("cannot vectorize an empty corpus");

  const auto n = reports.size();
  std::vector<std::map<std::string, std::size_t>> counts(n);
  std::vector<std::size_t> lengths(n);
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < n; ++i) {
    auto toks = report_tokens(reports[i]);
    lengths[i] = toks.size();
    for (auto& t : toks) ++counts[i][t];
    for (auto& [t, _] : counts[i]) ++df[t];
  }

  const std::size_t min_df = std::min(opts.min_df, n);
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, d] : df)
    if (d >= min_df) kept.emplace_back(t, d);
  if (kept.size() > opts.max_features) {
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    kept.resize(opts.max_features);
    std::sort(kept.begin(), kept.end());
  }

  FeatureMatrix<Scalar> fm;
  fm.vocabulary.reserve(kept.size());
  std::map<std::string, Index> column;
  for (auto& [t, _] : kept) {
    column.emplace(t, static_cast<Index>(fm.vocabulary.size()));
    fm.vocabulary.push_back(t);
  }
  fm.vectors = RowMatrix<Scalar>::Zero(static_cast<Index>(n), static_cast<Index>(kept.size()));
  const double docs = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    fm.report_ids.push_back(reports[i].report_id);
    if (lengths[i] == 0) continue;
    for (auto& [t, c] : counts[i]) {
      auto it = column.find(t);
      if (it == column.end()) continue;
      double tf = static_cast<double>(c) / static_cast<double>(lengths[i]);
      double idf = std::log((1.0 + docs) / (1.0 + static_cast<double>(df[t]))) + 1.0;
      fm.vectors(static_cast<Index>(i), it->second) = static_cast<Scalar>(tf * idf);
    }
    auto norm = fm.vectors.row(static_cast<Index>(i)).norm();
    if (norm > Scalar(0)) fm.vectors.row(static_cast<Index>(i)) /= norm;
  }
  return fm;
}

template <typename Scalar = double>
struct ClusterAssignment {
  Index k = 0;
  std::vector<Index> labels;
  RowMatrix<Scalar> centroids;
  Scalar inertia = 0;
  std::uint64_t seed = 0;
  // Inertia after every assignment step; non-increasing.
  std::vector<Scalar> inertia_trace;
  int iterations = 0;
};

struct KMeansOptions {
  int max_iterations = 300;
};

// ceil(sqrt(N / 2)), at least 1.
Index default_k(Index n);

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform
// for a given mt19937_64 state.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

template <typename Derived, typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> squared_distances(const Eigen::MatrixBase<Derived>& points,
                                                           const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& c) {
  return (points.rowwise() - c).rowwise().squaredNorm();
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or max_iterations is reached. Deterministic for fixed inputs and
// seed. Ties go to the lowest centroid index. A cluster that empties out is
// re-seeded at the point farthest from its current centroid.
template <typename Derived>
ClusterAssignment<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, Index k,
                                                   std::uint64_t seed, const KMeansOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using ColVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index n = points.rows();
  const Index dim = points.cols();
  if (k <= 0) throw SamplingError("k must be positive");
  if (k > n)
    throw SamplingError("k = " + std::to_string(k) + " exceeds the number of rows (" +
                        std::to_string(n) + ")");

  std::mt19937_64 rng(seed);
  RowMatrix<Scalar> centroids(k, dim);
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  // k-means++ seeding.
  Index first = static_cast<Index>(detail::uniform01(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  ColVec closest = detail::squared_distances(points, RowVec(centroids.row(0)));
  for (Index c = 1; c < k; ++c) {
    double total = 0;
    for (Index i = 0; i < n; ++i) total += static_cast<double>(closest(i));
    Index pick = -1;
    if (total > 0) {
      double target = detail::uniform01(rng) * total;
      double acc = 0;
      for (Index i = 0; i < n; ++i) {
        if (closest(i) <= Scalar(0)) continue;
        acc += static_cast<double>(closest(i));
        pick = i;
        if (acc > target) break;
      }
    }
    if (pick < 0) {
      // Every remaining point coincides with a centroid.
      for (Index i = 0; i < n && pick < 0; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centroids.row(c) = points.row(pick);
    closest = closest.cwiseMin(detail::squared_distances(points, RowVec(centroids.row(c))));
  }

  ClusterAssignment<Scalar> out;
  out.k = k;
  out.seed = seed;
  std::vector<Index> labels(static_cast<std::size_t>(n), -1);
  ColVec dist(n);
  RowMatrix<Scalar> all_dist(n, k);

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // Assignment step.
    for (Index c = 0; c < k; ++c) all_dist.col(c) = detail::squared_distances(points, RowVec(centroids.row(c)));
    bool changed = false;
    Scalar inertia = 0;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      for (Index c = 1; c < k; ++c)
        if (all_dist(i, c) < all_dist(i, best)) best = c;
      if (labels[static_cast<std::size_t>(i)] != best) changed = true;
      labels[static_cast<std::size_t>(i)] = best;
      dist(i) = all_dist(i, best);
      inertia += dist(i);
    }
    out.inertia_trace.push_back(inertia);
    out.iterations = iter + 1;
    if (!changed) break;

    // Update step.
    RowMatrix<Scalar> sums = RowMatrix<Scalar>::Zero(k, dim);
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      auto c = labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Index c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: farthest point that does not leave its own cluster empty.
      Index far = -1;
      for (Index i = 0; i < n; ++i) {
        auto owner = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
        if (taken[static_cast<std::size_t>(i)] || sizes[owner] <= 1) continue;
        if (far < 0 || dist(i) > dist(far)) far = i;
      }
      if (far < 0) continue;
      taken[static_cast<std::size_t>(far)] = true;
      --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      centroids.row(c) = points.row(far);
    }
  }

  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.inertia = out.inertia_trace.empty() ? Scalar(0) : out.inertia_trace.back();
  return out;
}

template <typename Scalar>
ClusterAssignment<Scalar> kmeans(const FeatureMatrix<Scalar>& m, Index k, std::uint64_t seed,
                                 const KMeansOptions& opts = {}) {
  return kmeans(m.vectors, k, seed, opts);
}

// Samples per cluster: total = round(fraction * N); each non-empty cluster
// gets at least one; the remainder is split proportionally to cluster size
// by largest remainder (ties to the lower cluster index). Throws
// SamplingError when total is smaller than the number of non-empty clusters.
std::vector<Index> allocate_quota(const std::vector<Index>& cluster_sizes, double fraction);

// Total sample count for a fraction: round half away from zero.
Index sample_total(Index n, double fraction);

// Per cluster, the points closest to the centroid (ties by row order), in
// quotas from allocate_quota. Output is grouped by cluster, closest first.
template <typename Scalar>
std::vector<std::string> select_samples(const ClusterAssignment<Scalar>& assignment,
                                        const FeatureMatrix<Scalar>& matrix, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw SamplingError("fraction must be in (0, 1]");
  const Index n = matrix.rows();
  if (static_cast<Index>(assignment.labels.size()) != n)
    throw SamplingError("assignment and matrix have different row counts");
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(assignment.k));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(assignment.labels[static_cast<std::size_t>(i)])].push_back(i);
  std::vector<Index> sizes;
  for (auto& m : members) sizes.push_back(static_cast<Index>(m.size()));
  auto quota = allocate_quota(sizes, fraction);

  std::vector<std::string> out;
  for (Index c = 0; c < assignment.k; ++c) {
    auto& idx = members[static_cast<std::size_t>(c)];
    std::vector<std::pair<Scalar, Index>> by_dist;
    for (auto i : idx)
      by_dist.emplace_back((matrix.vectors.row(i) - assignment.centroids.row(c)).squaredNorm(), i);
    std::stable_sort(by_dist.begin(), by_dist.end());
    for (Index q = 0; q < quota[static_cast<std::size_t>(c)]; ++q)
      out.push_back(matrix.report_ids[static_cast<std::size_t>(by_dist[static_cast<std::size_t>(q)].second)]);
  }
  return out;
}

}  // namespace irx::sampler
