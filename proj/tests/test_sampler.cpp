#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "irx/sampler.hpp"

using namespace irx;
using namespace irx::sampler;

namespace {

IncidentReport doc(std::string id, std::string body) {
  IncidentReport r;
  r.report_id = std::move(id);
  r.body_text = std::move(body);
  return r;
}

// Points around `centers` with spread `sigma`, generated with a fixed seed.
RowMatrix<double> blobs(const std::vector<std::vector<double>>& centers, int per_blob, double sigma,
                        unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Index dim = static_cast<Index>(centers[0].size());
  RowMatrix<double> m(static_cast<Index>(centers.size()) * per_blob, dim);
  for (std::size_t b = 0; b < centers.size(); ++b)
    for (int i = 0; i < per_blob; ++i)
      for (Index d = 0; d < dim; ++d)
        m(static_cast<Index>(b) * per_blob + i, d) = centers[b][static_cast<std::size_t>(d)] + noise(rng);
  return m;
}

}  // namespace

TEST_CASE("vectorize: identical documents give identical rows") {
  auto fm = vectorize({doc("a", "disk latency spike in region"), doc("b", "disk latency spike in region"),
                       doc("c", "network outage")});
  CHECK(fm.vectors.row(0) == fm.vectors.row(1));
  CHECK(fm.report_ids == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("vectorize: single document keeps every term with equal idf") {
  auto fm = vectorize({doc("a", "one two two three")});
  REQUIRE(fm.vocabulary == std::vector<std::string>{"one", "three", "two"});
  // idf is 1 for every term, so weights are tf alone: 1/4, 1/4, 2/4 before
  // normalization.
  double norm = std::sqrt(0.25 * 0.25 * 2 + 0.5 * 0.5);
  CHECK(fm.vectors(0, 0) == doctest::Approx(0.25 / norm));
  CHECK(fm.vectors(0, 1) == doctest::Approx(0.25 / norm));
  CHECK(fm.vectors(0, 2) == doctest::Approx(0.5 / norm));
  CHECK(fm.vectors.row(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("vectorize: hand-computed TF-IDF on a three-document corpus") {
  std::vector<IncidentReport> docs = {doc("a", "outage alpha"), doc("b", "outage beta"), doc("c", "outage gamma")};
  // Hand computation, N = 3, every document has 2 tokens:
  //   shared term: df = 3, idf = ln(4/4) + 1 = 1
  //   unique term: df = 1, idf = ln(4/2) + 1 = 1 + ln 2
  //   raw row = (0.5 * 1, 0.5 * (1 + ln 2)), then L2-normalized.
  const double shared = 0.5, unique = 0.5 * (1.0 + std::log(2.0));
  const double norm = std::sqrt(shared * shared + unique * unique);
  SUBCASE("min_df = 1 keeps unique terms") {
    auto fm = vectorize(docs, {.min_df = 1});
    REQUIRE(fm.vocabulary == std::vector<std::string>{"alpha", "beta", "gamma", "outage"});
    CHECK(fm.vectors(0, 3) == doctest::Approx(shared / norm).epsilon(1e-12));
    CHECK(fm.vectors(0, 0) == doctest::Approx(unique / norm).epsilon(1e-12));
    CHECK(fm.vectors(1, 1) == doctest::Approx(unique / norm).epsilon(1e-12));
    CHECK(fm.vectors(0, 1) == 0.0);
  }
  SUBCASE("default min_df = 2 drops them") {
    auto fm = vectorize(docs);
    REQUIRE(fm.vocabulary == std::vector<std::string>{"outage"});
    for (Index i = 0; i < 3; ++i) CHECK(fm.vectors(i, 0) == doctest::Approx(1.0));
  }
  SUBCASE("entries are finite, non-negative and rows unit or zero") {
    auto fm = vectorize(docs, {.min_df = 1});
    CHECK(fm.vectors.allFinite());
    CHECK((fm.vectors.array() >= 0).all());
    for (Index i = 0; i < fm.rows(); ++i) CHECK(fm.vectors.row(i).norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("vectorize: max_features keeps the most frequent terms") {
  auto fm = vectorize({doc("a", "x y z"), doc("b", "x y"), doc("c", "x")}, {.min_df = 1, .max_features = 2});
  CHECK(fm.vocabulary == std::vector<std::string>{"x", "y"});
}

TEST_CASE("vectorize: empty corpus is an error") {
  CHECK_THROWS_AS(vectorize(std::vector<IncidentReport>{}), SamplingError);
  CHECK_THROWS_AS(vectorize({doc("a", "  ")}), SamplingError);
}

TEST_CASE("vectorize works in single precision") {
  auto fm = vectorize<float>({doc("a", "disk full"), doc("b", "disk slow")}, {.min_df = 1});
  CHECK(fm.vectors.rows() == 2);
  auto ka = kmeans(fm, 2, 1);
  CHECK(ka.labels[0] != ka.labels[1]);
}

TEST_CASE("kmeans: k equal to the row count gives singleton clusters") {
  auto m = blobs({{0, 0}, {5, 5}}, 4, 1.0, 3);
  auto a = kmeans(m, m.rows(), 11);
  std::set<Index> used(a.labels.begin(), a.labels.end());
  CHECK(used.size() == static_cast<std::size_t>(m.rows()));
  CHECK(a.inertia == 0.0);
}

TEST_CASE("kmeans: two separated blobs are recovered exactly") {
  auto m = blobs({{0, 0, 0}, {50, 50, 50}}, 40, 0.5, 5);
  auto a = kmeans(m, 2, 42);
  for (int i = 1; i < 40; ++i) CHECK(a.labels[static_cast<std::size_t>(i)] == a.labels[0]);
  for (int i = 41; i < 80; ++i) CHECK(a.labels[static_cast<std::size_t>(i)] == a.labels[40]);
  CHECK(a.labels[0] != a.labels[40]);
  // Brute force: every point sits with its nearest centroid.
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < a.k; ++c)
      if ((m.row(i) - a.centroids.row(c)).squaredNorm() < (m.row(i) - a.centroids.row(best)).squaredNorm())
        best = c;
    CHECK(a.labels[static_cast<std::size_t>(i)] == best);
  }
}

TEST_CASE("kmeans: determinism and inertia monotonicity over seeds") {
  auto m = blobs({{0, 0}, {3, 1}, {1, 4}, {6, 6}}, 25, 1.2, 9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = kmeans(m, 5, seed);
    auto b = kmeans(m, 5, seed);
    CHECK(a.labels == b.labels);
    CHECK(a.centroids == b.centroids);
    for (std::size_t t = 1; t < a.inertia_trace.size(); ++t)
      CHECK(a.inertia_trace[t] <= a.inertia_trace[t - 1]);
    for (auto l : a.labels) CHECK((l >= 0 && l < 5));
  }
}

TEST_CASE("kmeans: duplicate points and invalid k") {
  RowMatrix<double> m = RowMatrix<double>::Zero(4, 2);
  auto a = kmeans(m, 3, 1);
  CHECK(a.inertia == 0.0);
  CHECK_THROWS_AS(kmeans(m, 5, 1), SamplingError);
  CHECK_THROWS_AS(kmeans(m, 0, 1), SamplingError);
}

TEST_CASE("default k") {
  CHECK(default_k(774) == 20);
  CHECK(default_k(1) == 1);
  CHECK(default_k(2) == 1);
  CHECK(default_k(300) == 13);
}

TEST_CASE("allocate_quota") {
  SUBCASE("sizes 9 and 1 at 0.2 -> one each") {
    CHECK(allocate_quota({9, 1}, 0.2) == std::vector<Index>{1, 1});
  }
  SUBCASE("fraction 1 takes everything") {
    CHECK(allocate_quota({3, 0, 5}, 1.0) == std::vector<Index>{3, 0, 5});
  }
  SUBCASE("too small a fraction names the minimum") {
    try {
      allocate_quota({5, 5, 5}, 0.1);
      FAIL("expected SamplingError");
    } catch (const SamplingError& e) {
      CHECK(std::string(e.what()).find("at least 0.2") != std::string::npos);
    }
  }
  SUBCASE("totals and floors hold over many size vectors") {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Index> sizes(1 + rng() % 12);
      Index n = 0, nonempty = 0;
      for (auto& s : sizes) {
        s = rng() % 4 == 0 ? 0 : 1 + rng() % 60;
        n += s;
        nonempty += s > 0;
      }
      if (n == 0) continue;
      double fraction = std::min(1.0, (nonempty + rng() % (n - nonempty + 1)) / static_cast<double>(n) + 1e-9);
      if (sample_total(n, fraction) < nonempty) continue;
      auto q = allocate_quota(sizes, fraction);
      Index sum = 0;
      for (std::size_t c = 0; c < sizes.size(); ++c) {
        sum += q[c];
        CHECK(q[c] <= sizes[c]);
        if (sizes[c] > 0) CHECK(q[c] >= 1);
      }
      CHECK(sum == sample_total(n, fraction));
    }
  }
}

TEST_CASE("select_samples") {
  SUBCASE("fraction 1.0 returns every id") {
    std::vector<IncidentReport> docs;
    for (int i = 0; i < 12; ++i)
      docs.push_back(doc("r" + std::to_string(i), i % 2 ? "disk failure storage" : "network routing outage"));
    auto fm = vectorize(docs);
    auto a = kmeans(fm, 2, 7);
    auto ids = select_samples(a, fm, 1.0);
    std::set<std::string> s(ids.begin(), ids.end());
    CHECK(s.size() == 12);
  }
  SUBCASE("AWS-sized corpus at 0.19 -> 147 samples across every cluster") {
    FeatureMatrix<double> fm;
    fm.vectors = blobs({{0, 0, 0, 0}, {4, 0, 0, 1}, {0, 4, 2, 0}, {2, 2, 5, 5}}, 193, 1.5, 17);
    fm.vectors.conservativeResize(774, Eigen::NoChange);
    fm.vectors.row(772) << 9, 9, 9, 9;
    fm.vectors.row(773) << -9, 9, -9, 9;
    for (int i = 0; i < 774; ++i) fm.report_ids.push_back("aws-" + std::to_string(i));
    auto a = kmeans(fm, default_k(774), 3);
    auto ids = select_samples(a, fm, 0.19);
    CHECK(ids.size() == 147);
    std::set<std::string> unique(ids.begin(), ids.end());
    CHECK(unique.size() == ids.size());
    std::set<Index> covered, nonempty(a.labels.begin(), a.labels.end());
    for (auto& id : ids) covered.insert(a.labels[static_cast<std::size_t>(std::stoi(id.substr(4)))]);
    CHECK(covered == nonempty);
  }
  SUBCASE("clusters of 9 and 1 at 0.2 -> one from each, closest first") {
    FeatureMatrix<double> fm;
    fm.vectors = RowMatrix<double>(10, 1);
    for (int i = 0; i < 9; ++i) fm.vectors(i, 0) = i * 0.1;
    fm.vectors(9, 0) = 100;
    for (int i = 0; i < 10; ++i) fm.report_ids.push_back("r" + std::to_string(i));
    ClusterAssignment<double> a;
    a.k = 2;
    a.labels = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1};
    a.centroids = RowMatrix<double>(2, 1);
    a.centroids << 0.4, 100;
    auto ids = select_samples(a, fm, 0.2);
    CHECK(ids == std::vector<std::string>{"r4", "r9"});
  }
}
