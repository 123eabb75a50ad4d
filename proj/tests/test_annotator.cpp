#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "punch/annotator.hpp"
#include "punch/error.hpp"
#include "punch/synthetic.hpp"
#include "support.hpp"

using namespace punch;

namespace {

// Union-find over 4-neighbours, independent of the library's BFS.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::size_t component_count_oracle(int rows, int cols, const std::set<PixelCoord>& cells) {
  Dsu d(static_cast<std::size_t>(rows) * cols);
  for (const auto& p : cells) {
    if (cells.count({p.row + 1, p.col})) d.unite(p.row * cols + p.col, (p.row + 1) * cols + p.col);
    if (cells.count({p.row, p.col + 1})) d.unite(p.row * cols + p.col, p.row * cols + p.col + 1);
  }
  std::set<int> roots;
  for (const auto& p : cells) roots.insert(d.find(p.row * cols + p.col));
  return roots.size();
}

std::set<PixelCoord> class_cells(const ClassGrid& gt, std::uint16_t cls) {
  std::set<PixelCoord> s;
  for (int r = 0; r < gt.rows; ++r) {
    for (int c = 0; c < gt.cols; ++c) {
      if (gt.at({r, c}) == cls) s.insert({r, c});
    }
  }
  return s;
}

ClassGrid random_grid(std::uint64_t seed, int rows, int cols) {
  std::mt19937_64 rng(seed);
  ClassGrid g{rows, cols, {}};
  for (int i = 0; i < rows * cols; ++i) g.ids.push_back(rng() % 3 == 0 ? 2 : static_cast<std::uint16_t>(rng() % 2));
  return g;
}

}  // namespace

TEST_SUITE("annotator") {
  TEST_CASE("single positive pixel is one component of size 1") {
    const auto d = connected_components(testing::draw({"...", ".1.", "..."}), 1);
    REQUIRE(d.components.size() == 1);
    CHECK(d.components[0].size() == 1);
  }

  TEST_CASE("diagonal neighbours are separate components") {
    const auto g = testing::draw({"1.", ".1"});
    const auto d = connected_components(g, 1);
    CHECK(d.components.size() == 2);
    CHECK(d.components.size() == component_count_oracle(2, 2, class_cells(g, 1)));
  }

  TEST_CASE("full 3x3 block is one component of size 9") {
    const auto d = connected_components(testing::draw({"111", "111", "111"}), 1);
    REQUIRE(d.components.size() == 1);
    CHECK(d.components[0].size() == 9);
  }

  TEST_CASE("component count matches a union-find oracle on random grids") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto g = random_grid(seed, 9, 11);
      const auto d = connected_components(g, 2);
      CHECK(d.components.size() == component_count_oracle(9, 11, class_cells(g, 2)));
      CHECK(d.total_size() == g.count(2));
    }
  }

  TEST_CASE("quota rounds half up and rejects zero") {
    CHECK(annotation_quota(0.10, 100) == 10);
    CHECK(annotation_quota(0.10, 45) == 5);  // 4.5 rounds up
    CHECK(annotation_quota(1.0, 7) == 7);
    CHECK_THROWS_AS(annotation_quota(0.01, 10), ConfigError);
    CHECK_THROWS_AS(annotation_quota(0.0, 10), ConfigError);
    CHECK_THROWS_AS(annotation_quota(1.5, 10), ConfigError);
  }

  TEST_CASE("uniform with fraction 1 labels the whole class") {
    const auto g = random_grid(4, 8, 8);
    const auto l = annotate_uniform(g, {2, 1.0, AnnotationModel::uniform, 3});
    CHECK(l.positive_count() == g.count(2));
    for (const auto& p : l.positives()) CHECK(g.at(p) == 2);
  }

  TEST_CASE("ten percent of 100 positives labels 10") {
    ClassGrid g{10, 12, std::vector<std::uint16_t>(120, 1)};
    for (int i = 0; i < 100; ++i) g.ids[i] = 2;
    CHECK(annotate_uniform(g, {2, 0.10, AnnotationModel::uniform, 0}).positive_count() == 10);
    CHECK(annotate_blob(g, {2, 0.10, AnnotationModel::blob, 0}).positive_count() == 10);
  }

  TEST_CASE("uniform single draws are uniform over 4 positives") {
    const auto g = testing::draw({"2..2", "....", "2..2"});
    std::map<PixelCoord, int> hits;
    const int trials = 10000;
    for (int s = 0; s < trials; ++s) {
      const auto l = annotate_uniform(g, {2, 0.25, AnnotationModel::uniform, static_cast<std::uint64_t>(s)});
      REQUIRE(l.positive_count() == 1);
      ++hits[l.positives()[0]];
    }
    REQUIRE(hits.size() == 4);
    double chi2 = 0.0;
    for (const auto& [p, n] : hits) {
      CHECK(std::abs(n - 2500) <= 150);
      chi2 += (n - 2500.0) * (n - 2500.0) / 2500.0;
    }
    // chi-square, 3 degrees of freedom: p > 0.01 below 11.345
    CHECK(chi2 < 11.345);
  }

  TEST_CASE("uniform inclusion probability converges to the fraction") {
    const auto g = random_grid(21, 10, 10);
    const auto pop = g.count(2);
    const double fraction = 0.2;
    const double expected = static_cast<double>(annotation_quota(fraction, pop)) / static_cast<double>(pop);
    std::map<PixelCoord, int> hits;
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
      const auto l = annotate_uniform(g, {2, fraction, AnnotationModel::uniform, static_cast<std::uint64_t>(s)});
      for (const auto& p : l.positives()) ++hits[p];
    }
    const double sd = std::sqrt(expected * (1 - expected) / trials);
    for (const auto& [p, n] : hits) CHECK(std::abs(n / static_cast<double>(trials) - expected) < 5 * sd);
  }

  TEST_CASE("blob within one component stays connected and holds its start") {
    const auto g = testing::draw({"22222....", "22222....", "22222..22", ".......22"});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto seq = blob_sequence(g, {2, 4.0 / 19.0, AnnotationModel::blob, seed});
      REQUIRE(seq.size() == 4);
      const std::set<PixelCoord> cells(seq.begin(), seq.end());
      CHECK(component_count_oracle(g.rows, g.cols, cells) == 1);
      CHECK(cells.count(seq.front()) == 1);
    }
  }

  TEST_CASE("blob with full quota labels the whole class") {
    const auto g = random_grid(8, 7, 7);
    const auto l = annotate_blob(g, {2, 1.0, AnnotationModel::blob, 1});
    CHECK(l.positive_count() == g.count(2));
  }

  TEST_CASE("blob over components of 6 and 8 with quota 10") {
    // component A: 2x3 block (6), component B: 2x4 block (8)
    const auto g = testing::draw({"222.....", "222.....", "........", "....2222", "....2222"});
    const auto comps = connected_components(g, 2);
    REQUIRE(comps.components.size() == 2);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto l = annotate_blob(g, {2, 10.0 / 14.0, AnnotationModel::blob, seed});
      REQUIRE(l.positive_count() == 10);
      std::size_t in[2] = {0, 0};
      std::set<PixelCoord> part[2];
      for (const auto& p : l.positives()) {
        const int k = p.row < 2 ? 0 : 1;
        ++in[k];
        part[k].insert(p);
      }
      // one component is complete and the rest is a connected piece of the other
      const bool a_full = in[0] == 6, b_full = in[1] == 8;
      CHECK((a_full || b_full));
      if (a_full) CHECK(in[1] == 4);
      if (b_full) CHECK(in[0] == 2);
      for (int k = 0; k < 2; ++k) CHECK(component_count_oracle(g.rows, g.cols, part[k]) == 1);
    }
  }

  TEST_CASE("blob prefixes never hold more than exhausted components plus one") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      const auto g = random_grid(100 + seed, 10, 10);
      const auto comps = connected_components(g, 2);
      const auto seq = blob_sequence(g, {2, 0.6, AnnotationModel::blob, seed});
      std::set<PixelCoord> prefix;
      for (const auto& p : seq) {
        prefix.insert(p);
        std::size_t exhausted = 0;
        for (const auto& comp : comps.components) {
          exhausted += std::all_of(comp.begin(), comp.end(), [&](const PixelCoord& q) { return prefix.count(q) > 0; });
        }
        REQUIRE(component_count_oracle(g.rows, g.cols, prefix) <= exhausted + 1);
      }
    }
  }

  TEST_CASE("both models label a subset of the class, disjoint from the unlabelled set") {
    const auto scene = make_synthetic_scene(reference_synthetic_spec(), 2);
    const auto& g = *scene.ground_truth;
    for (auto model : {AnnotationModel::uniform, AnnotationModel::blob}) {
      const AnnotationRequest req{2, 0.1, model, 17};
      const auto l = annotate(g, req);
      CHECK(l.positive_count() == annotation_quota(0.1, g.count(2)));
      for (const auto& p : l.positives()) CHECK(g.at(p) == 2);
      const auto unl = l.unlabelled();
      CHECK(unl.size() + l.positive_count() == g.ids.size());
      for (const auto& p : unl) CHECK_FALSE(l.is_positive(p));
      CHECK(annotate(g, req) == l);
    }
  }

  TEST_CASE("annotation without positives of the class is an error") {
    const auto g = testing::draw({"11", "11"});
    CHECK_THROWS(annotate_uniform(g, {2, 0.5, AnnotationModel::uniform, 0}));
  }
}
