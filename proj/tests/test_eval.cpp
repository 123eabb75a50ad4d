#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "punch/error.hpp"
#include "punch/metrics.hpp"
#include "support.hpp"

using namespace punch;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Least cost over all vertices, computed directly.
double exhaustive_min_cost(const RocCurve& roc, double pi, double a, double b) {
  double best = INFINITY;
  for (const auto& p : roc.points) best = std::min(best, (1 - pi) * a * p.fpr + pi * b * (1 - p.tpr));
  return best;
}

void random_case(std::mt19937_64& rng, std::size_t n, std::vector<double>& s, Bytes& t) {
  s.resize(n);
  t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(rng() % 7) / 7.0;  // coarse grid forces ties
    t[i] = static_cast<std::uint8_t>(rng() % 2);
  }
  t[0] = 1;
  t[1] = 0;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("perfect and inverted rankings") {
    CHECK(roc_and_auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, Bytes{1, 1, 0, 0}).auc == 1.0);
    CHECK(roc_and_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, Bytes{1, 1, 0, 0}).auc == 0.0);
  }

  TEST_CASE("all scores tied gives one half") {
    CHECK(roc_and_auc(std::vector<double>(6, 0.4), Bytes{1, 0, 1, 0, 0, 1}).auc == 0.5);
  }

  TEST_CASE("six-example hand case is 8/9") {
    const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.4, 0.2};
    const Bytes t{1, 1, 0, 1, 0, 0};
    CHECK(std::abs(roc_and_auc(s, t).auc - 8.0 / 9.0) <= 1e-12);
    CHECK(testing::brute_force_auc(s, t) == roc_and_auc(s, t).auc);
  }

  TEST_CASE("a single class is a data error") {
    CHECK_THROWS_AS(roc_and_auc(std::vector<double>{0.1, 0.2}, Bytes{1, 1}), DataError);
  }

  TEST_CASE("curve runs from the origin to (1, 1) and is monotone") {
    std::mt19937_64 rng(3);
    std::vector<double> s;
    Bytes t;
    random_case(rng, 40, s, t);
    const auto r = roc_and_auc(s, t);
    CHECK(r.curve.points.front().fpr == 0.0);
    CHECK(r.curve.points.front().tpr == 0.0);
    CHECK(r.curve.points.back().fpr == 1.0);
    CHECK(r.curve.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < r.curve.points.size(); ++i) {
      CHECK(r.curve.points[i].fpr >= r.curve.points[i - 1].fpr);
      CHECK(r.curve.points[i].tpr >= r.curve.points[i - 1].tpr);
      CHECK(r.curve.points[i].threshold < r.curve.points[i - 1].threshold);
    }
  }

  TEST_CASE("auc equals the brute-force pair count") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> s;
      Bytes y;
      random_case(rng, 2 + rng() % 19, s, y);
      CHECK(roc_and_auc(s, y).auc == testing::brute_force_auc(s, y));
    }
  }

  TEST_CASE("auc is invariant under strictly increasing transforms and permutations") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> s;
      Bytes y;
      random_case(rng, 30, s, y);
      const double base = roc_and_auc(s, y).auc;
      std::vector<double> g;
      for (double v : s) g.push_back(std::exp(3 * v) - 5);
      CHECK(roc_and_auc(g, y).auc == base);
      std::vector<std::size_t> idx(s.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<double> ps;
      Bytes py;
      for (auto i : idx) {
        ps.push_back(s[i]);
        py.push_back(y[i]);
      }
      CHECK(roc_and_auc(ps, py).auc == base);
    }
  }

  TEST_CASE("prior zero and one pick the curve ends") {
    const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
    const Bytes t{1, 0, 1, 1, 0, 0};
    const auto roc = roc_and_auc(s, t).curve;
    const auto lo = select_operating_point(roc, 0.0);
    CHECK(lo.fpr == 0.0);
    CHECK(lo.tpr == 1.0 / 3.0);  // highest recall at zero false positives
    const auto hi = select_operating_point(roc, 1.0);
    CHECK(hi.tpr == 1.0);
    CHECK(hi.fpr == 1.0 / 3.0);
  }

  TEST_CASE("four-vertex curve at prior 0.13") {
    RocCurve roc;
    roc.points = {{0.0, 0.0, 0.95}, {0.1, 0.5, 0.7}, {0.3, 0.8, 0.4}, {1.0, 1.0, 0.1}};
    const auto op = select_operating_point(roc, 0.13);
    CHECK(op.vertex == 0);
    CHECK(std::abs(op.cost - 0.13) <= 1e-12);
    CHECK(op.cost == exhaustive_min_cost(roc, 0.13, 1, 1));
    // with false negatives ten times dearer the middle vertex wins
    const auto dear = select_operating_point(roc, 0.13, 1.0, 10.0);
    CHECK(dear.vertex == 2);
    CHECK(std::abs(dear.cost - (0.87 * 0.3 + 1.3 * 0.2)) <= 1e-12);
  }

  TEST_CASE("operating point cost equals the exhaustive minimum") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> s;
      Bytes y;
      random_case(rng, 2 + rng() % 19, s, y);
      const auto roc = roc_and_auc(s, y).curve;
      const double pi = u(rng), a = 0.1 + u(rng), b = 0.1 + u(rng);
      const auto op = select_operating_point(roc, pi, a, b);
      CHECK(op.cost == exhaustive_min_cost(roc, pi, a, b));
      CHECK(op.cost == misclassification_cost(op.fpr, op.tpr, pi, a, b));
    }
    CHECK_THROWS_AS(select_operating_point(RocCurve{}, 0.5), DataError);
  }

  TEST_CASE("precision recall and F hand case") {
    Bytes pred, truth;
    auto add = [&](int n, int p, int y) {
      for (int i = 0; i < n; ++i) {
        pred.push_back(static_cast<std::uint8_t>(p));
        truth.push_back(static_cast<std::uint8_t>(y));
      }
    };
    add(77, 1, 1);
    add(16, 1, 0);
    add(23, 0, 1);
    add(884, 0, 0);
    const Bytes mask(pred.size(), 1);
    const auto r = prf(pred, truth, mask);
    CHECK(r.counts.tp == 77);
    CHECK(r.counts.fp == 16);
    CHECK(r.counts.fn == 23);
    CHECK(r.counts.tn == 884);
    CHECK(std::abs(*r.precision - 77.0 / 93.0) <= 1e-12);
    CHECK(std::abs(*r.precision - 0.828) < 5e-4);
    CHECK(*r.recall == 0.77);
    CHECK(std::abs(*r.f_score - 0.798) < 5e-4);
  }

  TEST_CASE("perfect prediction scores one and maps to TP and TN only") {
    const Bytes truth{1, 0, 0, 1, 1, 0}, mask(6, 1);
    const auto r = prf(truth, truth, mask);
    CHECK(*r.precision == 1.0);
    CHECK(*r.recall == 1.0);
    CHECK(*r.f_score == 1.0);
    for (auto o : confusion_map(truth, truth, mask).outcomes) {
      CHECK((o == Outcome::true_positive || o == Outcome::true_negative));
    }
  }

  TEST_CASE("two by two grid has one pixel of each outcome") {
    const Bytes pred{1, 1, 0, 0}, truth{1, 0, 1, 0}, mask{1, 1, 1, 1};
    const auto m = confusion_map(pred, truth, mask);
    CHECK(m.outcomes == std::vector<Outcome>{Outcome::true_positive, Outcome::false_positive, Outcome::false_negative,
                                             Outcome::true_negative});
    CHECK(m.counts.tp == 1);
    CHECK(m.counts.fp == 1);
    CHECK(m.counts.fn == 1);
    CHECK(m.counts.tn == 1);
  }

  TEST_CASE("no predicted positives leaves precision undefined") {
    const Bytes pred{0, 0, 0}, truth{1, 0, 1}, mask{1, 1, 1};
    const auto r = prf(pred, truth, mask);
    CHECK_FALSE(r.precision);
    CHECK(*r.recall == 0.0);
    CHECK_FALSE(r.f_score);
    CHECK(to_json(r)["precision"].is_null());
  }

  TEST_CASE("mask excludes pixels from every count") {
    const Bytes pred{1, 1, 0, 0}, truth{1, 0, 1, 0}, mask{1, 0, 1, 0};
    const auto m = confusion_map(pred, truth, mask);
    CHECK(m.counts.tp == 1);
    CHECK(m.counts.fn == 1);
    CHECK(m.counts.fp == 0);
    CHECK(m.counts.tn == 0);
    CHECK(m.outcomes == std::vector<Outcome>{Outcome::true_positive, Outcome::ignored, Outcome::false_negative,
                                             Outcome::ignored});
  }

  TEST_CASE("confusion map counts agree with prf and add up") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
      Bytes pred(50), truth(50), mask(50);
      for (int i = 0; i < 50; ++i) {
        pred[i] = rng() % 2;
        truth[i] = rng() % 2;
        mask[i] = rng() % 4 != 0;
      }
      const auto m = confusion_map(pred, truth, mask);
      const auto r = prf(pred, truth, mask);
      CHECK(m.counts.tp == r.counts.tp);
      CHECK(m.counts.fp == r.counts.fp);
      CHECK(m.counts.fn == r.counts.fn);
      CHECK(m.counts.tn == r.counts.tn);
      CHECK(m.counts.evaluated() == static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)));
      std::size_t tp = 0;
      for (auto o : m.outcomes) tp += o == Outcome::true_positive;
      CHECK(tp == m.counts.tp);
    }
  }

  TEST_CASE("outcome colours are distinct") {
    std::set<std::tuple<int, int, int>> seen;
    for (auto o : {Outcome::true_positive, Outcome::false_positive, Outcome::true_negative, Outcome::false_negative,
                   Outcome::ignored}) {
      const auto c = outcome_colour(o);
      seen.insert({c.r, c.g, c.b});
    }
    CHECK(seen.size() == 5);
  }

  TEST_CASE("spearman hand cases") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(*spearman(x, std::vector<double>{10, 20, 30, 40, 50}) == doctest::Approx(1.0));
    CHECK(*spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(*spearman(x, std::vector<double>{1, 3, 2, 5, 4}) == doctest::Approx(0.8));
    CHECK(*spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 2}) == doctest::Approx(std::sqrt(3.0) / 2));
    CHECK_FALSE(spearman(x, std::vector<double>(5, 1.0)));
  }
}
