#include <doctest.h>

#include <algorithm>
#include <set>

#include "punch/annotator.hpp"
#include "punch/clustering.hpp"
#include "punch/error.hpp"
#include "punch/metrics.hpp"
#include "punch/synthetic.hpp"
#include "punch/training.hpp"

using namespace punch;

namespace {

struct Fixture {
  Scene scene;
  HsiCube cube;
  LabelState labels;
  std::vector<std::uint8_t> truth;
};

// 16x16 noise-free scene: class 2 is a 6x6 block on a class-1 background.
Fixture two_class(double fraction = 0.3) {
  SyntheticSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  spec.channels = 4;
  spec.noise_sigma = 0.0;
  spec.class_means = {{0.2, 0.3, 0.4, 0.5}, {0.8, 0.6, 0.3, 0.1}};
  spec.regions = {{2, 5, 5, 6, 6}};
  Fixture f{make_synthetic_scene(spec, 0), {}, {}, {}};
  f.cube = normalize(f.scene.cube);
  f.labels = annotate_uniform(*f.scene.ground_truth, {2, fraction, AnnotationModel::uniform, 1});
  for (auto id : f.scene.ground_truth->ids) f.truth.push_back(id == 2);
  return f;
}

TrainConfig small_config() {
  TrainConfig t;
  t.epochs = 50;
  t.batch_size = 32;
  t.learning_rate = 0.1;
  t.hidden = {8};
  t.early_stop = EarlyStop::none;
  return t;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("nnre training separates noise-free classes") {
    const auto f = two_class();
    const TrainingContext ctx{f.cube, f.labels, nullptr, 1, {}};
    const auto r = train_nnre_pu(ctx, 36.0 / 256.0, small_config());
    const auto map = predict_map(r.classifier, f.cube, 1, 0.5);
    CHECK(roc_and_auc(map.scores, f.truth).auc == 1.0);
    CHECK(r.log.size() == 50);
    CHECK(r.positive_examples == f.labels.positive_count());
  }

  TEST_CASE("pn training on retrieved negatives reaches F = 1") {
    const auto f = two_class();
    const auto clusters = kmeans(f.cube, 2, 0);
    const TrainingContext ctx{f.cube, f.labels, nullptr, 1, {}};
    const RetrievalParams p{4.0, 2.0, 1e-4, RetrievalModel::hybrid};
    const auto r = train_pn_pu(ctx, clusters, p, small_config());
    CHECK(r.negatives.size() == f.labels.positive_count());
    CHECK(r.train.other_examples == f.labels.positive_count());
    for (const auto& n : r.negatives) CHECK_FALSE(f.labels.is_positive(n));
    const auto map = predict_map(r.train.classifier, f.cube, 1, 0.5);
    std::vector<std::uint8_t> all(map.positive.size(), 1);
    const auto rep = prf(map.positive, f.truth, all);
    REQUIRE(rep.f_score);
    CHECK(*rep.f_score == 1.0);
  }

  TEST_CASE("defaults") {
    const TrainConfig t;
    CHECK(t.epochs == 100);
    CHECK(t.validation_fraction == 0.07);
    CHECK(t.patience == 10);
    CHECK_NOTHROW(t.validate());
    TrainConfig over = t;
    over.epochs = 101;
    CHECK_THROWS_AS(over.validate(), ConfigError);
    over.epochs = 0;
    CHECK_THROWS_AS(over.validate(), ConfigError);
  }

  TEST_CASE("unlabelled sample is capped by the pool and avoids positives and validation") {
    const auto f = two_class();
    const auto v = split_validation(f.labels, &*f.scene.ground_truth, 2, 0.1, 3);
    const TrainingContext ctx{f.cube, f.labels, &v, 1, {}};
    const auto s = sample_unlabelled(ctx, 5000, 4);
    CHECK(s.size() == f.labels.unlabelled_count() - v.pixels.size());
    const std::set<PixelCoord> uniq(s.begin(), s.end());
    CHECK(uniq.size() == s.size());
    for (const auto& p : s) {
      CHECK_FALSE(f.labels.is_positive(p));
      CHECK_FALSE(v.contains(p));
    }
    CHECK(sample_unlabelled(ctx, 20, 4).size() == 20);
  }

  TEST_CASE("validation split size, disjointness and truth") {
    const auto f = two_class();
    const auto v = split_validation(f.labels, &*f.scene.ground_truth, 2, 0.07, 9);
    const auto n = f.labels.unlabelled_count();
    CHECK(v.pixels.size() == static_cast<std::size_t>(0.07 * static_cast<double>(n) + 0.5));
    for (std::size_t i = 0; i < v.pixels.size(); ++i) {
      CHECK_FALSE(f.labels.is_positive(v.pixels[i]));
      CHECK(v.truth[i] == (f.scene.ground_truth->at(v.pixels[i]) == 2));
    }
    CHECK(v.annotated_count() == v.pixels.size());
    CHECK(split_validation(f.labels, &*f.scene.ground_truth, 2, 0.07, 9).pixels == v.pixels);
    CHECK_THROWS_AS(split_validation(f.labels, nullptr, 2, 0.0, 9), ConfigError);
  }

  TEST_CASE("training is deterministic in the seed") {
    const auto f = two_class();
    const TrainingContext ctx{f.cube, f.labels, nullptr, 3, {}};
    auto t = small_config();
    t.epochs = 5;
    const auto a = train_nnre_pu(ctx, 0.14, t);
    const auto b = train_nnre_pu(ctx, 0.14, t);
    CHECK(a.classifier == b.classifier);
    t.seed = 1;
    CHECK_FALSE(train_nnre_pu(ctx, 0.14, t).classifier == a.classifier);
  }

  TEST_CASE("early stopping keeps the best validation epoch") {
    const auto f = two_class();
    const auto v = split_validation(f.labels, &*f.scene.ground_truth, 2, 0.2, 2);
    std::vector<EpochMetrics> seen;
    const TrainingContext ctx{f.cube, f.labels, &v, 1, [&](const EpochMetrics& m) { seen.push_back(m); }};
    auto t = small_config();
    t.epochs = 100;
    t.patience = 3;
    t.early_stop = EarlyStop::val_loss_rise;
    const auto r = train_nnre_pu(ctx, 0.14, t);
    CHECK(seen.size() == r.log.size());
    REQUIRE(r.best_epoch >= 1);
    const double best = *r.log[r.best_epoch - 1].val_loss;
    for (const auto& m : r.log) {
      REQUIRE(m.val_loss);
      CHECK(*m.val_loss >= best);
    }
    if (r.stopped_early) {
      CHECK(static_cast<int>(r.log.size()) == r.best_epoch + t.patience);
    }
  }

  TEST_CASE("prediction map thresholds and matches forward") {
    const auto f = two_class();
    const auto net = Classifier::initialized(reference_layers(3, 4, {5}), Activation::relu, 6);
    const auto map = predict_map(net, f.cube, 3, 0.5);
    CHECK(map.rows == 16);
    CHECK(map.cols == 16);
    REQUIRE(map.scores.size() == 256);
    for (std::size_t i = 0; i < 256; i += 17) {
      const auto patch = extract_patch(f.cube, f.cube.coord_of(i), 3);
      CHECK(map.scores[i] == net.forward(as_input(patch)));
    }
    const auto none = predict_map(net, f.cube, 3, 1.0);
    const auto all = predict_map(net, f.cube, 3, 0.0);
    CHECK(std::count(none.positive.begin(), none.positive.end(), 1) == 0);
    CHECK(std::count(all.positive.begin(), all.positive.end(), 1) == 256);
  }

  TEST_CASE("training rejects raw cubes and empty inputs") {
    const auto f = two_class();
    const TrainingContext raw{f.scene.cube, f.labels, nullptr, 1, {}};
    CHECK_THROWS_AS(train_nnre_pu(raw, 0.1, small_config()), DataError);
    const TrainingContext ctx{f.cube, f.labels, nullptr, 1, {}};
    CHECK_THROWS_AS(train_nnre_pu(ctx, 1.0, small_config()), ConfigError);
    CHECK_THROWS_AS(train_classifier(ctx, {}, f.labels.positives(), LossSpec::pn(), small_config()), DataError);
  }
}
