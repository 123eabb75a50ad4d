#include <doctest.h>

#include <cstdlib>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "punch/error.hpp"
#include "punch/experiment.hpp"
#include "punch/image_io.hpp"
#include "support.hpp"

using namespace punch;
using nlohmann::json;

namespace {

// Small, fast run on the reference synthetic scene.
json quick_flags() {
  return {{"preset", "synthetic"},
          {"unlabelled_samples", 600},
          {"train", {{"epochs", 4}, {"hidden", {8}}, {"batch_size", 64}}}};
}

ExperimentConfig quick(json extra = json::object()) {
  auto flags = quick_flags();
  flags.merge_patch(extra);
  return resolve_config(json::object(), flags);
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("named presets set baseline and temperature") {
    const std::vector<std::tuple<std::string, double, double>> table{
        {"indian-pines-like", 32, 24}, {"pavia-like", 26, 14}, {"salinas-like", 26, 22}};
    for (const auto& [name, b, t] : table) {
      const auto c = resolve_config(json::object(), {{"preset", name}, {"scene", {{"path", "x.hscn"}}}});
      CHECK(c.retrieval.baseline == b);
      CHECK(c.retrieval.temperature == t);
      CHECK(c.preset == name);
    }
    CHECK_THROWS_AS(resolve_config(json::object(), {{"preset", "nope"}}), ConfigError);
  }

  TEST_CASE("defaults") {
    const auto c = quick();
    CHECK(c.fraction == 0.10);
    CHECK(c.patch_size == 3);
    CHECK(c.method == Method::nnre_pu);
    CHECK(c.retrieval.model == RetrievalModel::hybrid);
    CHECK(c.retrieval.epsilon == 1e-4);
    CHECK(c.alpha == 1.0);
    CHECK(c.beta == 1.0);
    CHECK_FALSE(c.pi_p);
    CHECK(ExperimentConfig{}.unlabelled_samples == 5000);
  }

  TEST_CASE("later layers win: preset, then file, then flags") {
    const json file{{"preset", "indian-pines-like"},
                    {"scene", {{"path", "a.hscn"}}},
                    {"retrieval", {{"baseline", 10.0}}},
                    {"seed", 4}};
    const json flags{{"retrieval", {{"temperature", 3.0}}}, {"seed", 9}};
    const auto c = resolve_config(file, flags);
    CHECK(c.retrieval.baseline == 10.0);
    CHECK(c.retrieval.temperature == 3.0);
    CHECK(c.seed == 9);
    const auto flag_preset = resolve_config(file, {{"preset", "pavia-like"}});
    CHECK(flag_preset.retrieval.temperature == 14.0);
    CHECK(flag_preset.retrieval.baseline == 10.0);
  }

  TEST_CASE("unknown keys and bad values are config errors") {
    CHECK_THROWS_AS(quick({{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(quick({{"train", {{"epoch", 3}}}}), ConfigError);
    CHECK_THROWS_AS(quick({{"train", {{"epochs", 101}}}}), ConfigError);
    CHECK_THROWS_AS(quick({{"pi_p", 1.5}}), ConfigError);
    CHECK_THROWS_AS(quick({{"pi_p", "guess"}}), ConfigError);
    CHECK_THROWS_AS(quick({{"patch_size", 4}}), ConfigError);
    CHECK_THROWS_AS(quick({{"method", "svm"}}), ConfigError);
    CHECK_THROWS_AS(quick({{"clusters", 1}}), ConfigError);
  }

  TEST_CASE("config JSON round-trips and the hash ignores the cache dir") {
    auto c = quick({{"pi_p", 0.2}, {"method", "pn_pu"}});
    const auto back = experiment_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    const auto h = config_hash(c);
    CHECK(h.size() == 16);
    CHECK(config_hash(quick({{"pi_p", 0.2}, {"method", "pn_pu"}})) == h);
    c.cache_dir = "/tmp/elsewhere";
    CHECK(config_hash(c) == h);
    c.seed = 1;
    CHECK(config_hash(c) != h);
  }

  TEST_CASE("true prior counts annotated pixels only") {
    const auto g = testing::draw({"..22", "1122", "1133"});
    CHECK(true_prior(g, 2) == 4.0 / 10.0);
    CHECK(class_count(g) == 3);
    CHECK_THROWS_AS(true_prior(g, 5), DataError);
  }

  TEST_CASE("evaluation universe leaves out class 0, labelled positives and validation") {
    const auto g = testing::draw({"..22", "1122", "1133"});
    const LabelState labels(3, 4, {{0, 2}});
    ValidationSet v;
    v.pixels = {{1, 0}, {1, 3}};
    v.truth = {0, 1};
    v.annotated = {1, 1};
    std::vector<double> scores{0.1, 0.1, 0.9, 0.8, 0.2, 0.3, 0.7, 0.6, 0.1, 0.4, 0.5, 0.2};
    const auto ev = evaluate_map(scores, g, 2, labels, &v, 0.4, 1.0, 1.0);
    CHECK(ev.universe == 7);
    CHECK(ev.mask == std::vector<std::uint8_t>{0, 0, 0, 1, 0, 1, 1, 0, 1, 1, 1, 1});
    REQUIRE(ev.operating_point);
    CHECK(ev.threshold == 0.6);
    CHECK(ev.report.counts.tp == 2);
    CHECK(ev.report.counts.fp == 0);
    CHECK(ev.report.counts.fn == 0);
    CHECK(ev.report.counts.tn == 5);
    CHECK(*ev.report.auc == 1.0);
  }

  TEST_CASE("scores f32 round trip and length check") {
    testing::TempDir dir("f32");
    const std::vector<double> s{0.25, 0.5, 1.0 / 3.0};
    write_scores_f32(dir / "s.f32", s);
    const auto back = read_scores_f32(dir / "s.f32", 3);
    CHECK(back[0] == 0.25);
    CHECK(back[2] == static_cast<double>(static_cast<float>(1.0 / 3.0)));
    CHECK_THROWS_AS(read_scores_f32(dir / "s.f32", 4), DataError);
  }

  TEST_CASE("a rerun reproduces the report byte for byte") {
    testing::TempDir a("runa"), b("runb");
    const auto c = quick();
    const auto ra = run_experiment(c, a.path());
    const auto rb = run_experiment(c, b.path());
    CHECK(testing::read_text(a / "report.json") == testing::read_text(b / "report.json"));
    CHECK(testing::read_text(a / "scores.f32") == testing::read_text(b / "scores.f32"));
    CHECK(ra.evaluation.report.f_score == rb.evaluation.report.f_score);
    CHECK(ra.pi_p_source == "ground_truth");
    CHECK(std::abs(ra.pi_p - 0.109375) <= 1e-12);
  }

  TEST_CASE("every output carries the config hash and seed") {
    testing::TempDir dir("stamp");
    const auto c = quick({{"seed", 5}});
    const auto r = run_experiment(c, dir.path());
    const auto hash = r.config_hash;
    for (const char* name : {"config.json", "report.json", "epochs.json"}) {
      const auto j = json::parse(testing::read_text(dir / name));
      CHECK(j["config_hash"] == hash);
      if (j.contains("seed")) CHECK(j["seed"] == 5);
    }
    CHECK(json::parse(testing::read_text(dir / "config.json"))["seed"] == 5);
    const std::string stamp = "config_hash=" + hash + " seed=5";
    CHECK(testing::read_text(dir / "scores.pgm").find(stamp) != std::string::npos);
    for (const char* name : {"prediction.png", "confusion.png", "training_data.png"}) {
      const auto bytes = testing::read_text(dir / name);
      const auto img = decode_png_rgb(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
      std::map<std::string, std::string> text(img.text.begin(), img.text.end());
      CHECK(text["config_hash"] == hash);
      CHECK(text["seed"] == "5");
    }
    CHECK(LabelState::from_json(testing::read_text(dir / "labels.json")).positive_count() > 0);
    CHECK(Classifier::load(dir / "classifier.pnch").input_size() == 72);
  }

  TEST_CASE("pn_pu report names the cluster count") {
    testing::TempDir dir("pn");
    const auto r = run_experiment(quick({{"method", "pn_pu"}}), dir.path());
    CHECK(r.report["training"]["clusters"] == 3);
    CHECK(r.report["training"]["negatives"] == r.train.positive_examples);
    const auto nn = run_experiment(quick(), dir.path());
    CHECK(nn.report["training"]["clusters"].is_null());
  }

  TEST_CASE("given labels bypass the annotator and must match the scene") {
    testing::TempDir dir("given");
    const LabelState l(64, 64, {{20, 10}, {21, 10}, {22, 11}});
    auto flags = quick_flags();
    flags["labels"] = json::parse(l.to_json());
    const auto c = resolve_config(json::object(), flags);
    const auto r = run_experiment(c, dir.path());
    CHECK(r.train.positive_examples == 3);
    flags["labels"] = json::parse(LabelState(8, 8, {{1, 1}}).to_json());
    CHECK_THROWS_AS(run_experiment(resolve_config(json::object(), flags), dir.path()), DataError);
  }

  TEST_CASE("prior sweep") {
    testing::TempDir dir("sweep");
    CHECK_THROWS_AS(pi_p_sweep(quick(), {}, dir.path()), ConfigError);
    CHECK_THROWS_AS(pi_p_sweep(quick(), {0.1, 1.0}, dir.path()), ConfigError);
    const auto rows = pi_p_sweep(quick({{"train", {{"epochs", 2}}}}), {0.30, 0.05, 0.10, 0.20, 0.15, 0.25}, dir.path());
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(std::abs(rows[i].pi_p - 0.05 * static_cast<double>(i + 1)) <= 1e-12);
      CHECK(rows[i].auc);
      CHECK_FALSE(rows[i].is_true);
    }
    const auto csv = testing::read_text(dir / "sweep.csv");
    CHECK(csv.rfind("pi_p,precision,recall,f_score,auc,is_true,true_pi_p\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(csv.find(",0.109375\n") != std::string::npos);
  }

#ifdef PUNCH_CLI
  TEST_CASE("cli stages reproduce a one-shot run") {
    testing::TempDir dir("cli");
    const std::string cli = shell_quote(PUNCH_CLI);
    const std::string common = " --preset synthetic --unlabelled 600 --epochs 4 --set 'train.hidden=[8]' --seed 3";
    const std::string d = dir.path().string();
    auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); };
    REQUIRE(sh(cli + " run" + common + " -o " + shell_quote(d + "/run")) == 0);
    REQUIRE(sh(cli + " train" + common + " -o " + shell_quote(d + "/train")) == 0);
    REQUIRE(sh(cli + " predict" + common + " --model " + shell_quote(d + "/train/classifier.pnch") + " -o " +
               shell_quote(d + "/pred")) == 0);
    REQUIRE(sh(cli + " eval" + common + " --scores " + shell_quote(d + "/pred/scores.f32") + " -o " +
               shell_quote(d + "/eval.json")) == 0);
    CHECK(testing::read_text(dir / "run/classifier.pnch") == testing::read_text(dir / "train/classifier.pnch"));
    CHECK(testing::read_text(dir / "run/scores.f32") == testing::read_text(dir / "pred/scores.f32"));
    CHECK(testing::read_text(dir / "run/epochs.json") == testing::read_text(dir / "train/epochs.json"));
    const auto run = json::parse(testing::read_text(dir / "run/report.json"));
    const auto ev = json::parse(testing::read_text(dir / "eval.json"));
    CHECK(ev["config_hash"] == run["config_hash"]);
    CHECK(ev["evaluation_universe"]["pixels"] == run["evaluation_universe"]["pixels"]);
    CHECK(std::abs(ev["metrics"]["auc"].get<double>() - run["metrics"]["auc"].get<double>()) < 1e-3);
    const int rc = sh(cli + " run --epochs 0");
    CHECK(WIFEXITED(rc));
    CHECK(WEXITSTATUS(rc) == 2);
  }
#endif
}
