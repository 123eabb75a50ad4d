#include "punch/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "punch/clustering.hpp"
#include "punch/error.hpp"
#include "punch/hash.hpp"
#include "punch/image_io.hpp"
#include "punch/rng.hpp"

namespace punch {

using nlohmann::json;

namespace {

enum SeedTag : std::uint64_t { kTrain = 10, kValidation = 11 };

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field " + where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section " + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      throw ConfigError("unknown config field " + where + "." + k);
    }
  }
}

}  // namespace

const char* to_string(Method m) { return m == Method::nnre_pu ? "nnre_pu" : "pn_pu"; }

Method method_from_string(const std::string& s) {
  if (s == "nnre_pu") return Method::nnre_pu;
  if (s == "pn_pu") return Method::pn_pu;
  throw ConfigError("unknown method '" + s + "' (expected nnre_pu or pn_pu)");
}

void ExperimentConfig::validate() const {
  if (scene_path.empty() && !synthetic) throw ConfigError("config needs a scene path or a synthetic spec");
  if (positive_class == 0) throw ConfigError("positive class 0 is reserved for unannotated pixels");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("annotation fraction must lie in (0, 1]");
  if (pi_p && !(*pi_p > 0.0 && *pi_p < 1.0)) throw ConfigError("pi_p must lie in (0, 1)");
  retrieval.validate();
  if (clusters < 0 || clusters == 1) throw ConfigError("clusters must be 0 (class count) or at least 2");
  if (patch_size < 1 || patch_size % 2 == 0) throw ConfigError("patch_size must be a positive odd integer");
  if (unlabelled_samples == 0) throw ConfigError("unlabelled_samples must be positive");
  if (!(alpha > 0.0 && beta > 0.0)) throw ConfigError("costs alpha and beta must be positive");
  train.validate();
}

json to_json(const ExperimentConfig& c) {
  json synth = nullptr;
  if (c.synthetic) synth = *c.synthetic;
  const auto& t = c.train;
  return {
      {"preset", c.preset},
      {"scene", {{"path", c.scene_path}, {"synthetic", synth}, {"seed", c.scene_seed}}},
      {"positive_class", c.positive_class},
      {"labels", c.labels ? json::parse(c.labels->to_json()) : json(nullptr)},
      {"annotation", {{"model", to_string(c.annotation)}, {"fraction", c.fraction}, {"seed", c.annotation_seed}}},
      {"method", to_string(c.method)},
      {"pi_p", c.pi_p ? json(*c.pi_p) : json("true")},
      {"retrieval",
       {{"baseline", c.retrieval.baseline},
        {"temperature", c.retrieval.temperature},
        {"epsilon", c.retrieval.epsilon},
        {"model", to_string(c.retrieval.model)}}},
      {"clusters", c.clusters},
      {"patch_size", c.patch_size},
      {"unlabelled_samples", c.unlabelled_samples},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"validation_fraction", t.validation_fraction},
        {"early_stop", to_string(t.early_stop)},
        {"patience", t.patience},
        {"hidden", t.hidden},
        {"activation", to_string(t.activation)},
        {"surrogate", to_string(t.nnre_surrogate)},
        {"gamma", t.gamma}}},
      {"costs", {{"alpha", c.alpha}, {"beta", c.beta}}},
      {"seed", c.seed},
      {"cache_dir", c.cache_dir},
  };
}

ExperimentConfig experiment_config_from_json(const json& j) {
  reject_unknown(j,
                 {"preset", "scene", "positive_class", "labels", "annotation", "method", "pi_p", "retrieval",
                  "clusters", "patch_size", "unlabelled_samples", "train", "costs", "seed", "cache_dir",
                  "config_hash"},
                 "config");
  ExperimentConfig c;
  if (j.contains("preset")) c.preset = get<std::string>(j, "preset", "config");
  if (j.contains("scene")) {
    const auto& s = j["scene"];
    reject_unknown(s, {"path", "synthetic", "seed"}, "scene");
    if (s.contains("path")) c.scene_path = get<std::string>(s, "path", "scene");
    if (s.contains("synthetic") && !s["synthetic"].is_null()) {
      try {
        c.synthetic = s["synthetic"].get<SyntheticSpec>();
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config field scene.synthetic: ") + e.what());
      }
    }
    if (s.contains("seed")) c.scene_seed = get<std::uint64_t>(s, "seed", "scene");
  }
  if (j.contains("positive_class")) c.positive_class = get<std::uint16_t>(j, "positive_class", "config");
  if (j.contains("labels") && !j["labels"].is_null()) {
    try {
      c.labels = LabelState::from_json(j["labels"].dump());
    } catch (const DataError& e) {
      throw ConfigError(std::string("config field labels: ") + e.what());
    }
  }
  if (j.contains("annotation")) {
    const auto& a = j["annotation"];
    reject_unknown(a, {"model", "fraction", "seed"}, "annotation");
    if (a.contains("model")) c.annotation = annotation_model_from_string(get<std::string>(a, "model", "annotation"));
    if (a.contains("fraction")) c.fraction = get<double>(a, "fraction", "annotation");
    if (a.contains("seed")) c.annotation_seed = get<std::uint64_t>(a, "seed", "annotation");
  }
  if (j.contains("method")) c.method = method_from_string(get<std::string>(j, "method", "config"));
  if (j.contains("pi_p")) {
    const auto& p = j["pi_p"];
    if (p.is_string()) {
      if (p.get<std::string>() != "true") throw ConfigError("pi_p must be a number or \"true\"");
    } else if (p.is_number()) {
      c.pi_p = p.get<double>();
    } else if (!p.is_null()) {
      throw ConfigError("pi_p must be a number or \"true\"");
    }
  }
  if (j.contains("retrieval")) {
    const auto& r = j["retrieval"];
    reject_unknown(r, {"baseline", "temperature", "epsilon", "model"}, "retrieval");
    if (r.contains("baseline")) c.retrieval.baseline = get<double>(r, "baseline", "retrieval");
    if (r.contains("temperature")) c.retrieval.temperature = get<double>(r, "temperature", "retrieval");
    if (r.contains("epsilon")) c.retrieval.epsilon = get<double>(r, "epsilon", "retrieval");
    if (r.contains("model")) c.retrieval.model = retrieval_model_from_string(get<std::string>(r, "model", "retrieval"));
  }
  if (j.contains("clusters")) c.clusters = get<int>(j, "clusters", "config");
  if (j.contains("patch_size")) c.patch_size = get<int>(j, "patch_size", "config");
  if (j.contains("unlabelled_samples")) c.unlabelled_samples = get<std::size_t>(j, "unlabelled_samples", "config");
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t,
                   {"epochs", "batch_size", "learning_rate", "validation_fraction", "early_stop", "patience",
                    "hidden", "activation", "surrogate", "gamma"},
                   "train");
    auto& tc = c.train;
    if (t.contains("epochs")) tc.epochs = get<int>(t, "epochs", "train");
    if (t.contains("batch_size")) tc.batch_size = get<std::size_t>(t, "batch_size", "train");
    if (t.contains("learning_rate")) tc.learning_rate = get<double>(t, "learning_rate", "train");
    if (t.contains("validation_fraction")) tc.validation_fraction = get<double>(t, "validation_fraction", "train");
    if (t.contains("early_stop")) tc.early_stop = early_stop_from_string(get<std::string>(t, "early_stop", "train"));
    if (t.contains("patience")) tc.patience = get<int>(t, "patience", "train");
    if (t.contains("hidden")) tc.hidden = get<std::vector<std::size_t>>(t, "hidden", "train");
    if (t.contains("activation")) tc.activation = activation_from_string(get<std::string>(t, "activation", "train"));
    if (t.contains("surrogate")) tc.nnre_surrogate = surrogate_from_string(get<std::string>(t, "surrogate", "train"));
    if (t.contains("gamma")) tc.gamma = get<double>(t, "gamma", "train");
  }
  if (j.contains("costs")) {
    const auto& k = j["costs"];
    reject_unknown(k, {"alpha", "beta"}, "costs");
    if (k.contains("alpha")) c.alpha = get<double>(k, "alpha", "costs");
    if (k.contains("beta")) c.beta = get<double>(k, "beta", "costs");
  }
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config");
  if (j.contains("cache_dir")) c.cache_dir = get<std::string>(j, "cache_dir", "config");
  return c;
}

std::vector<std::string> preset_names() { return {"indian-pines-like", "salinas-like", "pavia-like", "synthetic"}; }

json preset_patch(const std::string& name) {
  auto bt = [](double b, double t) { return json{{"retrieval", {{"baseline", b}, {"temperature", t}}}}; };
  if (name.empty()) return json::object();
  if (name == "indian-pines-like") return bt(32.0, 24.0);
  if (name == "salinas-like") return bt(26.0, 22.0);
  if (name == "pavia-like") return bt(26.0, 14.0);
  if (name == "synthetic") {
    // Indian Pines settings scaled from a 145-pixel side to 64.
    auto j = bt(32.0 * 64.0 / 145.0, 24.0 * 64.0 / 145.0);
    j["scene"] = {{"path", ""}, {"synthetic", reference_synthetic_spec()}};
    j["positive_class"] = 2;
    j["train"] = {{"learning_rate", 0.1}};
    return j;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

ExperimentConfig resolve_config(const json& file, const json& flags) {
  if (!file.is_object() || !flags.is_object()) throw ConfigError("config layers must be JSON objects");
  std::string preset;
  if (file.contains("preset")) preset = get<std::string>(file, "preset", "config");
  if (flags.contains("preset")) preset = get<std::string>(flags, "preset", "config");
  json merged = to_json(ExperimentConfig{});
  merged.merge_patch(preset_patch(preset));
  merged.merge_patch(file);
  merged.merge_patch(flags);
  merged["preset"] = preset;
  auto c = experiment_config_from_json(merged);
  c.validate();
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  auto j = to_json(c);
  j.erase("cache_dir");
  Fnv1a h;
  h.update(j.dump());
  return h.hex();
}

PreparedScene prepare_scene(const ExperimentConfig& c) {
  Scene s = c.scene_path.empty() ? make_synthetic_scene(*c.synthetic, c.scene_seed) : load_scene(c.scene_path);
  return {normalize(s.cube), std::move(s.ground_truth)};
}

LabelState resolve_labels(const ExperimentConfig& c, const PreparedScene& scene) {
  if (c.labels) {
    if (c.labels->rows() != scene.cube.rows() || c.labels->cols() != scene.cube.cols()) {
      throw DataError("labels are " + std::to_string(c.labels->rows()) + "x" + std::to_string(c.labels->cols()) +
                      " but the scene is " + std::to_string(scene.cube.rows()) + "x" +
                      std::to_string(scene.cube.cols()));
    }
    return *c.labels;
  }
  if (!scene.ground_truth) throw DataError("simulated annotation needs ground truth; supply labels instead");
  AnnotationRequest req;
  req.positive_class = c.positive_class;
  req.fraction = c.fraction;
  req.model = c.annotation;
  req.seed = c.annotation_seed;
  return annotate(*scene.ground_truth, req);
}

double true_prior(const ClassGrid& gt, std::uint16_t positive_class) {
  std::size_t pos = 0, annotated = 0;
  for (auto id : gt.ids) {
    annotated += id != 0;
    pos += id == positive_class;
  }
  if (pos == 0) throw DataError("positive class " + std::to_string(positive_class) + " is absent from ground truth");
  return static_cast<double>(pos) / static_cast<double>(annotated);
}

int class_count(const ClassGrid& gt) {
  std::set<std::uint16_t> ids(gt.ids.begin(), gt.ids.end());
  ids.erase(0);
  return static_cast<int>(ids.size());
}

Evaluation evaluate_map(std::span<const double> scores, const ClassGrid& gt, std::uint16_t positive_class,
                        const LabelState& labels, const ValidationSet* validation, double pi_p, double alpha,
                        double beta) {
  const std::size_t n = gt.ids.size();
  if (scores.size() != n || labels.rows() != gt.rows || labels.cols() != gt.cols) {
    throw DataError("scores, labels and ground truth are not congruent");
  }
  Evaluation ev;
  if (validation) {
    std::vector<double> vs;
    std::vector<std::uint8_t> vt;
    for (std::size_t i = 0; i < validation->pixels.size(); ++i) {
      if (!validation->annotated[i]) continue;
      const auto& p = validation->pixels[i];
      vs.push_back(scores[static_cast<std::size_t>(p.row) * gt.cols + p.col]);
      vt.push_back(validation->truth[i]);
    }
    const auto npos = static_cast<std::size_t>(std::count(vt.begin(), vt.end(), std::uint8_t{1}));
    if (npos > 0 && npos < vt.size()) {
      ev.operating_point = select_operating_point(roc_and_auc(vs, vt).curve, pi_p, alpha, beta);
      ev.threshold = ev.operating_point->threshold;
    }
  }

  std::vector<std::uint8_t> truth(n);
  ev.mask.assign(n, 0);
  ev.predicted.resize(n);
  std::vector<double> us;
  std::vector<std::uint8_t> ut;
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = gt.ids[i] == positive_class;
    ev.predicted[i] = scores[i] >= ev.threshold;
    const PixelCoord p{static_cast<int>(i / gt.cols), static_cast<int>(i % gt.cols)};
    const bool in = gt.ids[i] != 0 && !labels.is_positive(i) && !(validation && validation->contains(p));
    ev.mask[i] = in;
    if (in) {
      us.push_back(scores[i]);
      ut.push_back(truth[i]);
    }
  }
  ev.universe = us.size();
  ev.report = prf(ev.predicted, truth, ev.mask);
  const auto upos = static_cast<std::size_t>(std::count(ut.begin(), ut.end(), std::uint8_t{1}));
  if (upos > 0 && upos < ut.size()) ev.report.auc = roc_and_auc(us, ut).auc;
  return ev;
}

ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                const ProgressFn& progress) {
  c.validate();
  return run_experiment(c, prepare_scene(c), out_dir, progress);
}

json epoch_log_json(const std::vector<EpochMetrics>& log, const std::string& hash, std::uint64_t seed) {
  json epochs = json::array();
  for (const auto& m : log) {
    epochs.push_back({{"epoch", m.epoch},
                      {"train_loss", m.train_loss},
                      {"val_loss", opt(m.val_loss)},
                      {"val_precision", opt(m.val_precision)},
                      {"val_recall", opt(m.val_recall)},
                      {"defused_batches", m.defused_batches}});
  }
  return {{"config_hash", hash}, {"seed", seed}, {"epochs", epochs}};
}

RunSetup setup_run(const ExperimentConfig& c, const PreparedScene& scene) {
  c.validate();
  const ClassGrid* gt = scene.ground_truth ? &*scene.ground_truth : nullptr;
  RunSetup s;
  s.labels = resolve_labels(c, scene);
  if (s.labels.positive_count() == 0) throw DataError("no labelled positives");
  s.validation =
      split_validation(s.labels, gt, c.positive_class, c.train.validation_fraction, derive_seed(c.seed, kValidation));
  s.pi_p = c.pi_p;
  s.pi_p_source = "given";
  if (!s.pi_p && gt) {
    s.pi_p = true_prior(*gt, c.positive_class);
    s.pi_p_source = "ground_truth";
  }
  if (!s.pi_p) s.pi_p_source = "none";
  if (!s.pi_p && c.method == Method::nnre_pu) throw ConfigError("nnre_pu needs pi_p when the scene has no ground truth");
  return s;
}

TrainedModel train_model(const ExperimentConfig& c, const PreparedScene& scene, const RunSetup& setup,
                         const ProgressFn& progress) {
  const ClassGrid* gt = scene.ground_truth ? &*scene.ground_truth : nullptr;
  TrainConfig tc = c.train;
  tc.seed = derive_seed(c.seed, kTrain);
  TrainingContext ctx{scene.cube, setup.labels, &setup.validation, c.patch_size, progress};

  TrainedModel out;
  if (c.method == Method::nnre_pu) {
    out.train = train_nnre_pu(ctx, *setup.pi_p, tc, c.unlabelled_samples);
    return out;
  }
  int k = c.clusters;
  if (k == 0) {
    if (!gt) throw ConfigError("clusters must be set when the scene has no ground truth");
    k = class_count(*gt);
    if (k < 2) throw DataError("ground truth has fewer than two classes; set clusters explicitly");
  }
  const auto clusters =
      c.cache_dir.empty() ? kmeans(scene.cube, k, c.seed) : ClusterCache(c.cache_dir).get_or_compute(scene.cube, k, c.seed);
  auto pn = train_pn_pu(ctx, clusters, c.retrieval, tc);
  out.train = std::move(pn.train);
  out.negatives = std::move(pn.negatives);
  out.clusters = k;
  return out;
}

void write_scores_f32(const std::filesystem::path& path, std::span<const double> scores) {
  std::ofstream out(path, std::ios::binary);
  for (double s : scores) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(s));
    const char b[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                       static_cast<char>((bits >> 16) & 0xFF), static_cast<char>(bits >> 24)};
    out.write(b, 4);
  }
  if (!out) throw DataError("cannot write " + path.string());
}

std::vector<double> read_scores_f32(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> scores;
  unsigned char b[4];
  while (in.read(reinterpret_cast<char*>(b), 4)) {
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    scores.push_back(std::bit_cast<float>(bits));
  }
  if (in.gcount() != 0 || scores.size() != expected) {
    throw DataError(path.string() + " holds " + std::to_string(scores.size()) + " scores, expected " +
                    std::to_string(expected));
  }
  return scores;
}

namespace {

ExperimentResult run_pipeline(const ExperimentConfig& c, const PreparedScene& scene,
                              const std::filesystem::path& out_dir, const ProgressFn& progress) {
  c.validate();
  ExperimentResult res;
  res.config_hash = config_hash(c);
  const ClassGrid* gt = scene.ground_truth ? &*scene.ground_truth : nullptr;

  auto setup = setup_run(c, scene);
  const auto& labels = setup.labels;
  const auto& validation = setup.validation;
  const auto& pi = setup.pi_p;
  res.pi_p = pi.value_or(0.0);
  res.pi_p_source = setup.pi_p_source;
  auto trained = train_model(c, scene, setup, progress);
  res.train = std::move(trained.train);
  const auto& negatives = trained.negatives;
  const int clusters = trained.clusters;
  // Predict with the parameters exactly as classifier.pnch stores them.
  for (double& p : res.train.classifier.parameters()) p = static_cast<float>(p);

  res.map = predict_map(res.train.classifier, scene.cube, c.patch_size, 0.5);
  if (gt) {
    res.evaluation = evaluate_map(res.map.scores, *gt, c.positive_class, labels, &validation, res.pi_p, c.alpha, c.beta);
    res.map.positive = res.evaluation.predicted;
  }

  const std::string stamp = "config_hash=" + res.config_hash + " seed=" + std::to_string(c.seed);
  const std::vector<std::pair<std::string, std::string>> text{{"config_hash", res.config_hash},
                                                              {"seed", std::to_string(c.seed)}};

  const auto& ev = res.evaluation;
  const auto& tr = res.train;
  res.report = {
      {"config_hash", res.config_hash},
      {"seed", c.seed},
      {"method", to_string(c.method)},
      {"positive_class", c.positive_class},
      {"pi_p", pi ? json(*pi) : json(nullptr)},
      {"pi_p_source", res.pi_p_source},
      {"threshold", ev.threshold},
      {"operating_point", ev.operating_point ? to_json(*ev.operating_point) : json(nullptr)},
      {"metrics", gt ? to_json(ev.report) : json(nullptr)},
      {"evaluation_universe",
       {{"definition", "ground-truth-annotated pixels, excluding labelled positives and the validation split"},
        {"pixels", ev.universe}}},
      {"validation", {{"pixels", validation.pixels.size()}, {"annotated", validation.annotated_count()}}},
      {"training",
       {{"positives", tr.positive_examples},
        {c.method == Method::nnre_pu ? "unlabelled" : "negatives", tr.other_examples},
        {"epochs_run", tr.log.size()},
        {"best_epoch", tr.best_epoch},
        {"stopped_early", tr.stopped_early},
        {"clusters", c.method == Method::pn_pu ? json(clusters) : json(nullptr)}}},
  };

  std::filesystem::create_directories(out_dir);
  auto cfg = to_json(c);
  cfg["config_hash"] = res.config_hash;
  write_text(out_dir / "config.json", cfg.dump(2) + "\n");
  write_text(out_dir / "labels.json", labels.to_json());
  write_text(out_dir / "report.json", res.report.dump(2) + "\n");

  write_text(out_dir / "epochs.json", epoch_log_json(tr.log, res.config_hash, c.seed).dump(2) + "\n");

  const int rows = scene.cube.rows(), cols = scene.cube.cols();
  write_pgm16(out_dir / "scores.pgm", rows, cols, res.map.scores, stamp);
  write_scores_f32(out_dir / "scores.f32", res.map.scores);
  Image pred{rows, cols, PngKind::gray8, {}, {}, text};
  for (auto p : res.map.positive) pred.pixels.push_back(p ? 255 : 0);
  write_png(out_dir / "prediction.png", pred);
  if (gt) {
    auto conf = confusion_image(rows, cols, ev.report.confusion_map);
    conf.text = text;
    write_png(out_dir / "confusion.png", conf);
  }
  auto td = training_data_image(scene.cube, labels.positives(), negatives);
  td.text = text;
  write_png(out_dir / "training_data.png", td);
  tr.classifier.save(out_dir / "classifier.pnch");
  return res;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c, const PreparedScene& scene,
                                const std::filesystem::path& out_dir, const ProgressFn& progress) {
  try {
    std::filesystem::remove(out_dir / "FAILED");
    return run_pipeline(c, scene, out_dir, progress);
  } catch (const std::exception& e) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream(out_dir / "FAILED") << e.what() << "\n";
    throw;
  }
}

std::vector<SweepRow> pi_p_sweep(const ExperimentConfig& c, std::vector<double> values,
                                 const std::filesystem::path& out_dir) {
  if (values.empty()) throw ConfigError("pi_p sweep needs at least one value");
  std::sort(values.begin(), values.end());
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) throw ConfigError("duplicate pi_p in sweep");
  for (double v : values) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("sweep pi_p values must lie in (0, 1)");
  }
  c.validate();
  const auto scene = prepare_scene(c);
  std::optional<double> truth;
  if (scene.ground_truth) truth = true_prior(*scene.ground_truth, c.positive_class);

  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentConfig run = c;
    run.method = Method::nnre_pu;
    run.pi_p = v;
    std::ostringstream name;
    name << "pi_p_" << v;
    const auto r = run_experiment(run, scene, out_dir / name.str());
    const auto& m = r.evaluation.report;
    rows.push_back({v, m.precision, m.recall, m.f_score, m.auc, truth && std::abs(v - *truth) < 1e-12});
  }
  write_text(out_dir / "sweep.csv", sweep_csv(rows, truth));
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, std::optional<double> true_pi_p) {
  std::ostringstream out;
  out.precision(17);
  auto cell = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  out << "pi_p,precision,recall,f_score,auc,is_true,true_pi_p\n";
  for (const auto& r : rows) {
    out << r.pi_p << ',';
    cell(r.precision);
    out << ',';
    cell(r.recall);
    out << ',';
    cell(r.f_score);
    out << ',';
    cell(r.auc);
    out << ',' << (r.is_true ? 1 : 0) << ',';
    cell(true_pi_p);
    out << '\n';
  }
  return out.str();
}

}  // namespace punch
