// punch: command-line front end for scenes, annotation, training and
// evaluation. Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric.

#include <CLI11.hpp>

#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "punch/clustering.hpp"
#include "punch/error.hpp"
#include "punch/image_io.hpp"
#include "punch/service.hpp"

using nlohmann::json;
using namespace punch;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Sets a dotted path ("train.epochs") inside a JSON patch.
void set_path(json& j, const std::string& dotted, json value) {
  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad config path '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    if (!(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

// Experiment options shared by most subcommands. Only flags that were
// actually given land in the patch, so they override the file and nothing else.
struct ExperimentArgs {
  std::string config_file;
  json flags = json::object();

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "experiment config JSON")->check(CLI::ExistingFile);
    auto str = [&](const char* name, const char* path, const char* help) {
      app->add_option_function<std::string>(name, [this, path](const std::string& v) { set_path(flags, path, v); }, help);
    };
    auto num = [&](const char* name, const char* path, const char* help) {
      app->add_option_function<double>(name, [this, path](double v) { set_path(flags, path, v); }, help);
    };
    auto integer = [&](const char* name, const char* path, const char* help) {
      app->add_option_function<std::int64_t>(name, [this, path](std::int64_t v) { set_path(flags, path, v); }, help);
    };
    auto count = [&](const char* name, const char* path, const char* help) {
      app->add_option_function<std::uint64_t>(name, [this, path](std::uint64_t v) { set_path(flags, path, v); }, help);
    };
    str("--preset", "preset", "indian-pines-like | salinas-like | pavia-like | synthetic");
    str("--scene", "scene.path", "scene header (hscn-1 JSON)");
    count("--scene-seed", "scene.seed", "synthetic scene seed");
    integer("--class", "positive_class", "positive class id");
    app->add_option_function<std::string>(
        "--labels", [this](const std::string& p) { flags["labels"] = read_json_file(p); }, "labels JSON file");
    str("--annotation", "annotation.model", "uniform | blob");
    num("--fraction", "annotation.fraction", "fraction of positives to label");
    count("--annotation-seed", "annotation.seed", "annotator seed");
    str("--method", "method", "nnre_pu | pn_pu");
    app->add_option_function<std::string>(
        "--pi-p",
        [this](const std::string& v) {
          if (v == "true") {
            flags["pi_p"] = "true";
            return;
          }
          try {
            flags["pi_p"] = std::stod(v);
          } catch (const std::exception&) {
            throw ConfigError("--pi-p takes a number or 'true'");
          }
        },
        "class prior, or 'true' for the ground-truth prior");
    str("--retrieval", "retrieval.model", "spatial | spectral | hybrid");
    num("--baseline", "retrieval.baseline", "spatial baseline b (pixels)");
    num("--temperature", "retrieval.temperature", "spatial temperature T (pixels)");
    num("--epsilon", "retrieval.epsilon", "spectral epsilon");
    integer("--clusters", "clusters", "k-means clusters (0 = ground-truth class count)");
    integer("--patch-size", "patch_size", "odd patch side");
    count("--unlabelled", "unlabelled_samples", "unlabelled sample count for nnre_pu");
    integer("--epochs", "train.epochs", "epoch cap");
    integer("--batch-size", "train.batch_size", "batch size");
    num("--lr", "train.learning_rate", "learning rate");
    num("--validation-fraction", "train.validation_fraction", "held-out share of unlabelled pixels");
    str("--early-stop", "train.early_stop", "val_loss_rise | val_recall_drop | none");
    integer("--patience", "train.patience", "early-stop patience (epochs)");
    str("--surrogate", "train.surrogate", "sigmoid | logistic");
    num("--gamma", "train.gamma", "defuse step scale");
    num("--alpha", "costs.alpha", "false-positive cost");
    num("--beta", "costs.beta", "false-negative cost");
    count("--seed", "seed", "experiment seed");
    str("--cache-dir", "cache_dir", "clustering cache directory");
    app->add_option_function<std::vector<std::string>>(
        "--set",
        [this](const std::vector<std::string>& items) {
          for (const auto& item : items) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key.path=value");
            json value;
            try {
              value = json::parse(item.substr(eq + 1));
            } catch (const json::exception&) {
              value = item.substr(eq + 1);
            }
            set_path(flags, item.substr(0, eq), std::move(value));
          }
        },
        "override any config field, e.g. --set train.hidden=[64,32]");
  }

  ExperimentConfig resolve() const {
    return resolve_config(config_file.empty() ? json::object() : read_json_file(config_file), flags);
  }
};

void print_metrics(const EvalReport& r) {
  auto show = [](const char* name, const std::optional<double>& v) {
    std::cout << name << '=';
    if (v) {
      std::cout << *v;
    } else {
      std::cout << "n/a";
    }
    std::cout << ' ';
  };
  show("precision", r.precision);
  show("recall", r.recall);
  show("f_score", r.f_score);
  show("auc", r.auc);
  std::cout << '\n';
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("not a number: " + item);
    }
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"PU learning for hyperspectral target detection"};
  app.require_subcommand(1);

  // convert
  std::string raw, sidecar, gt_raw, out_path;
  auto* convert = app.add_subcommand("convert", "ingest a dense array dump into an hscn-1 scene");
  convert->add_option("--raw", raw, "raw array file")->required()->check(CLI::ExistingFile);
  convert->add_option("--sidecar", sidecar, "layout JSON")->required()->check(CLI::ExistingFile);
  convert->add_option("--gt", gt_raw, "u16le ground truth")->check(CLI::ExistingFile);
  convert->add_option("-o,--out", out_path, "output header path")->required();
  convert->callback([&] {
    const auto scene = convert_dense(raw, sidecar, gt_raw.empty() ? std::nullopt : std::optional<std::filesystem::path>(gt_raw));
    save_scene(out_path, scene);
    std::cout << "wrote " << out_path << " (" << scene.cube.rows() << "x" << scene.cube.cols() << "x"
              << scene.cube.channels() << ")\n";
  });

  // synth
  std::string spec_file;
  double confuser = 0.0;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic labelled scene");
  synth->add_option("--spec", spec_file, "SyntheticSpec JSON (default: reference layout)")->check(CLI::ExistingFile);
  synth->add_option("--confuser", confuser, "reference layout with class 3 this close to the query class");
  synth->add_option("--seed", synth_seed, "noise seed");
  synth->add_option("-o,--out", out_path, "output header path")->required();
  synth->callback([&] {
    SyntheticSpec spec = reference_synthetic_spec();
    if (!spec_file.empty()) {
      try {
        spec = read_json_file(spec_file).get<SyntheticSpec>();
      } catch (const json::exception& e) {
        throw ConfigError(spec_file + ": " + e.what());
      }
    } else if (synth->count("--confuser")) {
      spec = confuser_synthetic_spec(confuser);
    }
    save_scene(out_path, make_synthetic_scene(spec, synth_seed));
    std::cout << "wrote " << out_path << "\n";
  });

  // annotate
  ExperimentArgs annotate_args;
  auto* annotate_cmd = app.add_subcommand("annotate", "simulate an annotator and write labels JSON");
  annotate_args.attach(annotate_cmd);
  annotate_cmd->add_option("-o,--out", out_path, "labels output")->required();
  annotate_cmd->callback([&] {
    auto cfg = annotate_args.resolve();
    cfg.labels.reset();
    const auto scene = prepare_scene(cfg);
    const auto labels = resolve_labels(cfg, scene);
    write_text(out_path, labels.to_json());
    std::cout << "labelled " << labels.positive_count() << " pixels of class " << cfg.positive_class << "\n";
  });

  // cluster
  ExperimentArgs cluster_args;
  int k_flag = 0;
  auto* cluster_cmd = app.add_subcommand("cluster", "k-means over the normalized scene");
  cluster_args.attach(cluster_cmd);
  cluster_cmd->add_option("-k", k_flag, "cluster count (default: config clusters or ground-truth classes)");
  cluster_cmd->add_option("-o,--out", out_path, "assignment JSON output");
  cluster_cmd->callback([&] {
    const auto cfg = cluster_args.resolve();
    const auto scene = prepare_scene(cfg);
    int k = k_flag > 0 ? k_flag : cfg.clusters;
    if (k == 0 && scene.ground_truth) k = class_count(*scene.ground_truth);
    if (k < 1) throw ConfigError("cluster count must be given for scenes without ground truth");
    bool cached = false;
    const auto a = cfg.cache_dir.empty() ? kmeans(scene.cube, k, cfg.seed)
                                         : ClusterCache(cfg.cache_dir).get_or_compute(scene.cube, k, cfg.seed, {}, &cached);
    if (!out_path.empty()) {
      write_text(out_path, json{{"k", a.k},
                                {"rows", a.rows},
                                {"cols", a.cols},
                                {"seed", cfg.seed},
                                {"scene_hash", scene_hash(scene.cube)},
                                {"inertia", a.inertia},
                                {"iterations", a.iterations},
                                {"sizes", a.cluster_sizes()},
                                {"labels", a.labels}}
                                   .dump() +
                                   "\n");
    }
    std::cout << "k=" << a.k << " inertia=" << a.inertia << " iterations=" << a.iterations
              << (cached ? " (cached)" : "") << "\n";
  });

  // train
  ExperimentArgs train_args;
  std::string out_dir = "run";
  auto* train_cmd = app.add_subcommand("train", "train a classifier and save it with its epoch log");
  train_args.attach(train_cmd);
  train_cmd->add_option("-o,--out", out_dir, "output directory");
  train_cmd->callback([&] {
    const auto cfg = train_args.resolve();
    const auto scene = prepare_scene(cfg);
    const auto setup = setup_run(cfg, scene);
    const auto hash = config_hash(cfg);
    const auto trained = train_model(cfg, scene, setup, [](const EpochMetrics& m) {
      std::cerr << "epoch " << m.epoch << " loss " << m.train_loss;
      if (m.val_loss) std::cerr << " val " << *m.val_loss;
      std::cerr << "\n";
    });
    std::filesystem::create_directories(out_dir);
    auto cj = to_json(cfg);
    cj["config_hash"] = hash;
    write_text(std::filesystem::path(out_dir) / "config.json", cj.dump(2) + "\n");
    write_text(std::filesystem::path(out_dir) / "labels.json", setup.labels.to_json());
    write_text(std::filesystem::path(out_dir) / "epochs.json",
               epoch_log_json(trained.train.log, hash, cfg.seed).dump(2) + "\n");
    auto td = training_data_image(scene.cube, setup.labels.positives(), trained.negatives);
    td.text = {{"config_hash", hash}, {"seed", std::to_string(cfg.seed)}};
    write_png(std::filesystem::path(out_dir) / "training_data.png", td);
    trained.train.classifier.save(std::filesystem::path(out_dir) / "classifier.pnch");
    std::cout << "config_hash=" << hash << " epochs=" << trained.train.log.size()
              << " best_epoch=" << trained.train.best_epoch << "\n";
  });

  // predict
  ExperimentArgs predict_args;
  std::string model_path;
  double threshold = 0.5;
  auto* predict_cmd = app.add_subcommand("predict", "score every pixel with a saved classifier");
  predict_args.attach(predict_cmd);
  predict_cmd->add_option("--model", model_path, "classifier.pnch")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--threshold", threshold, "binary map threshold")->check(CLI::Range(0.0, 1.0));
  predict_cmd->add_option("-o,--out", out_dir, "output directory");
  predict_cmd->callback([&] {
    const auto cfg = predict_args.resolve();
    const auto scene = prepare_scene(cfg);
    const auto net = Classifier::load(model_path);
    const auto map = predict_map(net, scene.cube, cfg.patch_size, threshold);
    const auto hash = config_hash(cfg);
    const std::filesystem::path dir = out_dir;
    std::filesystem::create_directories(dir);
    write_pgm16(dir / "scores.pgm", map.rows, map.cols, map.scores,
                "config_hash=" + hash + " seed=" + std::to_string(cfg.seed));
    write_scores_f32(dir / "scores.f32", map.scores);
    Image pred{map.rows, map.cols, PngKind::gray8, {}, {}, {{"config_hash", hash}, {"seed", std::to_string(cfg.seed)}}};
    for (auto p : map.positive) pred.pixels.push_back(p ? 255 : 0);
    write_png(dir / "prediction.png", pred);
    std::size_t positives = 0;
    for (auto p : map.positive) positives += p;
    std::cout << positives << " of " << map.positive.size() << " pixels at or above " << threshold << "\n";
  });

  // eval
  ExperimentArgs eval_args;
  std::string scores_path;
  auto* eval_cmd = app.add_subcommand("eval", "operating point and metrics for a score map");
  eval_args.attach(eval_cmd);
  eval_cmd->add_option("--scores", scores_path, "scores.f32")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("-o,--out", out_path, "report JSON output");
  eval_cmd->callback([&] {
    const auto cfg = eval_args.resolve();
    const auto scene = prepare_scene(cfg);
    if (!scene.ground_truth) throw DataError("evaluation needs ground truth");
    const auto setup = setup_run(cfg, scene);
    const auto scores = read_scores_f32(scores_path, scene.cube.pixel_count());
    const double pi = setup.pi_p.value_or(0.0);
    const auto ev = evaluate_map(scores, *scene.ground_truth, cfg.positive_class, setup.labels, &setup.validation, pi,
                                 cfg.alpha, cfg.beta);
    const json report = {{"config_hash", config_hash(cfg)},
                         {"seed", cfg.seed},
                         {"pi_p", pi},
                         {"pi_p_source", setup.pi_p_source},
                         {"threshold", ev.threshold},
                         {"operating_point", ev.operating_point ? to_json(*ev.operating_point) : json(nullptr)},
                         {"metrics", to_json(ev.report)},
                         {"evaluation_universe", {{"pixels", ev.universe}}}};
    if (!out_path.empty()) write_text(out_path, report.dump(2) + "\n");
    print_metrics(ev.report);
  });

  // run
  ExperimentArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "annotate, train, predict and evaluate in one go");
  run_args.attach(run_cmd);
  run_cmd->add_option("-o,--out", out_dir, "run directory");
  run_cmd->callback([&] {
    const auto cfg = run_args.resolve();
    const auto r = run_experiment(cfg, out_dir);
    std::cout << "config_hash=" << r.config_hash << " pi_p=" << r.pi_p << " (" << r.pi_p_source
              << ") threshold=" << r.evaluation.threshold << "\n";
    print_metrics(r.evaluation.report);
  });

  // sweep
  ExperimentArgs sweep_args;
  std::string values_text, multipliers_text;
  auto* sweep_cmd = app.add_subcommand("sweep", "nnre_pu runs over a list of class priors");
  sweep_args.attach(sweep_cmd);
  auto* values_opt = sweep_cmd->add_option("--values", values_text, "comma-separated pi_p values");
  sweep_cmd->add_option("--multipliers", multipliers_text, "comma-separated multiples of the true pi_p")
      ->excludes(values_opt);
  sweep_cmd->add_option("-o,--out", out_dir, "sweep directory");
  sweep_cmd->callback([&] {
    const auto cfg = sweep_args.resolve();
    std::vector<double> values = parse_list(values_text);
    if (!multipliers_text.empty()) {
      const auto scene = prepare_scene(cfg);
      if (!scene.ground_truth) throw DataError("--multipliers needs ground truth");
      const double truth = true_prior(*scene.ground_truth, cfg.positive_class);
      for (double m : parse_list(multipliers_text)) values.push_back(m * truth);
    }
    const auto rows = pi_p_sweep(cfg, values, out_dir);
    std::ifstream csv(std::filesystem::path(out_dir) / "sweep.csv");
    std::cout << csv.rdbuf();
  });

  // serve
  ServiceOptions svc;
  std::vector<std::string> scene_specs;
  std::vector<std::string> synthetic_ids;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service for labelling and runs");
  serve_cmd->add_option("--host", svc.host, "bind address");
  serve_cmd->add_option("--port", svc.port, "port (0 picks one)");
  serve_cmd->add_option("--runs", svc.run_root, "run directory root");
  serve_cmd->add_option("--scene", scene_specs, "ID=HEADER or ID=CONFIG.json (repeatable)");
  serve_cmd->add_option("--synthetic", synthetic_ids, "register the reference synthetic scene under ID");
  serve_cmd->callback([&] {
    // block the stop signals before any thread starts so only sigwait sees them
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
    Service service(svc);
    for (const auto& spec : scene_specs) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) throw ConfigError("--scene expects ID=PATH");
      const std::string id = spec.substr(0, eq), path = spec.substr(eq + 1);
      json base = read_json_file(path);
      // an hscn-1 header registers as a scene path, anything else is a config
      if (base.value("version", "") == "hscn-1") base = {{"scene", {{"path", path}}}};
      service.add_scene(id, base);
    }
    if (scene_specs.empty() && synthetic_ids.empty()) synthetic_ids.push_back("synthetic");
    for (const auto& id : synthetic_ids) service.add_scene(id, {{"preset", "synthetic"}});
    const int port = service.start();
    std::cout << "listening on http://" << svc.host << ":" << port << "\n" << std::flush;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    service.stop();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
