#include "punch/service.hpp"

#include <httplib.h>

#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include "punch/error.hpp"
#include "punch/hash.hpp"
#include "punch/image_io.hpp"

namespace punch {

using nlohmann::json;

namespace {

constexpr const char* kHashHeader = "X-Config-Hash";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void send_json(httplib::Response& res, int status, const json& body, const std::string& hash) {
  res.status = status;
  res.set_header(kHashHeader, hash);
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& hash = "none") {
  send_json(res, status, {{"error", message}}, hash);
}

int parse_channel(const httplib::Request& req, const char* key, int fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const int ch = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return ch;
  } catch (const std::exception&) {
    throw ConfigError(std::string("query parameter ") + key + " is not an integer");
  }
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::queued: return "queued";
    case RunStatus::training: return "training";
    case RunStatus::done: return "done";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

json to_json(const RunHandle& h) {
  json j = {{"id", h.id},
            {"scene", h.scene_id},
            {"status", to_string(h.status)},
            {"epoch", h.epoch},
            {"max_epochs", h.max_epochs},
            {"config_hash", h.config_hash},
            {"config", h.config}};
  if (h.status == RunStatus::failed) j["error"] = h.error;
  if (h.status == RunStatus::done) {
    const std::string base = "/runs/" + h.id;
    j["artifacts"] = {{"map", base + "/map.png"},
                      {"histogram", base + "/histogram.json"},
                      {"scores", base + "/scores.f32"},
                      {"report", base + "/report.json"}};
  } else {
    j["artifacts"] = nullptr;
  }
  return j;
}

RunHandle RunRegistry::create(RunHandle h, const std::filesystem::path& root) {
  std::lock_guard lock(mu_);
  h.id = "run-" + std::to_string(next_++);
  h.dir = root / h.id;
  h.status = RunStatus::queued;
  return runs_[h.id] = std::move(h);
}

std::optional<RunHandle> RunRegistry::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = runs_.find(id);
  if (it == runs_.end()) return std::nullopt;
  return it->second;
}

std::vector<RunHandle> RunRegistry::list() const {
  std::lock_guard lock(mu_);
  std::vector<RunHandle> out;
  for (const auto& [_, h] : runs_) out.push_back(h);
  return out;
}

void RunRegistry::advance(const std::string& id, RunStatus to, const std::string& error) {
  std::lock_guard lock(mu_);
  auto& h = runs_.at(id);
  const bool terminal = h.status == RunStatus::done || h.status == RunStatus::failed;
  if (terminal || static_cast<int>(to) <= static_cast<int>(h.status)) {
    throw std::logic_error(std::string("run ") + id + " cannot move from " + to_string(h.status) + " to " +
                           to_string(to));
  }
  h.status = to;
  h.error = error;
}

void RunRegistry::progress(const std::string& id, int epoch) {
  std::lock_guard lock(mu_);
  runs_.at(id).epoch = epoch;
}

Service::Service(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // SO_REUSEADDR only, so a busy port fails to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  routes();
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() { stop(); }

void Service::add_scene(const std::string& id, const json& base) {
  if (id.empty() || id.find('/') != std::string::npos) throw ConfigError("scene id must be non-empty without '/'");
  auto entry = std::make_shared<SceneEntry>();
  entry->base = base;
  const auto cfg = resolve_config(base, json::object());
  entry->scene = prepare_scene(cfg);
  entry->labels = LabelState(entry->scene.cube.rows(), entry->scene.cube.cols(), {});
  std::lock_guard lock(scenes_mu_);
  if (!scenes_.emplace(id, std::move(entry)).second) throw ConfigError("duplicate scene id " + id);
}

std::shared_ptr<Service::SceneEntry> Service::scene(const std::string& id) const {
  std::lock_guard lock(scenes_mu_);
  const auto it = scenes_.find(id);
  return it == scenes_.end() ? nullptr : it->second;
}

// The scene's current labels are inlined unless the patch brings its own,
// so the hash of a service run equals the hash of the equivalent CLI config.
ExperimentConfig Service::scene_config(const SceneEntry& s, const json& patch) const {
  json merged = s.base;
  merged.merge_patch(patch);
  if (!patch.contains("labels")) {
    std::lock_guard lock(scenes_mu_);
    if (s.labels.positive_count() > 0) merged["labels"] = json::parse(s.labels.to_json());
  }
  return resolve_config(merged, json::object());
}

void Service::routes() {
  auto& svr = *server_;

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what());
    } catch (const DataError& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  // Unmatched routes never reach a handler; they still carry the header.
  svr.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.has_header(kHashHeader)) res.set_header(kHashHeader, "none");
  });

  svr.Get("/scenes", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    Fnv1a combined;
    std::vector<std::pair<std::string, std::shared_ptr<SceneEntry>>> entries;
    {
      std::lock_guard lock(scenes_mu_);
      entries.assign(scenes_.begin(), scenes_.end());
    }
    for (const auto& [id, s] : entries) {
      const auto& cube = s->scene.cube;
      const auto hash = config_hash(scene_config(*s, json::object()));
      combined.update(hash);
      std::size_t positives = 0;
      {
        std::lock_guard lock(scenes_mu_);
        positives = s->labels.positive_count();
      }
      list.push_back({{"id", id},
                      {"rows", cube.rows()},
                      {"cols", cube.cols()},
                      {"channels", cube.channels()},
                      {"has_ground_truth", s->scene.ground_truth.has_value()},
                      {"labelled_positives", positives},
                      {"config_hash", hash}});
    }
    send_json(res, 200, {{"scenes", list}}, combined.hex());
  });

  svr.Get(R"(/scenes/([^/]+)/render)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = scene(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown scene " + std::string(req.matches[1]));
    const auto& cube = s->scene.cube;
    const int r = parse_channel(req, "r", 0);
    const int g = parse_channel(req, "g", cube.channels() / 2);
    const int b = parse_channel(req, "b", cube.channels() - 1);
    auto img = false_colour(cube, r, g, b);
    const auto hash = config_hash(scene_config(*s, json::object()));
    img.text = {{"config_hash", hash}, {"channels", std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b)}};
    const auto png = encode_png(img);
    res.set_header(kHashHeader, hash);
    res.set_header("X-Scene-Rows", std::to_string(cube.rows()));
    res.set_header("X-Scene-Cols", std::to_string(cube.cols()));
    res.set_header("X-Scene-Channels", std::to_string(cube.channels()));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  });

  svr.Get(R"(/scenes/([^/]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = scene(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown scene " + std::string(req.matches[1]));
    std::string body;
    {
      std::lock_guard lock(scenes_mu_);
      body = s->labels.to_json();
    }
    res.set_header(kHashHeader, config_hash(scene_config(*s, json::object())));
    res.set_content(body, "application/json");
  });

  auto put_labels = [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = scene(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown scene " + std::string(req.matches[1]));
    LabelState labels;
    try {
      labels = LabelState::from_json(req.body);
    } catch (const std::exception& e) {
      return send_error(res, 400, e.what());
    }
    if (labels.rows() != s->scene.cube.rows() || labels.cols() != s->scene.cube.cols()) {
      return send_error(res, 400, "label grid does not match the scene dimensions");
    }
    const auto body = labels.to_json();
    {
      std::lock_guard lock(scenes_mu_);
      s->labels = std::move(labels);
    }
    res.set_header(kHashHeader, config_hash(scene_config(*s, json::object())));
    res.set_content(body, "application/json");
  };
  svr.Put(R"(/scenes/([^/]+)/labels)", put_labels);
  svr.Post(R"(/scenes/([^/]+)/labels)", put_labels);

  svr.Post(R"(/scenes/([^/]+)/runs)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string scene_id = req.matches[1];
    const auto s = scene(scene_id);
    if (!s) return send_error(res, 404, "unknown scene " + scene_id);
    json patch = json::object();
    if (!req.body.empty()) {
      try {
        patch = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_error(res, 400, std::string("malformed run body: ") + e.what());
      }
    }
    if (!patch.is_object()) return send_error(res, 400, "run body must be a JSON object");
    for (const char* key : {"scene", "cache_dir"}) {
      if (patch.contains(key)) return send_error(res, 400, std::string("run body may not set ") + key);
    }
    const auto cfg = scene_config(*s, patch);
    cfg.validate();
    RunHandle h;
    h.scene_id = scene_id;
    h.max_epochs = cfg.train.epochs;
    h.config_hash = config_hash(cfg);
    h.config = to_json(cfg);
    const auto handle = runs_.create(std::move(h), options_.run_root);
    {
      std::lock_guard lock(queue_mu_);
      queue_.push_back({handle.id, cfg, s});
    }
    queue_cv_.notify_one();
    send_json(res, 202, to_json(handle), handle.config_hash);
  });

  svr.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto h = runs_.get(req.matches[1]);
    if (!h) return send_error(res, 404, "unknown run " + std::string(req.matches[1]));
    send_json(res, 200, to_json(*h), h->config_hash);
  });

  auto artifact = [this](const char* file, const char* type) {
    return [this, file, type](const httplib::Request& req, httplib::Response& res) {
      const auto h = runs_.get(req.matches[1]);
      if (!h) return send_error(res, 404, "unknown run " + std::string(req.matches[1]));
      if (h->status != RunStatus::done) {
        return send_error(res, 409, std::string("run is ") + to_string(h->status), h->config_hash);
      }
      res.set_header(kHashHeader, h->config_hash);
      res.set_content(read_file(h->dir / file), type);
    };
  };
  svr.Get(R"(/runs/([^/]+)/map\.png)", artifact("map.png", "image/png"));
  svr.Get(R"(/runs/([^/]+)/histogram\.json)", artifact("histogram.json", "application/json"));
  svr.Get(R"(/runs/([^/]+)/scores\.f32)", artifact("scores.f32", "application/octet-stream"));
  svr.Get(R"(/runs/([^/]+)/report\.json)", artifact("report.json", "application/json"));
}

void Service::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    execute(job);
  }
}

void Service::execute(const Job& job) {
  const auto dir = runs_.get(job.run_id)->dir;
  try {
    runs_.advance(job.run_id, RunStatus::training);
    const auto result = run_experiment(job.config, job.scene->scene, dir,
                                       [&](const EpochMetrics& m) { runs_.progress(job.run_id, m.epoch); });
    const auto& cube = job.scene->scene.cube;
    auto img = score_image(cube.rows(), cube.cols(), result.map.scores);
    img.text = {{"config_hash", result.config_hash}, {"seed", std::to_string(job.config.seed)}};
    write_png(dir / "map.png", img);
    std::array<std::size_t, 256> bins{};
    for (auto v : img.pixels) ++bins[v];
    std::ofstream(dir / "histogram.json")
        << json{{"config_hash", result.config_hash}, {"bins", bins}, {"threshold", result.evaluation.threshold}}.dump()
        << "\n";
    runs_.advance(job.run_id, RunStatus::done);
  } catch (const std::exception& e) {
    runs_.advance(job.run_id, RunStatus::failed, e.what());
  }
}

int Service::bind() {
  if (bound_) return options_.port;
  if (options_.port == 0) {
    options_.port = server_->bind_to_any_port(options_.host);
    if (options_.port < 0) throw DataError("cannot bind " + options_.host);
  } else if (!server_->bind_to_port(options_.host, options_.port)) {
    throw DataError("cannot bind " + options_.host + ":" + std::to_string(options_.port) + " (port busy?)");
  }
  bound_ = true;
  return options_.port;
}

void Service::serve() {
  bind();
  server_->listen_after_bind();
}

int Service::start() {
  const int port = bind();
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::stop() {
  server_->stop();
  if (listener_.joinable()) listener_.join();
  {
    std::lock_guard lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

}  // namespace punch
