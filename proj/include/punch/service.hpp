#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "punch/experiment.hpp"

namespace httplib {
class Server;
}

namespace punch {

enum class RunStatus { queued, training, done, failed };

const char* to_string(RunStatus s);

struct RunHandle {
  std::string id;
  std::string scene_id;
  RunStatus status = RunStatus::queued;
  int epoch = 0;
  int max_epochs = 0;
  std::string config_hash;
  nlohmann::json config;
  std::string error;
  std::filesystem::path dir;
};

/// JSON view of a handle; artifact links appear only once the run is done.
nlohmann::json to_json(const RunHandle& h);

/// Synchronized run table. Status moves forward only; a backwards move
/// throws std::logic_error.
class RunRegistry {
 public:
  /// Assigns the id and the run directory `root / id`; status starts queued.
  RunHandle create(RunHandle h, const std::filesystem::path& root);
  std::optional<RunHandle> get(const std::string& id) const;
  std::vector<RunHandle> list() const;
  void advance(const std::string& id, RunStatus to, const std::string& error = {});
  void progress(const std::string& id, int epoch);

 private:
  mutable std::mutex mu_;
  std::map<std::string, RunHandle> runs_;
  int next_ = 1;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path run_root = "runs";
};

/// JSON-over-HTTP front end. Requests are served concurrently; runs execute
/// one at a time on a single worker thread in submission order.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// `base` is an ExperimentConfig patch naming the scene source (scene.path
  /// or scene.synthetic) plus per-scene defaults such as positive_class.
  void add_scene(const std::string& id, const nlohmann::json& base);

  /// Binds the listening socket and returns the port. Throws DataError when
  /// the port is taken.
  int bind();
  /// Serves until stop(); bind() is called first if needed.
  void serve();
  /// bind() plus serve() on a background thread.
  int start();
  void stop();

  const RunRegistry& registry() const { return runs_; }

 private:
  struct SceneEntry {
    nlohmann::json base;
    PreparedScene scene;
    LabelState labels;
  };
  struct Job {
    std::string run_id;
    ExperimentConfig config;
    std::shared_ptr<const SceneEntry> scene;
  };

  void routes();
  void worker_loop();
  void execute(const Job& job);
  std::shared_ptr<SceneEntry> scene(const std::string& id) const;
  ExperimentConfig scene_config(const SceneEntry& s, const nlohmann::json& patch) const;

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  bool bound_ = false;

  mutable std::mutex scenes_mu_;
  std::map<std::string, std::shared_ptr<SceneEntry>> scenes_;

  RunRegistry runs_;
  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Job> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace punch
