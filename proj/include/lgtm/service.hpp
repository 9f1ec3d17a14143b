#pragma once

// HTTP job service: mask previews, queued generation jobs, job status and
// image retrieval. Jobs and images persist under a store directory
// (index.json + content-addressed images/) and survive restarts.
//
//   POST /v1/mask/preview  {kind, ax, ay, bx?, by?, radius, width, height} -> image/png (16-bit)
//   POST /v1/generate      GenerationRequest JSON -> 202 {job_id, status_url}
//   GET  /v1/jobs/{id}     -> Job JSON
//   GET  /v1/images/{id}   -> image/png
//   GET  /v1/health        -> {status, backend, queue_capacity}
//
// Errors are {code, message} with 400/404/413/503 statuses.

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#endif
#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lgtm/backend.hpp"
#include "lgtm/error.hpp"
#include "lgtm/hash.hpp"
#include "lgtm/light_mask.hpp"
#include "lgtm/png_io.hpp"

namespace lgtm::service {

enum class JobState { queued, running, done, failed };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "failed";
}

inline JobState parse_job_state(const std::string& s) {
  if (s == "queued") return JobState::queued;
  if (s == "running") return JobState::running;
  if (s == "done") return JobState::done;
  if (s == "failed") return JobState::failed;
  throw ContractError("unknown job state '" + s + "'");
}

/// queued -> running -> {done | failed}
inline bool is_allowed_transition(JobState from, JobState to) {
  return (from == JobState::queued && to == JobState::running) ||
         (from == JobState::running && (to == JobState::done || to == JobState::failed));
}

inline std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

struct Job {
  std::string id;
  GenerationRequest request;
  JobState state = JobState::queued;
  std::optional<std::string> image_id;
  std::optional<std::string> error;
  std::int64_t created_ms = 0;
  std::optional<std::int64_t> started_ms;
  std::optional<std::int64_t> finished_ms;
};

inline std::string image_url(const std::string& image_id) { return "/v1/images/" + image_id; }

inline nlohmann::json to_json(const Job& job) {
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"id", job.id},
      {"state", to_string(job.state)},
      {"request", lgtm::to_json(job.request)},
      {"image_id", opt(job.image_id)},
      {"result", job.image_id ? nlohmann::json(image_url(*job.image_id)) : nlohmann::json(nullptr)},
      {"error", opt(job.error)},
      {"created_at_ms", job.created_ms},
      {"started_at_ms", opt(job.started_ms)},
      {"finished_at_ms", opt(job.finished_ms)},
  };
}

inline Job job_from_json(const nlohmann::json& j) {
  Job job;
  job.id = j.at("id").get<std::string>();
  job.state = parse_job_state(j.at("state").get<std::string>());
  job.request = generation_request_from_json(j.at("request"));
  if (!j.at("image_id").is_null()) job.image_id = j.at("image_id").get<std::string>();
  if (!j.at("error").is_null()) job.error = j.at("error").get<std::string>();
  job.created_ms = j.at("created_at_ms").get<std::int64_t>();
  if (!j.at("started_at_ms").is_null()) job.started_ms = j.at("started_at_ms").get<std::int64_t>();
  if (!j.at("finished_at_ms").is_null()) job.finished_ms = j.at("finished_at_ms").get<std::int64_t>();
  return job;
}

/// On-disk job records. Readers share the lock; every mutation is exclusive
/// and rewrites index.json atomically (write temp, then rename).
class JobStore {
 public:
  explicit JobStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "images", ec);
    if (ec) throw IoError("cannot create job store at '" + root_.string() + "': " + ec.message());
    load();
  }

  const std::filesystem::path& root() const noexcept { return root_; }

  Job create(const GenerationRequest& request) {
    std::unique_lock lock(mutex_);
    char id[32];
    std::snprintf(id, sizeof id, "job-%08llu", static_cast<unsigned long long>(next_id_++));
    Job job{id, request, JobState::queued, std::nullopt, std::nullopt, now_ms(), std::nullopt, std::nullopt};
    jobs_.emplace(job.id, job);
    persist();
    return job;
  }

  std::optional<Job> get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Job> jobs() const {
    std::shared_lock lock(mutex_);
    std::vector<Job> out;
    for (const auto& [_, job] : jobs_) out.push_back(job);
    return out;
  }

  void mark_running(const std::string& id) {
    std::unique_lock lock(mutex_);
    Job& job = transition(id, JobState::running);
    job.started_ms = now_ms();
    persist();
  }

  /// Stores the PNG under a content-derived id unique to this job.
  std::string mark_done(const std::string& id, const Bytes& png) {
    const std::string image_id = sha256_hex(id + ":" + sha256_hex(png));
    write_file(root_ / "images" / (image_id + ".png"), png);
    std::unique_lock lock(mutex_);
    Job& job = transition(id, JobState::done);
    job.image_id = image_id;
    job.finished_ms = now_ms();
    image_owner_[image_id] = id;
    persist();
    return image_id;
  }

  void mark_failed(const std::string& id, const std::string& message) {
    std::unique_lock lock(mutex_);
    Job& job = transition(id, JobState::failed);
    job.error = message;
    job.finished_ms = now_ms();
    persist();
  }

  std::optional<Bytes> image(const std::string& image_id) const {
    {
      std::shared_lock lock(mutex_);
      if (image_owner_.count(image_id) == 0) return std::nullopt;
    }
    return read_file(root_ / "images" / (image_id + ".png"));
  }

 private:
  Job& transition(const std::string& id, JobState to) {
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw ContractError("unknown job '" + id + "'");
    if (!is_allowed_transition(it->second.state, to)) {
      throw ContractError("job '" + id + "' cannot move from " + to_string(it->second.state) + " to " + to_string(to));
    }
    it->second.state = to;
    return it->second;
  }

  void load() {
    const auto path = root_ / "index.json";
    if (!std::filesystem::exists(path)) return;
    const Bytes raw = read_file(path);
    try {
      const auto index = nlohmann::json::parse(raw.begin(), raw.end());
      next_id_ = index.at("next_id").get<std::uint64_t>();
      for (const auto& j : index.at("jobs")) {
        Job job = job_from_json(j);
        if (job.image_id) image_owner_[*job.image_id] = job.id;
        jobs_.emplace(job.id, std::move(job));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ContractError("corrupt job index '" + path.string() + "': " + e.what());
    }
  }

  void persist() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [_, job] : jobs_) list.push_back(to_json(job));
    const std::string text = nlohmann::json{{"next_id", next_id_}, {"jobs", std::move(list)}}.dump();
    const auto tmp = root_ / "index.json.tmp";
    write_file(tmp, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    std::error_code ec;
    std::filesystem::rename(tmp, root_ / "index.json", ec);
    if (ec) throw IoError("cannot update job index: " + ec.message());
  }

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::string> image_owner_;
  std::uint64_t next_id_ = 1;
};

/// Bounded FIFO in front of one backend instance, drained by a single worker
/// thread, so denoise calls on that backend never overlap.
class JobRunner {
 public:
  JobRunner(JobStore& store, std::unique_ptr<Backend> backend, std::size_t capacity)
      : store_(store), backend_(std::move(backend)), capacity_(capacity) {
    if (!backend_) throw BackendError("job runner needs a backend");
    // Resume after a restart: queued jobs run again, interrupted ones fail.
    for (const Job& job : store_.jobs()) {
      if (job.state == JobState::running) store_.mark_failed(job.id, "interrupted by service restart");
      if (job.state == JobState::queued) queue_.push_back(job.id);
    }
    worker_ = std::thread([this] { work(); });
  }

  ~JobRunner() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  JobRunner(const JobRunner&) = delete;
  JobRunner& operator=(const JobRunner&) = delete;

  /// Creates and enqueues a job, or returns nullopt when the queue is full.
  std::optional<Job> submit(const GenerationRequest& request) {
    std::optional<Job> job;
    {
      std::lock_guard lock(mutex_);
      if (queue_.size() >= capacity_) return std::nullopt;
      job = store_.create(request);
      queue_.push_back(job->id);
    }
    cv_.notify_one();
    return job;
  }

  std::size_t capacity() const noexcept { return capacity_; }
  const Backend& backend() const noexcept { return *backend_; }

 private:
  void work() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        id = queue_.front();
        queue_.pop_front();
      }
      run_one(id);
    }
  }

  void run_one(const std::string& id) {
    const auto job = store_.get(id);
    if (!job) return;
    store_.mark_running(id);
    try {
      const GeneratedImage image = generate(job->request, *backend_);
      store_.mark_done(id, encode_rgb_png(image.pixels));
    } catch (const std::exception& e) {
      store_.mark_failed(id, e.what());
    }
  }

  JobStore& store_;
  std::unique_ptr<Backend> backend_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

struct ServiceOptions {
  std::filesystem::path store_dir = "lgtm-store";
  std::size_t queue_capacity = 32;
  std::size_t max_dimension = 2048;
  std::string cors_origin = "*";
};

class Service {
 public:
  Service(ServiceOptions options, std::unique_ptr<Backend> backend)
      : options_(std::move(options)),
        store_(options_.store_dir),
        runner_(store_, std::move(backend), options_.queue_capacity) {
    routes();
  }

  ~Service() { stop(); }

  /// Binds to host:port; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      const int bound = server_.bind_to_any_port(host);
      if (bound < 0) throw IoError("cannot bind " + host);
      return bound;
    }
    if (!server_.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return port;
  }

  /// Serves until stop(); call after bind().
  void run() { server_.listen_after_bind(); }

  void stop() {
    if (server_.is_running()) server_.stop();
  }

  void wait_until_ready() const { server_.wait_until_ready(); }

  JobStore& store() noexcept { return store_; }

 private:
  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"code", code}, {"message", message}}.dump(), "application/json");
  }

  static std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "invalid_json", e.what());
      return std::nullopt;
    }
  }

  bool oversized(std::size_t width, std::size_t height) const {
    return width > options_.max_dimension || height > options_.max_dimension;
  }

  void routes() {
    server_.set_default_headers({
        {"Access-Control-Allow-Origin", options_.cors_origin},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
        {"Access-Control-Allow-Headers", "Content-Type"},
    });
    server_.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"status", "ok"},
                                     {"backend", runner_.backend().name()},
                                     {"queue_capacity", runner_.capacity()}}
                          .dump(),
                      "application/json");
    });

    server_.Post("/v1/mask/preview", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      try {
        if (!body->is_object() || !body->contains("width") || !body->contains("height") ||
            !body->at("width").is_number_unsigned() || !body->at("height").is_number_unsigned()) {
          throw ArgumentError("preview needs positive integer 'width' and 'height'");
        }
        const auto width = body->at("width").get<std::size_t>();
        const auto height = body->at("height").get<std::size_t>();
        if (width == 0 || height == 0) throw ArgumentError("preview dimensions must be positive");
        if (oversized(width, height)) {
          return send_error(res, 413, "size_too_large",
                            "preview dimensions must not exceed " + std::to_string(options_.max_dimension));
        }
        nlohmann::json spec_json = *body;
        spec_json.erase("width");
        spec_json.erase("height");
        const LightSpec spec = light_spec_from_json(spec_json, JsonMode::strict);
        const Bytes png = encode_mask_png(make_light_mask(spec, width, height));
        res.set_content(std::string(png.begin(), png.end()), "image/png");
      } catch (const Error& e) {
        send_error(res, 400, "invalid_light_spec", e.what());
      }
    });

    server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req, res);
      if (!body) return;
      GenerationRequest request;
      try {
        request = generation_request_from_json(*body, JsonMode::strict);
      } catch (const Error& e) {
        return send_error(res, 400, "invalid_request", e.what());
      }
      if (oversized(request.output_size.width, request.output_size.height)) {
        return send_error(res, 413, "size_too_large",
                          "output dimensions must not exceed " + std::to_string(options_.max_dimension));
      }
      const auto job = runner_.submit(request);
      if (!job) return send_error(res, 503, "queue_full", "job queue is at capacity; retry later");
      res.status = 202;
      res.set_content(nlohmann::json{{"job_id", job->id}, {"status_url", "/v1/jobs/" + job->id}}.dump(),
                      "application/json");
    });

    server_.Get("/v1/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      const auto job = store_.get(req.path_params.at("id"));
      if (!job) return send_error(res, 404, "not_found", "no such job");
      res.set_content(to_json(*job).dump(), "application/json");
    });

    server_.Get("/v1/images/:id", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<Bytes> png;
      try {
        png = store_.image(req.path_params.at("id"));
      } catch (const Error& e) {
        return send_error(res, 500, "store_error", e.what());
      }
      if (!png) return send_error(res, 404, "not_found", "no such image");
      res.set_content(std::string(png->begin(), png->end()), "image/png");
    });
  }

  ServiceOptions options_;
  JobStore store_;
  JobRunner runner_;
  httplib::Server server_;
};

}  // namespace lgtm::service
