#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "swasat/generator.hpp"
#include "swasat/sefa.hpp"

namespace httplib {
class Server;
}

namespace swasat::service {

struct Label {
  std::string positive;
  std::string negative;
};

/// Direction labels kept in one JSON document beside the directions file.
/// Writes go through a temporary file and a rename, one writer at a time.
class LabelStore {
 public:
  explicit LabelStore(std::filesystem::path path);

  static std::filesystem::path beside(const std::filesystem::path& directions_file);

  std::map<std::int64_t, Label> all() const;
  void put(std::int64_t index, const Label& label);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::map<std::int64_t, Label> read_locked() const;

  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

struct Response {
  int status = 200;
  std::string body;  // JSON
  std::string content_type = "application/json";
};

struct ServiceOptions {
  double default_psi = 0.5;
  std::size_t cache_entries = 512;
  std::int64_t max_grid_cells = 256;
};

/// Read-only model snapshot plus the label store; request handling is
/// independent of the transport so it can be exercised in-process.
class Service {
 public:
  Service(std::filesystem::path checkpoint_file, std::filesystem::path directions_file, ServiceOptions options = {});
  ~Service();

  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::string& pinned_hash = "");

  const std::string& checkpoint_hash() const { return checkpoint_hash_; }
  std::uint64_t requests() const { return requests_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

  /// Blocks serving HTTP until stop() is called. port 0 picks a free port,
  /// reported through on_listen before requests are accepted.
  void serve(const std::string& host, int port, const std::function<void(int)>& on_listen = {});
  void stop();

 private:
  Response meta();
  Response directions();
  Response generate(const nlohmann::json& request);
  Response edit(const nlohmann::json& request);
  Response grid(const nlohmann::json& request);
  Response put_label(std::int64_t index, const nlohmann::json& request);

  double psi_of(const nlohmann::json& request) const;

  std::string checkpoint_hash_;
  std::string directions_hash_;
  Generator generator_{nullptr};
  sefa::SemanticDirectionSet directions_;
  LabelStore labels_;
  ServiceOptions options_;

  std::mutex model_mutex_;
  std::mutex cache_mutex_;
  std::map<std::string, Response> cache_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::mutex server_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace swasat::service
