#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "llmguard/config.h"
#include "llmguard/ensemble.h"
#include "llmguard/gateway.h"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace llmguard::testing {

// Path inside the source tree (templates, fixtures).
std::filesystem::path source_path(const std::string& relative);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Runs `llmguard bootstrap` over data/templates once per process and
// returns the resulting config directory.
const std::filesystem::path& trained_config_dir();

// Runs the CLI in-process.
struct CliRun {
  int exit_code = 0;
  std::string out;
  std::string err;
};
CliRun run(const std::vector<std::string>& args);

// Echoes and counts invocations.
class CountingUpstream : public Upstream {
 public:
  explicit CountingUpstream(std::function<std::string(std::string_view)> reply = nullptr)
      : reply_(std::move(reply)) {}
  std::string complete(std::string_view prompt) const override;
  int calls() const { return calls_.load(); }

 private:
  std::function<std::string(std::string_view)> reply_;
  mutable std::atomic<int> calls_{0};
};

// An httplib server on 127.0.0.1 with a free port, serving on a background
// thread until destroyed.
class LocalServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  LocalServer();
  ~LocalServer();
  LocalServer(const LocalServer&) = delete;
  LocalServer& operator=(const LocalServer&) = delete;
  // Register routes before start().
  void post(const std::string& pattern, Handler handler);
  void start();
  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// A GatewayServer on 127.0.0.1 with a free port, listening on a background
// thread until destroyed.
class RunningGateway {
 public:
  explicit RunningGateway(std::shared_ptr<const GatewayService> service);
  ~RunningGateway();
  RunningGateway(const RunningGateway&) = delete;
  RunningGateway& operator=(const RunningGateway&) = delete;
  int port() const { return port_; }

 private:
  GatewayServer server_;
  std::thread thread_;
  int port_ = 0;
};

struct HttpResult {
  int status = 0;
  std::string body;
};
HttpResult http_post(int port, const std::string& path, const std::string& body);
HttpResult http_get(int port, const std::string& path);

}  // namespace llmguard::testing
