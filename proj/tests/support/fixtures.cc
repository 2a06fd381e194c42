#include "support/fixtures.h"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "llmguard/cli.h"

#ifndef LLMGUARD_SOURCE_DIR
#error "LLMGUARD_SOURCE_DIR must be defined by the build"
#endif

namespace llmguard::testing {

namespace fs = std::filesystem;

fs::path source_path(const std::string& relative) {
  return fs::path(LLMGUARD_SOURCE_DIR) / relative;
}

TempDir::TempDir() {
  std::random_device device;
  const auto base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / ("llmguard-test-" + std::to_string(device()));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

CliRun run(const std::vector<std::string>& args) {
  std::vector<std::string> argv = {"llmguard"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out;
  std::ostringstream err;
  CliRun result;
  result.exit_code = run_cli(argv, out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

const fs::path& trained_config_dir() {
  static TempDir dir;
  static const bool ready = [] {
    const CliRun result = run({"bootstrap", "--templates", source_path("data/templates").string(),
                               "--out", dir.path().string()});
    if (result.exit_code != 0) throw std::runtime_error("bootstrap failed: " + result.err);
    return true;
  }();
  (void)ready;
  return dir.path();
}

std::string CountingUpstream::complete(std::string_view prompt) const {
  ++calls_;
  return reply_ ? reply_(prompt) : std::string(prompt);
}

LocalServer::LocalServer() : server_(std::make_unique<httplib::Server>()) {}

LocalServer::~LocalServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void LocalServer::post(const std::string& pattern, Handler handler) {
  server_->Post(pattern, std::move(handler));
}

void LocalServer::start() {
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("cannot bind a local test server");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

RunningGateway::RunningGateway(std::shared_ptr<const GatewayService> service)
    : server_(std::move(service)) {
  port_ = server_.bind("127.0.0.1", 0);
  thread_ = std::thread([this] { server_.listen(); });
  server_.wait_until_ready();
}

RunningGateway::~RunningGateway() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

HttpResult http_post(int port, const std::string& path, const std::string& body) {
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);
  auto res = client.Post(path, body, "application/json");
  if (!res) throw std::runtime_error("POST " + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpResult http_get(int port, const std::string& path) {
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get(path);
  if (!res) throw std::runtime_error("GET " + path + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

}  // namespace llmguard::testing
