#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>

#include <gtest/gtest.h>

#include "llmguard/cli.h"
#include "llmguard/config.h"
#include "llmguard/corpus.h"
#include "support/fixtures.h"

#ifndef LLMGUARD_CLI_PATH
#error "LLMGUARD_CLI_PATH must be defined by the build"
#endif

extern char** environ;

namespace llmguard {
namespace {

using testing::read_file;
using testing::run;
using testing::TempDir;

std::string template_path(const std::string& stem) {
  return testing::source_path("data/templates/" + stem + ".json").string();
}

TEST(CliSynth, WritesCorpus) {
  TempDir dir;
  const auto to_file = run({"synth", "--template", template_path("violence"), "--size", "40",
                            "--seed", "3", "--out", (dir / "v.jsonl").string()});
  ASSERT_EQ(to_file.exit_code, kExitOk) << to_file.err;
  const Corpus corpus = load_corpus(dir / "v.jsonl");
  EXPECT_EQ(corpus.size(), 40u);

  const auto to_stdout = run({"synth", "--template", template_path("violence"), "--size", "40",
                              "--seed", "3"});
  EXPECT_EQ(to_stdout.out, read_file(dir / "v.jsonl"));
}

class CliTrain : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = (dir_ / "violence.jsonl").string();
    ASSERT_EQ(run({"synth", "--template", template_path("violence"), "--size", "400", "--seed",
                   "3", "--out", corpus_})
                  .exit_code,
              kExitOk);
  }
  testing::CliRun train(const std::string& out) {
    return run({"train", "--corpus", corpus_, "--out", out});
  }

  TempDir dir_;
  std::string corpus_;
};

TEST_F(CliTrain, ViolenceReachesNinetyPercent) {
  const auto result = train((dir_ / "v.llmg").string());
  ASSERT_EQ(result.exit_code, kExitOk) << result.err;
  const Json summary = Json::parse(result.out);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "v.llmg"));
  EXPECT_TRUE(summary["final_loss"].is_number());
  ASSERT_EQ(summary["metrics"].size(), 1u);
  EXPECT_GE(summary["metrics"][0]["accuracy"].get<double>(), 0.90);
  EXPECT_EQ(summary["test_size"], 80);
}

TEST_F(CliTrain, SameInvocationIsByteIdentical) {
  ASSERT_EQ(train((dir_ / "a.llmg").string()).exit_code, kExitOk);
  ASSERT_EQ(train((dir_ / "b.llmg").string()).exit_code, kExitOk);
  EXPECT_EQ(read_file(dir_ / "a.llmg"), read_file(dir_ / "b.llmg"));
}

TEST_F(CliTrain, EvalFormatsAndErrors) {
  ASSERT_EQ(train((dir_ / "v.llmg").string()).exit_code, kExitOk);
  const auto json = run({"eval", "--bundle", (dir_ / "v.llmg").string(), "--corpus", corpus_});
  ASSERT_EQ(json.exit_code, kExitOk) << json.err;
  const Json metrics = Json::parse(json.out)["metrics"];
  EXPECT_EQ(metrics[0]["head"], "violence");
  EXPECT_TRUE(metrics[0].contains("auc"));
  EXPECT_TRUE(metrics[0].contains("f1"));

  const auto table = run({"eval", "--bundle", (dir_ / "v.llmg").string(), "--corpus", corpus_,
                          "--format", "table"});
  ASSERT_EQ(table.exit_code, kExitOk);
  EXPECT_NE(table.out.find("accuracy"), std::string::npos);
  EXPECT_NE(table.out.find("violence"), std::string::npos);

  const auto zero = run({"eval", "--bundle", (dir_ / "v.llmg").string(), "--corpus", corpus_,
                         "--threshold", "0"});
  EXPECT_EQ(Json::parse(zero.out)["metrics"][0]["recall"], 1.0);

  testing::write_file(dir_ / "other.jsonl", "{\"text\": \"x\", \"labels\": {\"sports\": 1}}\n");
  const auto mismatch = run({"eval", "--bundle", (dir_ / "v.llmg").string(), "--corpus",
                             (dir_ / "other.jsonl").string()});
  EXPECT_NE(mismatch.exit_code, 0);
  EXPECT_FALSE(mismatch.err.empty());
}

TEST(CliTrainErrors, MissingCorpusNamesPath) {
  const auto result = run({"train", "--corpus", "/nonexistent/corpus.jsonl", "--out", "/tmp/x"});
  EXPECT_NE(result.exit_code, 0);
  EXPECT_NE(result.err.find("/nonexistent/corpus.jsonl"), std::string::npos);
  EXPECT_TRUE(result.out.empty());
}

TEST(CliTrainErrors, BadFlags) {
  EXPECT_EQ(run({"train", "--corpus", "c", "--out", "o", "--hidden", "8,x"}).exit_code,
            kExitError);
  EXPECT_EQ(run({"frobnicate"}).exit_code, kExitError);
  EXPECT_EQ(run({}).exit_code, kExitError);
  EXPECT_EQ(run({"--help"}).exit_code, kExitOk);
}

TEST(CliScan, ExitCodes) {
  const std::string config = testing::trained_config_dir().string();
  const auto flagged = run({"scan", "--text", "email a.b@test.org", "--config-dir", config});
  EXPECT_EQ(flagged.exit_code, kExitFlagged) << flagged.err;
  const Json reports = Json::parse(flagged.out)["reports"];
  bool saw_span = false;
  for (const auto& r : reports) {
    if (r["detector_id"] == "pii") {
      saw_span = r["spans"] == Json::parse(R"([{"start": 6, "end": 18, "label": "email"}])");
    }
  }
  EXPECT_TRUE(saw_span) << flagged.out;

  const auto clean = run({"scan", "--text", "hello world", "--config-dir", config});
  EXPECT_EQ(clean.exit_code, kExitOk) << clean.out;
  for (const auto& r : Json::parse(clean.out)["reports"]) {
    EXPECT_LT(r["score"].get<double>(), 0.5) << r["detector_id"];
  }

  const auto missing = run({"scan", "--text", "hello", "--config-dir", "/nonexistent/config"});
  EXPECT_EQ(missing.exit_code, kExitError);
  EXPECT_TRUE(missing.out.empty());
  EXPECT_FALSE(missing.err.empty());
}

TEST(CliScan, FileAndPhase) {
  TempDir dir;
  testing::write_file(dir / "input.txt", "stab him with a knife");
  const std::string config = testing::trained_config_dir().string();
  const auto response = run({"scan", "--file", (dir / "input.txt").string(), "--phase",
                             "Response", "--config-dir", config});
  EXPECT_EQ(response.exit_code, kExitFlagged);
  const auto prompt = run({"scan", "--file", (dir / "input.txt").string(), "--phase", "Prompt",
                           "--config-dir", config});
  // Violence is routed to responses only.
  EXPECT_EQ(prompt.exit_code, kExitOk) << prompt.out;
  EXPECT_EQ(run({"scan", "--text", "x", "--phase", "Later", "--config-dir", config}).exit_code,
            kExitError);
}

TEST(CliServe, InvalidManifestFailsAtStartup) {
  TempDir dir;
  testing::write_file(dir / "manifest.json", R"({"detectors": [{"id": "q", "kind": "quantum"}]})");
  const auto result = run({"serve", "--bind", "127.0.0.1:0", "--config-dir", dir.path().string()});
  EXPECT_EQ(result.exit_code, kExitError);
  EXPECT_NE(result.err.find("quantum"), std::string::npos);
}

// Launches the real binary so signal handling is exercised end to end.
class ServeProcess {
 public:
  explicit ServeProcess(std::vector<std::string> args) {
    int fds[2];
    if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    args.insert(args.begin(), LLMGUARD_CLI_PATH);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, argv[0], &actions, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("spawn failed");
    }
    posix_spawn_file_actions_destroy(&actions);
    close(fds[1]);
    stdout_ = fdopen(fds[0], "r");
  }
  ~ServeProcess() {
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
    if (stdout_) fclose(stdout_);
  }
  std::string read_line() {
    char buffer[4096];
    if (!fgets(buffer, sizeof buffer, stdout_)) return {};
    return buffer;
  }
  int terminate() {
    kill(pid_, SIGTERM);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  pid_t pid_ = -1;
  FILE* stdout_ = nullptr;
};

TEST(CliServe, ServesUntilTerminated) {
  ServeProcess server({"serve", "--bind", "127.0.0.1:0", "--config-dir",
                       testing::trained_config_dir().string(), "--upstream", "echo"});
  const Json startup = Json::parse(server.read_line());
  const std::string address = startup.at("listening");
  const int port = std::stoi(address.substr(address.rfind(':') + 1));
  ASSERT_GT(port, 0);

  EXPECT_EQ(testing::http_get(port, "/healthz").body, "ok");
  const auto reply = testing::http_post(port, "/v1/guarded-chat", R"({"prompt": "hello"})");
  EXPECT_EQ(reply.status, 200);
  const Json body = Json::parse(reply.body);
  EXPECT_EQ(body["decision"], "Allow");
  EXPECT_EQ(body["delivered_text"], "hello");

  EXPECT_EQ(server.terminate(), 0);
}

TEST(CliServe, CannedUpstreamAndFlags) {
  TempDir dir;
  testing::write_file(dir / "canned.json", R"({"*": "stab him with a knife"})");
  ServeProcess server({"serve", "--bind", "127.0.0.1:0", "--config-dir",
                       testing::trained_config_dir().string(), "--upstream", "canned",
                       "--fixture", (dir / "canned.json").string(), "--no-unguarded",
                       "--no-overrides", "--max-body", "100"});
  const Json startup = Json::parse(server.read_line());
  const std::string address = startup.at("listening");
  const int port = std::stoi(address.substr(address.rfind(':') + 1));

  const Json blocked = Json::parse(
      testing::http_post(port, "/v1/guarded-chat", R"({"prompt": "hello"})").body);
  EXPECT_EQ(blocked["decision"], "Block");
  EXPECT_EQ(blocked["blocked_phase"], "Response");
  EXPECT_EQ(testing::http_post(port, "/v1/unguarded-chat", R"({"prompt": "x"})").status, 403);
  EXPECT_EQ(testing::http_post(port, "/v1/guarded-chat",
                               R"({"prompt": "x", "detectors": {"pii": false}})")
                .status,
            403);
  const Json big = {{"prompt", std::string(200, 'a')}};
  EXPECT_EQ(testing::http_post(port, "/v1/guarded-chat", big.dump()).status, 413);
  EXPECT_EQ(server.terminate(), 0);
}

TEST(CliBootstrap, WritesLoadableConfig) {
  const auto& dir = testing::trained_config_dir();
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "policy.json"));
  for (const char* stem : {"toxicity", "violence", "racial_bias", "topic-politics",
                           "topic-religion", "topic-sports"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "bundles" / (std::string(stem) + ".llmg"))) << stem;
  }
}

}  // namespace
}  // namespace llmguard
