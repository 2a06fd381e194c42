#include "llmguard/cli.h"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "llmguard/bundle.h"
#include "llmguard/config.h"
#include "llmguard/corpus.h"
#include "llmguard/detectors.h"
#include "llmguard/ensemble.h"
#include "llmguard/errors.h"
#include "llmguard/gateway.h"
#include "llmguard/pipeline.h"
#include "llmguard/upstream.h"
#include "llmguard/wire.h"

namespace llmguard {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<std::size_t> parse_hidden(const std::string& text) {
  std::vector<std::size_t> dims;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    long long width = 0;
    try {
      width = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || width <= 0) {
      throw UsageError("--hidden expects comma-separated positive widths, got '" + text + "'");
    }
    dims.push_back(static_cast<std::size_t>(width));
  }
  return dims;
}

struct TrainFlags {
  std::string corpus;
  std::string heads;
  std::string out;
  std::uint64_t seed = 1;
  int epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::string hidden = "64";
  double test_fraction = 0.2;
  std::size_t max_vocabulary = kDefaultMaxVocabulary;
  std::size_t min_count = kDefaultMinCount;
  double threshold = 0.5;

  PipelineOptions options() const {
    PipelineOptions o;
    o.train.seed = seed;
    o.train.epochs = epochs;
    o.train.batch_size = batch_size;
    o.train.learning_rate = learning_rate;
    o.train.beta1 = beta1;
    o.train.beta2 = beta2;
    o.train.epsilon = adam_epsilon;
    o.train.hidden_dims = parse_hidden(hidden);
    o.max_vocabulary = max_vocabulary;
    o.min_count = min_count;
    o.test_fraction = test_fraction;
    o.threshold = threshold;
    return o;
  }
};

void add_training_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--seed", f.seed, "Seed for the split, initialization and batch order")
      ->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", f.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--beta1", f.beta1, "Adam first-moment decay")->capture_default_str();
  cmd->add_option("--beta2", f.beta2, "Adam second-moment decay")->capture_default_str();
  cmd->add_option("--adam-eps", f.adam_epsilon, "Adam epsilon")->capture_default_str();
  cmd->add_option("--hidden", f.hidden, "Comma-separated hidden layer widths")
      ->capture_default_str();
  cmd->add_option("--test-fraction", f.test_fraction, "Held-out fraction")
      ->capture_default_str();
  cmd->add_option("--max-vocab", f.max_vocabulary, "Vocabulary size cap")->capture_default_str();
  cmd->add_option("--min-count", f.min_count, "Minimum token frequency")->capture_default_str();
  cmd->add_option("--threshold", f.threshold, "Decision threshold for held-out metrics")
      ->capture_default_str();
}

Json train_summary(const PipelineResult& result) {
  return {{"heads", result.bundle.head_names},
          {"final_loss", result.bundle.training.final_loss},
          {"train_size", result.train_set.size()},
          {"test_size", result.test_set.size()},
          {"vocabulary_size", result.bundle.vocabulary.size()},
          {"metrics", metrics_to_json(result.metrics)}};
}

int cmd_train(const TrainFlags& flags, std::ostream& out) {
  const Corpus corpus = load_corpus(flags.corpus);
  const PipelineResult result = train_detector(corpus, split_list(flags.heads), flags.options());
  save_bundle(result.bundle, flags.out);
  Json summary = train_summary(result);
  summary["bundle"] = flags.out;
  out << summary.dump() << "\n";
  return kExitOk;
}

struct EvalFlags {
  std::string bundle;
  std::string corpus;
  double threshold = 0.5;
  std::string format = "json";
};

std::string format_metric(double value) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << value;
  return s.str();
}

int cmd_eval(const EvalFlags& flags, std::ostream& out) {
  const ModelBundle bundle = load_bundle(flags.bundle);
  const Corpus corpus = load_corpus(flags.corpus);
  const auto metrics = evaluate(bundle, corpus, flags.threshold);
  if (flags.format == "table") {
    out << std::left << std::setw(20) << "head" << std::setw(10) << "accuracy" << std::setw(10)
        << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1" << "auc\n";
    for (const auto& m : metrics) {
      out << std::left << std::setw(20) << m.head << std::setw(10)
          << format_metric(m.accuracy) << std::setw(10) << format_metric(m.precision)
          << std::setw(10) << format_metric(m.recall) << std::setw(10) << format_metric(m.f1)
          << (m.auc ? format_metric(*m.auc) : "undefined") << "\n";
    }
  } else {
    out << Json{{"threshold", flags.threshold}, {"metrics", metrics_to_json(metrics)}}.dump()
        << "\n";
  }
  return kExitOk;
}

struct ScanFlags {
  std::string text;
  std::string file;
  std::string phase = "Prompt";
  std::string config_dir = "config";
};

int cmd_scan(const ScanFlags& flags, std::ostream& out) {
  std::string text = flags.text;
  if (!flags.file.empty()) {
    std::ifstream in(flags.file, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + flags.file);
    std::stringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
  }
  const Phase phase = parse_phase(flags.phase);
  const GuardConfig config = load_guard_config(flags.config_dir);
  const auto reports = guard_text(*config.registry, config.policy, text, phase);
  const Verdict verdict = evaluate_policy(reports, config.policy, text);
  out << Json{{"phase", phase_name(phase)},
              {"decision", decision_name(verdict.decision)},
              {"reports", reports_to_json(verdict.reports)}}
             .dump()
      << "\n";
  return verdict.decision == Decision::kBlock ? kExitFlagged : kExitOk;
}

struct ServeFlags {
  std::string bind = "127.0.0.1:8080";
  std::string config_dir = "config";
  std::string upstream = "echo";
  std::string fixture;
  std::string base_url;
  std::string model;
  std::string token_env;
  int timeout_ms = 30000;
  std::size_t max_body = kDefaultMaxBodyBytes;
  bool no_overrides = false;
  bool no_unguarded = false;
};

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind expects host:port");
  const std::string host = bind.substr(0, colon);
  int port = -1;
  try {
    std::size_t pos = 0;
    port = std::stoi(bind.substr(colon + 1), &pos);
    if (pos != bind.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (host.empty() || port < 0 || port > 65535) throw UsageError("--bind expects host:port");
  return {host, port};
}

int cmd_serve(const ServeFlags& flags, std::ostream& out) {
  const auto [host, port] = parse_bind(flags.bind);
  GuardConfig config = load_guard_config(flags.config_dir);

  UpstreamConfig upstream;
  upstream.kind = parse_upstream_kind(flags.upstream);
  upstream.fixture_path = flags.fixture;
  upstream.http = {flags.base_url, flags.model, flags.token_env, flags.timeout_ms};
  GatewayOptions options;
  options.max_body_bytes = flags.max_body;
  options.allow_overrides = !flags.no_overrides;
  options.enable_unguarded = !flags.no_unguarded;

  auto service = std::make_shared<GatewayService>(config.registry, config.policy,
                                                  make_upstream(upstream), options);
  GatewayServer server(service);
  const int bound = server.bind(host, port);

  // Signals are taken synchronously by this thread; the listener thread
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::thread listener([&server] { server.listen(); });
  server.wait_until_ready();
  out << Json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;

  int received = 0;
  sigwait(&signals, &received);
  server.stop();
  listener.join();
  return kExitOk;
}

struct SynthFlags {
  std::string template_path;
  std::size_t size = 400;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_synth(const SynthFlags& flags, std::ostream& out) {
  const Corpus corpus =
      generate_synthetic_corpus(load_template(flags.template_path), flags.size, flags.seed);
  if (flags.out.empty()) {
    out << corpus_to_jsonl(corpus);
  } else {
    save_corpus(corpus, flags.out);
  }
  return kExitOk;
}

// Training preset for the bundled templates. The library defaults take
// too few Adam steps to fit the five toxicity heads on 400 examples.
inline constexpr double kBootstrapLearningRate = 0.01;
inline constexpr int kBootstrapEpochs = 60;

struct BootstrapFlags {
  std::string templates = "data/templates";
  std::string out = "config";
  std::size_t size = 400;
  std::uint64_t corpus_seed = 3;
  TrainFlags train = [] {
    TrainFlags f;
    f.learning_rate = kBootstrapLearningRate;
    f.epochs = kBootstrapEpochs;
    return f;
  }();
};

// Template stem -> detector id: "topic-politics" -> "topic:politics".
std::string detector_id_for(const std::string& stem) {
  std::string id = stem;
  const auto dash = id.find('-');
  if (dash != std::string::npos) id[dash] = ':';
  return id;
}

int cmd_bootstrap(const BootstrapFlags& flags, std::ostream& out) {
  const fs::path out_dir = flags.out;
  fs::create_directories(out_dir / "bundles");

  std::vector<fs::path> templates;
  for (const auto& entry : fs::directory_iterator(flags.templates)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      templates.push_back(entry.path());
    }
  }
  std::sort(templates.begin(), templates.end());
  if (templates.empty()) throw UsageError("no templates found in " + flags.templates);

  Json detectors = Json::array();
  detectors.push_back({{"id", "pii"},
                       {"kind", "regex"},
                       {"patterns", "builtin"},
                       {"threshold", 0.5},
                       {"phases", {"Prompt"}}});
  Json summary = Json::object();
  const PipelineOptions options = flags.train.options();
  for (const auto& path : templates) {
    const std::string stem = path.stem().string();
    const std::string id = detector_id_for(stem);
    const Corpus corpus = generate_synthetic_corpus(load_template(path), flags.size,
                                                    flags.corpus_seed);
    const PipelineResult result = train_detector(corpus, {}, options);
    const std::string bundle_rel = "bundles/" + stem + ".llmg";
    save_bundle(result.bundle, out_dir / bundle_rel);
    Json phases = id == "violence" ? Json{"Response"} : Json{"Prompt", "Response"};
    detectors.push_back({{"id", id},
                         {"kind", "classifier"},
                         {"bundle", bundle_rel},
                         {"threshold", 0.5},
                         {"phases", phases}});
    summary[id] = train_summary(result);
  }
  std::ofstream(out_dir / "manifest.json") << Json{{"detectors", detectors}}.dump(2) << "\n";
  // Reloading checks that every bundle just written parses.
  const DetectorRegistry registry = registry_load(out_dir);
  std::ofstream(out_dir / "policy.json")
      << policy_to_json(registry.manifest_policy()).dump(2) << "\n";
  out << Json{{"config_dir", out_dir.string()}, {"detectors", summary}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"detector-ensemble moderation gateway for LLM traffic", "llmguard"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train a classifier bundle from a labeled corpus");
  train->add_option("--corpus", train_flags.corpus, "JSON-lines corpus")->required();
  train->add_option("--heads", train_flags.heads,
                    "Comma-separated head names (default: corpus labels, sorted)");
  train->add_option("--out", train_flags.out, "Output bundle path")->required();
  add_training_flags(train, train_flags);

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a bundle on a labeled corpus");
  eval->add_option("--bundle", eval_flags.bundle, "Bundle path")->required();
  eval->add_option("--corpus", eval_flags.corpus, "JSON-lines corpus")->required();
  eval->add_option("--threshold", eval_flags.threshold, "Decision threshold (strict >)")
      ->capture_default_str();
  eval->add_option("--format", eval_flags.format, "json or table")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();

  ScanFlags scan_flags;
  auto* scan = app.add_subcommand("scan", "Scan text offline; exit 0 allow, 2 flagged, 1 error");
  auto* text_opt = scan->add_option("--text", scan_flags.text, "Text to scan");
  auto* file_opt = scan->add_option("--file", scan_flags.file, "File whose contents to scan");
  text_opt->excludes(file_opt);
  scan->add_option("--phase", scan_flags.phase, "Prompt or Response")->capture_default_str();
  scan->add_option("--config-dir", scan_flags.config_dir, "Config directory")
      ->capture_default_str();

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Run the HTTP gateway");
  serve->add_option("--bind", serve_flags.bind, "host:port (port 0 picks one)")
      ->capture_default_str();
  serve->add_option("--config-dir", serve_flags.config_dir, "Config directory")
      ->capture_default_str();
  serve->add_option("--upstream", serve_flags.upstream, "echo, canned or http")
      ->check(CLI::IsMember({"echo", "canned", "http"}))
      ->capture_default_str();
  serve->add_option("--fixture", serve_flags.fixture, "Canned upstream fixture (JSON)");
  serve->add_option("--base-url", serve_flags.base_url, "HTTP upstream base URL");
  serve->add_option("--model", serve_flags.model, "HTTP upstream model name");
  serve->add_option("--token-env", serve_flags.token_env,
                    "Environment variable holding the upstream bearer token");
  serve->add_option("--timeout-ms", serve_flags.timeout_ms, "HTTP upstream timeout")
      ->capture_default_str();
  serve->add_option("--max-body", serve_flags.max_body, "Request body limit in bytes")
      ->capture_default_str();
  serve->add_flag("--no-overrides", serve_flags.no_overrides,
                  "Reject per-request detector toggles");
  serve->add_flag("--no-unguarded", serve_flags.no_unguarded,
                  "Disable /v1/unguarded-chat");

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth->add_option("--template", synth_flags.template_path, "Template file (JSON)")->required();
  synth->add_option("--size", synth_flags.size, "Number of examples")->capture_default_str();
  synth->add_option("--seed", synth_flags.seed, "Sampling seed")->capture_default_str();
  synth->add_option("--out", synth_flags.out, "Output path (default: stdout)");

  BootstrapFlags bootstrap_flags;
  auto* bootstrap = app.add_subcommand(
      "bootstrap", "Synthesize corpora, train every template's bundle and write a config dir");
  bootstrap->add_option("--templates", bootstrap_flags.templates, "Template directory")
      ->capture_default_str();
  bootstrap->add_option("--out", bootstrap_flags.out, "Config directory to write")
      ->capture_default_str();
  bootstrap->add_option("--size", bootstrap_flags.size, "Examples per corpus")
      ->capture_default_str();
  bootstrap->add_option("--corpus-seed", bootstrap_flags.corpus_seed, "Synthesis seed")
      ->capture_default_str();
  add_training_flags(bootstrap, bootstrap_flags.train);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*train) return cmd_train(train_flags, out);
    if (*eval) return cmd_eval(eval_flags, out);
    if (*scan) return cmd_scan(scan_flags, out);
    if (*serve) return cmd_serve(serve_flags, out);
    if (*synth) return cmd_synth(synth_flags, out);
    if (*bootstrap) return cmd_bootstrap(bootstrap_flags, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace llmguard
