#include "cli.h"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "focus/compare.h"
#include "focus/dataset.h"
#include "focus/decoder.h"
#include "focus/error.h"
#include "focus/image_io.h"
#include "focus/leakage.h"
#include "focus/remote_provider.h"
#include "focus/synth.h"
#include "focus/synthetic_model.h"
#include "focus/version.h"
#include "focus/wire.h"
#include "output_dir.h"

namespace focus::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::vector<std::string> strategies;
  double lambda = 0.3;
  double alpha = 0.4;
  double temperature = 0.2;
  std::string noise = "uniform";
  std::uint64_t seed = 0;
  int max_tokens = 16;

  std::string provider = "synthetic";
  std::string endpoint;
  int timeout_ms = 30000;
  int retries = 2;
  std::string encoding = "raw-f32";
  SyntheticModelConfig model;

  std::string dataset;
  std::string out;
  int jobs = 1;
  bool trace = false;
  bool overwrite = false;

  // generate
  std::vector<std::string> images;
  std::string prompt;
  // eval / compare
  double split_fraction = 0.0;
  std::uint64_t split_seed = 0;
  // leakage
  std::string prompt_template = std::string(kDefaultLeakagePrompt);
  std::vector<int> option_tokens;
  // synth
  std::size_t count = 100;
  double similarity = 0.3;
  int image_size = 32;
  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/logits";
};

DecodingConfig decoding_config(const Options& o, const std::string& strategy) {
  DecodingConfig c;
  c.strategy = parse_strategy(strategy);
  c.lambda = o.lambda;
  c.alpha = o.alpha;
  c.temperature = o.temperature;
  c.noise_type = parse_noise_type(o.noise);
  c.seed = o.seed;
  c.max_tokens = o.max_tokens;
  c.validate();
  return c;
}

DecodingConfig single_config(const Options& o) {
  if (o.strategies.size() > 1) {
    throw InvalidArgument("this command takes one --strategy (use compare for several)");
  }
  return decoding_config(o, o.strategies.empty() ? "focus" : o.strategies.front());
}

std::unique_ptr<LogitProvider> make_provider(const Options& o) {
  if (o.provider == "synthetic") return std::make_unique<SyntheticProvider>(o.model);
  if (o.provider == "remote") {
    if (o.endpoint.empty()) {
      throw InvalidArgument("--provider remote needs --endpoint or FOCUS_ENDPOINT");
    }
    RemoteOptions r;
    r.endpoint = o.endpoint;
    r.timeout = std::chrono::milliseconds(o.timeout_ms);
    r.retries = o.retries;
    r.pool_size = static_cast<std::size_t>(std::max(1, o.jobs) * 4);
    r.encoding = parse_image_encoding(o.encoding);
    return std::make_unique<RemoteProvider>(r);
  }
  throw InvalidArgument("unknown provider '" + o.provider + "'");
}

json provider_json(const Options& o) {
  if (o.provider == "synthetic") return json{{"kind", "synthetic"}, {"synthetic", o.model}};
  return json{{"kind", "remote"},
              {"endpoint", o.endpoint},
              {"timeout_ms", o.timeout_ms},
              {"retries", o.retries},
              {"encoding", o.encoding}};
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json manifest(const std::string& command, const Options& o, json config, const OutputDir& dir) {
  json m{{"schema_version", kSchemaVersion},
         {"command", command},
         {"config", std::move(config)},
         {"provider", provider_json(o)},
         {"dataset", o.dataset.empty() ? json(nullptr)
                                       : json(fs::absolute(o.dataset).lexically_normal().string())},
         {"output_dir", dir.target().string()},
         {"jobs", o.jobs},
         {"timestamp", utc_timestamp()},
         {"tool_version", kVersion}};
  return m;
}

template <typename Records>
void write_jsonl(const fs::path& path, const Records& records) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& r : records) out << json(r).dump() << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<EvalInstance> load_eval(const Options& o, std::ostream& err) {
  if (o.dataset.empty()) throw InvalidArgument("--dataset is required");
  Dataset data = load_dataset(o.dataset);
  for (const auto& w : data.warnings) err << "warning: " << w << '\n';
  if (o.split_fraction > 0.0) {
    Split split = split_dataset(data.instances, o.split_fraction, o.split_seed);
    err << "split: holding out " << split.held_out.size() << " of " << data.instances.size()
        << " instances\n";
    return std::move(split.evaluated);
  }
  return std::move(data.instances);
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_strategy_table(const ComparisonReport& report, std::ostream& out) {
  out << std::left << std::setw(14) << "strategy" << std::right << std::setw(8) << "text"
      << std::setw(8) << "image" << std::setw(8) << "group" << std::setw(10) << "accuracy"
      << std::setw(10) << "passes" << std::setw(8) << "failed" << '\n';
  for (const auto& m : report.strategies) {
    out << std::left << std::setw(14) << m.label << std::right << std::setw(8)
        << fixed(m.winoground.text) << std::setw(8) << fixed(m.winoground.image) << std::setw(8)
        << fixed(m.winoground.group) << std::setw(10)
        << (m.accuracy ? fixed(*m.accuracy, 4) : std::string("-")) << std::setw(10)
        << m.forward_pass_count << std::setw(8) << m.failed << '\n';
  }
  for (const auto& d : report.deltas) {
    out << "delta " << d.to << " - " << d.from << ": text " << fixed(d.text) << ", image "
        << fixed(d.image) << ", group " << fixed(d.group) << ", accuracy "
        << fixed(d.accuracy, 4) << '\n';
  }
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
  const DecodingConfig config = single_config(o);
  if (o.images.empty()) throw InvalidArgument("generate needs at least one --image");
  if (o.prompt.empty()) throw InvalidArgument("generate needs --prompt");
  std::vector<ImageTensor> images;
  for (const auto& p : o.images) images.push_back(read_png(p));
  const auto provider = make_provider(o);

  std::optional<OutputDir> dir;
  if (!o.out.empty()) {
    dir.emplace(o.out, o.overwrite);
    json cfg = config;
    cfg["images"] = o.images;
    cfg["prompt"] = o.prompt;
    write_json(dir->file("manifest.json"), manifest("generate", o, std::move(cfg), *dir));
  } else if (o.trace) {
    throw InvalidArgument("--trace needs --out");
  }

  ExecutionOptions exec;
  exec.jobs = o.jobs;
  exec.keep_step_logits = o.trace;
  const GenerationTrace trace = generate(*provider, images, o.prompt, config, exec);

  const VocabInfo vocab = trace.complete ? provider->vocab() : VocabInfo{};
  out << "tokens:";
  for (TokenId t : trace.tokens) out << ' ' << t;
  out << '\n';
  if (!vocab.names.empty()) {
    out << "text:";
    for (TokenId t : trace.tokens) out << ' ' << vocab.names.at(static_cast<std::size_t>(t));
    out << '\n';
  }
  out << "steps: " << trace.steps << ", forward passes: " << trace.forward_pass_count << '\n';

  if (dir) {
    if (o.trace) write_json(dir->file("trace.json"), json(trace));
    write_jsonl(dir->file("records.jsonl"), std::vector<json>{json{
        {"schema_version", kSchemaVersion}, {"tokens", trace.tokens},
        {"forward_pass_count", trace.forward_pass_count}, {"complete", trace.complete}}});
    dir->commit();
  }
  if (!trace.complete) {
    err << "error: generation incomplete: " << trace.error << '\n';
    return kIncomplete;
  }
  return kOk;
}

int run_comparison(const std::string& command, const Options& o, std::vector<StrategyRun> runs,
                   std::ostream& out, std::ostream& err) {
  const std::vector<EvalInstance> instances = load_eval(o, err);
  if (instances.empty()) {
    err << "error: no instances in " << o.dataset << '\n';
    return kUsage;
  }
  const auto provider = make_provider(o);
  std::optional<OutputDir> dir;
  if (!o.out.empty()) {
    dir.emplace(o.out, o.overwrite);
    json configs = json::array();
    for (const auto& r : runs) configs.push_back(json{{"label", r.label}, {"config", r.config}});
    json cfg{{"runs", std::move(configs)},
             {"split_fraction", o.split_fraction},
             {"split_seed", o.split_seed}};
    write_json(dir->file("manifest.json"), manifest(command, o, std::move(cfg), *dir));
  }

  CompareOptions options;
  options.jobs = o.jobs;
  const ComparisonReport report = compare_strategies(instances, *provider, std::move(runs), options);
  print_strategy_table(report, out);

  std::size_t failed = 0;
  for (const auto& m : report.strategies) failed += m.failed;
  if (dir) {
    write_json(dir->file("summary.json"), summary_json(report));
    write_jsonl(dir->file("records.jsonl"), report.records);
    dir->commit();
    out << "wrote " << dir->target().string() << '\n';
  }
  if (failed > 0) {
    err << "error: " << failed << " instance run(s) failed\n";
    return kIncomplete;
  }
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const DecodingConfig config = single_config(o);
  return run_comparison("eval", o, {{"", config}}, out, err);
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<std::string> names = o.strategies;
  if (names.empty()) names = {"baseline", "focus", "vcd"};
  std::vector<StrategyRun> runs;
  for (const auto& n : names) runs.push_back({"", decoding_config(o, n)});
  return run_comparison("compare", o, std::move(runs), out, err);
}

int cmd_leakage(const Options& o, std::ostream& out, std::ostream& err) {
  const DecodingConfig config = single_config(o);
  if (o.dataset.empty()) throw InvalidArgument("--dataset is required");
  const std::vector<LeakageInstance> instances = load_leakage_instances(o.dataset);
  if (instances.empty()) {
    err << "error: no instances in " << o.dataset << '\n';
    return kUsage;
  }
  const auto provider = make_provider(o);
  LeakageOptions options;
  options.prompt_template = o.prompt_template;
  options.jobs = o.jobs;
  if (!o.option_tokens.empty()) {
    if (o.option_tokens.size() != 3) throw InvalidArgument("--option-tokens takes three ids");
    options.option_tokens = std::array<TokenId, 3>{o.option_tokens[0], o.option_tokens[1],
                                                   o.option_tokens[2]};
  }

  std::optional<OutputDir> dir;
  if (!o.out.empty()) {
    dir.emplace(o.out, o.overwrite);
    json cfg = config;
    cfg["prompt_template"] = o.prompt_template;
    write_json(dir->file("manifest.json"), manifest("leakage", o, std::move(cfg), *dir));
  }
  const LeakageReport report = run_leakage_experiment(instances, *provider, config, options);
  out << "strategy " << to_string(config.strategy) << ", " << instances.size() << " instances\n"
      << "R_s " << fixed(report.r_single, 4) << "  R_m " << fixed(report.r_multi, 4) << "  C "
      << fixed(report.c_score, 4) << '\n'
      << "acc_single " << fixed(report.acc_single, 4) << "  acc_multi "
      << fixed(report.acc_multi, 4) << '\n'
      << "mean pair similarity " << fixed(report.mean_pair_similarity, 4)
      << " (feature cosine)\n";
  if (dir) {
    json summary = report;
    summary.erase("records");
    write_json(dir->file("leakage_report.json"), summary);
    write_jsonl(dir->file("records.jsonl"), report.records);
    dir->commit();
    out << "wrote " << dir->target().string() << '\n';
  }
  if (report.n_failed > 0) {
    err << "error: " << report.n_failed << " condition run(s) failed\n";
    return kIncomplete;
  }
  return kOk;
}

int cmd_synth(const Options& o, std::ostream& out, std::ostream&) {
  if (o.out.empty()) throw InvalidArgument("synth needs --out");
  SynthOptions s;
  s.seed = o.seed;
  s.count = o.count;
  s.similarity_level = o.similarity;
  s.image_size = o.image_size;
  s.model = o.model;
  OutputDir dir(o.out, o.overwrite);
  json cfg{{"seed", s.seed},
           {"count", s.count},
           {"similarity_level", s.similarity_level},
           {"image_size", s.image_size}};
  write_json(dir.file("manifest.json"), manifest("synth", o, std::move(cfg), dir));
  const SynthDataset data = synthesize_minimal_pairs(s);
  write_synthetic_dataset(data, dir.staging());
  dir.commit();
  out << "wrote " << data.eval.size() << " eval and " << data.leakage.size()
      << " leakage instances to " << dir.target().string() << '\n';
  return kOk;
}

volatile std::sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }

int cmd_serve(const Options& o, std::ostream& out, std::ostream&) {
  const auto provider = make_provider(o);
  ProtocolServer::Options so;
  so.host = o.host;
  so.port = o.port;
  so.path = o.path;
  so.model_id = o.provider == "synthetic" ? "synthetic" : o.endpoint;
  so.threads = std::max(1, o.jobs);
  ProtocolServer server(*provider, so);
  server.start();
  out << "serving " << server.url() << " (GET /health)" << std::endl;
  g_stop = 0;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

void add_common(CLI::App& app, Options& o) {
  app.add_option("--strategy", o.strategies, "baseline | focus | vcd (repeatable for compare)")
      ->check(CLI::IsMember({"baseline", "focus", "vcd", "vcd_variant"}));
  app.add_option("--lambda", o.lambda, "noise scale in [0,1]")->capture_default_str();
  app.add_option("--alpha", o.alpha, "contrastive weight >= 0")->capture_default_str();
  app.add_option("--temperature", o.temperature, "sampling temperature, 0 = greedy")
      ->capture_default_str();
  app.add_option("--noise", o.noise, "uniform | gaussian | impulse")
      ->check(CLI::IsMember({"uniform", "gaussian", "impulse"}))
      ->capture_default_str();
  app.add_option("--seed", o.seed, "decoding / synthesis seed")->capture_default_str();
  app.add_option("--max-tokens", o.max_tokens, "generation length bound")->capture_default_str();

  app.add_option("--provider", o.provider, "synthetic | remote")
      ->check(CLI::IsMember({"synthetic", "remote"}))
      ->capture_default_str();
  app.add_option("--endpoint", o.endpoint, "remote endpoint URL")->envname("FOCUS_ENDPOINT");
  app.add_option("--timeout-ms", o.timeout_ms, "remote request timeout")->capture_default_str();
  app.add_option("--retries", o.retries, "remote retries on transport failure")
      ->capture_default_str();
  app.add_option("--encoding", o.encoding, "raw-f32 | png image encoding on the wire")
      ->check(CLI::IsMember({"raw-f32", "png", "raw-f32-base64", "png-base64"}))
      ->capture_default_str();
  app.add_option("--beta", o.model.beta, "synthetic mixing coefficient")->capture_default_str();
  app.add_option("--model-seed", o.model.seed, "synthetic prototype seed")->capture_default_str();
  app.add_option("--sharpness", o.model.sharpness, "synthetic logit scale")->capture_default_str();
  app.add_option("--position-bias", o.model.position_bias, "synthetic image-option bias")
      ->capture_default_str();
  app.add_option("--repetition-penalty", o.model.repetition_penalty,
                 "synthetic repetition penalty")
      ->capture_default_str();
  app.add_option("--legibility-gating", o.model.legibility_gating,
                 "synthetic legibility gating (true|false)")
      ->capture_default_str();

  app.add_option("--dataset", o.dataset, "dataset file (JSONL)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--jobs", o.jobs, "parallel provider calls")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--trace", o.trace, "keep per-step logits (generate)");
  app.add_flag("--overwrite", o.overwrite, "replace an existing output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"FOCUS multi-image decoding engine", "focus"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML-like file of option = value lines");
  app.require_subcommand(1);
  app.fallthrough();
  add_common(app, o);

  auto* gen = app.add_subcommand("generate", "decode a token sequence for images + prompt");
  gen->add_option("--image", o.images, "PNG image, repeat in slot order");
  gen->add_option("--prompt", o.prompt, "prompt text");

  auto* ev = app.add_subcommand("eval", "score one strategy on an eval dataset");
  auto* cmp = app.add_subcommand("compare", "score several strategies on the same instances");
  for (auto* sub : {ev, cmp}) {
    sub->add_option("--split-fraction", o.split_fraction,
                    "hold out this fraction of groups (validation split)")
        ->check(CLI::Range(0.0, 0.99));
    sub->add_option("--split-seed", o.split_seed, "seed choosing the held-out groups");
  }

  auto* leak = app.add_subcommand("leakage", "merged-caption leakage probe");
  leak->add_option("--prompt-template", o.prompt_template, "uses {slot} and {options}")
      ->capture_default_str();
  leak->add_option("--option-tokens", o.option_tokens, "token ids answering A B C")
      ->expected(3);

  auto* syn = app.add_subcommand("synth", "write a synthetic minimal-pair dataset");
  syn->add_option("--count", o.count, "image pairs")->capture_default_str();
  syn->add_option("--similarity", o.similarity, "shared-colour share of each image")
      ->capture_default_str();
  syn->add_option("--image-size", o.image_size, "image side in pixels")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "serve the configured provider over the wire protocol");
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--path", o.path)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    o.model.validate();
    if (*gen) return cmd_generate(o, out, err);
    if (*ev) return cmd_eval(o, out, err);
    if (*cmp) return cmd_compare(o, out, err);
    if (*leak) return cmd_leakage(o, out, err);
    if (*syn) return cmd_synth(o, out, err);
    if (*serve) return cmd_serve(o, out, err);
  } catch (const ProviderError& e) {
    err << "error: provider (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kIncomplete;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace focus::cli
