// Runs every primary acceptance criterion once and prints one PASS/FAIL line
// per criterion. Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "focus/compare.h"
#include "focus/decoder.h"
#include "focus/error.h"
#include "focus/image_io.h"
#include "focus/leakage.h"
#include "focus/metrics.h"
#include "focus/noise_mask.h"
#include "focus/remote_provider.h"
#include "focus/synth.h"
#include "focus/synthetic_model.h"
#include "focus/wire.h"
#include "test_support.h"

namespace fs = std::filesystem;
using namespace focus;
using Clock = std::chrono::steady_clock;

namespace {

// Reference run: synth seed 1, similarity 0.3, 200 pairs, model beta 0.4
// (model seed 0), decoding seed 0, lambda 0.3, alpha 0.4, uniform noise.
namespace frozen {
constexpr double kTolerance = 0.02;
constexpr double kBaselineC = 0.5300;
constexpr double kBaselineAccSingle = 1.0000;
constexpr double kBaselineAccMulti = 0.3425;
constexpr double kFocusC = -0.0075;
constexpr double kFocusAccMulti = 0.9800;
// Image scores on the 0-100 scale; compared at kTolerance * 100.
constexpr double kFocusImage = 100.0;
constexpr double kVcdImage = 5.0;
constexpr double kBaselineImage = 68.5;
// Kolmogorov-Smirnov distance of lambda = 1 uniform masking against U(0, 1)
// over 256 x 256 x 3 elements: the p = 0.001 critical value 1.949 / sqrt(n).
// The reference run measured D = 0.0029.
constexpr double kKsThreshold = 1.949 / 443.40500673763256;  // sqrt(196608)
}  // namespace frozen

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  const auto start = Clock::now();
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  char timing[32];
  std::snprintf(timing, sizeof(timing), "%.2fs", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << timing << "] " << o.detail
            << std::endl;
  failures += !o.pass;
}

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

bool near_frozen(double value, double frozen, double tol) {
  return std::isfinite(frozen) && std::fabs(value - frozen) <= tol;
}

std::vector<ImageTensor> random_images(RandomStream& rng, std::size_t n) {
  std::vector<ImageTensor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_blocks(rng, 16, 16));
  return out;
}

SyntheticModelConfig random_model(RandomStream& rng) {
  SyntheticModelConfig c;
  c.beta = rng.uniform() * 0.8;
  c.seed = rng.below(1000);
  c.sharpness = 2.0 + 10.0 * rng.uniform();
  c.repetition_penalty = rng.uniform() * 2.0;
  return c;
}

std::string random_prompt(RandomStream& rng, std::size_t n) {
  if (rng.below(3) == 0) return "Describe all images.";
  return "Describe image " + std::to_string(1 + rng.below(n)) + ".";
}

Outcome reduction_identity_1() {
  RandomStream rng(101);
  const auto start = Clock::now();
  int mismatches = 0, cases = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 4);
    const SyntheticProvider model(random_model(rng));
    const auto images = random_images(rng, n);
    const std::string prompt = random_prompt(rng, n);
    const double alphas[3] = {0.0, 0.4, 0.9};
    DecodingConfig focus;
    focus.strategy = Strategy::kFocus;
    focus.lambda = 0.0;
    focus.alpha = alphas[trial % 3];
    focus.temperature = 0.0;
    focus.max_tokens = 8;
    focus.noise_type = static_cast<NoiseType>(rng.below(3));
    focus.seed = rng.next_u64();
    DecodingConfig base = focus;
    base.strategy = Strategy::kBaseline;
    mismatches += generate(model, images, prompt, focus).tokens !=
                  generate(model, images, prompt, base).tokens;
    ++cases;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {mismatches == 0 && secs < 10.0,
          std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " +
              num(secs, 2) + "s (limit 10s)"};
}

Outcome reduction_identity_2() {
  RandomStream rng(102);
  int mismatches = 0;
  long steps = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SyntheticProvider model(random_model(rng));
    const auto images = random_images(rng, 1);
    DecodingConfig focus;
    focus.strategy = Strategy::kFocus;
    focus.lambda = rng.uniform();
    focus.alpha = 0.0;
    focus.temperature = rng.uniform();
    focus.max_tokens = 6;
    focus.seed = rng.next_u64();
    DecodingConfig base = focus;
    base.strategy = Strategy::kBaseline;
    const ExecutionOptions exec{1, false, true};
    const auto a = generate(model, images, "image 1", focus, exec);
    const auto b = generate(model, images, "image 1", base, exec);
    mismatches += *a.per_step_logits != *b.per_step_logits || a.tokens != b.tokens;
    steps += a.steps;
  }
  return {mismatches == 0, "100 cases, " + std::to_string(steps) + " steps compared bitwise, " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome aggregation_oracle() {
  RandomStream rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t v = 1 + rng.below(64);
    std::vector<LogitVector> f;
    std::vector<std::vector<double>> raw;
    for (std::size_t k = 0; k < n; ++k) {
      f.push_back(testing::random_logits(rng, v, "v", 20.0));
      raw.emplace_back(f.back().values().begin(), f.back().values().end());
    }
    const LogitVector noise = testing::random_logits(rng, v, "v", 20.0);
    const double alpha = 3.0 * rng.uniform();
    const LogitVector out = aggregate_focus(f, noise, alpha);
    const auto expect = testing::oracle::focus_aggregate(
        raw, {noise.values().begin(), noise.values().end()}, alpha);
    for (std::size_t i = 0; i < v; ++i) worst = std::max(worst, std::fabs(out[i] - expect[i]));
  }
  return {worst <= 1e-12, "1000 cases, max |error| " + [&] {
            char b[32];
            std::snprintf(b, sizeof(b), "%.3g", worst);
            return std::string(b);
          }() + " (limit 1e-12)"};
}

Outcome pass_count_contract() {
  RandomStream rng(104);
  const SyntheticProvider model;
  int bad = 0, checked = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto images = random_images(rng, n);
    for (Strategy s : {Strategy::kBaseline, Strategy::kFocus, Strategy::kVcdVariant}) {
      DecodingConfig c;
      c.strategy = s;
      c.max_tokens = 5 + static_cast<int>(n);
      c.temperature = 0.5;
      const auto t = generate(model, images, "all images", c);
      const long per = s == Strategy::kFocus ? static_cast<long>(n) + 1
                       : s == Strategy::kVcdVariant ? 2 : 1;
      bad += t.forward_pass_count != t.steps * per || !t.complete;
      ++checked;
    }
  }
  return {bad == 0, std::to_string(checked) + " traces (N = 1..4, 3 strategies), " +
                        std::to_string(bad) + " violations"};
}

Outcome noise_statistics() {
  RandomStream gen(105);
  const std::vector<ImageTensor> inputs{ImageTensor::filled(256, 256, 3, 0.0f),
                                        ImageTensor::filled(256, 256, 3, 1.0f),
                                        testing::random_image(gen, 256, 256, 3)};
  double worst_mean = 0.0, worst_ks = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    RandomStream rng = RandomStream(7).substream(0, i);
    const ImageTensor out = apply_noise(inputs[i], {NoiseType::kUniform, 1.0}, rng);
    std::vector<double> v(out.data().begin(), out.data().end());
    double sum = 0.0;
    for (double x : v) sum += x;
    worst_mean = std::max(worst_mean, std::fabs(sum / static_cast<double>(v.size()) - 0.5));
    worst_ks = std::max(worst_ks, testing::oracle::ks_uniform(std::move(v)));
  }
  bool identity = true;
  for (NoiseType t : {NoiseType::kUniform, NoiseType::kGaussian, NoiseType::kImpulse}) {
    RandomStream rng(8);
    identity = identity && apply_noise(inputs[2], {t, 0.0}, rng) == inputs[2];
  }
  return {worst_mean <= 0.01 && worst_ks < frozen::kKsThreshold && identity,
          "max |mean - 0.5| " + num(worst_mean, 5) + ", max KS D " + num(worst_ks, 5) +
              " (threshold " + num(frozen::kKsThreshold, 5) + "), lambda=0 identity " +
              (identity ? "holds" : "broken")};
}

Outcome sampling_fidelity() {
  RandomStream rng(106);
  const LogitVector l({1.0, 2.0}, "v");
  const int draws = 100000;
  int ones = 0;
  for (int i = 0; i < draws; ++i) ones += sample_token(l, 1.0, rng) == 1;
  const double expect = std::exp(1.0) / (1.0 + std::exp(1.0));
  const double got = static_cast<double>(ones) / draws;
  return {std::fabs(got - expect) <= 0.005,
          "P(token 1) " + num(got, 5) + " vs e/(1+e) = " + num(expect, 5) + " (tol 0.005)"};
}

struct Suite {
  SynthDataset data;
  SyntheticProvider model;
};

const Suite& suite() {
  static const Suite s = [] {
    SynthOptions o;
    o.seed = 1;
    o.count = 200;
    o.similarity_level = 0.3;
    SyntheticModelConfig m;
    m.beta = 0.4;
    return Suite{synthesize_minimal_pairs(o), SyntheticProvider(m)};
  }();
  return s;
}

DecodingConfig strategy(Strategy s) {
  DecodingConfig c;
  c.strategy = s;
  c.lambda = 0.3;
  c.alpha = 0.4;
  c.noise_type = NoiseType::kUniform;
  return c;
}

Outcome leakage_reproduction() {
  const Suite& s = suite();
  const auto start = Clock::now();
  const LeakageReport base =
      run_leakage_experiment(s.data.leakage, s.model, strategy(Strategy::kBaseline));
  const LeakageReport focus =
      run_leakage_experiment(s.data.leakage, s.model, strategy(Strategy::kFocus));
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();

  const double tol = frozen::kTolerance;
  const bool direction = base.c_score > 0.0 && base.acc_multi < base.acc_single &&
                         focus.c_score <= 0.5 * base.c_score && focus.acc_multi > base.acc_multi;
  const bool regression = near_frozen(base.c_score, frozen::kBaselineC, tol) &&
                          near_frozen(base.acc_single, frozen::kBaselineAccSingle, tol) &&
                          near_frozen(base.acc_multi, frozen::kBaselineAccMulti, tol) &&
                          near_frozen(focus.c_score, frozen::kFocusC, tol) &&
                          near_frozen(focus.acc_multi, frozen::kFocusAccMulti, tol);
  return {direction && regression && secs < 120.0 && base.complete() && focus.complete(),
          std::to_string(s.data.leakage.size() / 2) + " pairs; baseline C " + num(base.c_score) +
              " acc_s " + num(base.acc_single) + " acc_m " + num(base.acc_multi) + "; focus C " +
              num(focus.c_score) + " acc_m " + num(focus.acc_multi) + "; direction " +
              (direction ? "ok" : "WRONG") + ", frozen " + (regression ? "ok" : "MISMATCH") +
              ", " + num(secs, 1) + "s single-threaded (limit 120s)"};
}

Outcome focus_beats_vcd() {
  const Suite& s = suite();
  const ComparisonReport r = compare_strategies(
      s.data.eval, s.model,
      {{"", strategy(Strategy::kBaseline)}, {"", strategy(Strategy::kFocus)},
       {"", strategy(Strategy::kVcdVariant)}});
  const double base = r.strategies[0].winoground.image;
  const double focus = r.strategies[1].winoground.image;
  const double vcd = r.strategies[2].winoground.image;
  const double tol = frozen::kTolerance * 100.0;
  const bool regression = near_frozen(focus, frozen::kFocusImage, tol) &&
                          near_frozen(vcd, frozen::kVcdImage, tol) &&
                          near_frozen(base, frozen::kBaselineImage, tol);
  return {focus > vcd && regression && r.complete(),
          "image score baseline " + num(base, 2) + ", focus " + num(focus, 2) + ", vcd " +
              num(vcd, 2) + "; frozen " + (regression ? "ok" : "MISMATCH")};
}

Outcome metric_identities() {
  RandomStream rng(107);
  int violations = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<InstanceResult> results;
    const std::size_t groups = 1 + rng.below(12);
    for (std::size_t g = 0; g < groups; ++g) {
      for (int k = 0; k < 4; ++k) {
        InstanceResult r;
        r.id = "g" + std::to_string(g) + "-" + std::to_string(k);
        r.group_id = "g" + std::to_string(g);
        r.task_kind = k < 2 ? TaskKind::kCaptionChoice : TaskKind::kImageChoice;
        r.gold = static_cast<std::size_t>(k % 2);
        if (rng.below(20) != 0) r.predicted = rng.below(2);
        results.push_back(r);
      }
    }
    const auto w = winoground_scores(results);
    violations += w.group > std::min(w.text, w.image);
    for (double v : {w.text, w.image, w.group}) violations += v < 0.0 || v > 100.0;
  }
  // Leakage ratios on a few small synthetic runs with varying beta.
  SynthOptions o;
  o.count = 10;
  const auto pairs = synthesize_minimal_pairs(o).leakage;
  int leak_checks = 0;
  for (double beta : {0.0, 0.3, 0.6, 1.0}) {
    SyntheticModelConfig m;
    m.beta = beta;
    const SyntheticProvider model(m);
    for (Strategy s : {Strategy::kBaseline, Strategy::kFocus, Strategy::kVcdVariant}) {
      const auto r = run_leakage_experiment(pairs, model, strategy(s));
      violations += r.c_score != r.r_multi - r.r_single;
      for (double v : {r.r_single, r.r_multi, r.acc_single, r.acc_multi}) {
        violations += v < 0.0 || v > 1.0;
      }
      ++leak_checks;
    }
  }
  return {violations == 0, "2000 random result sets, " + std::to_string(leak_checks) +
                               " leakage reports, " + std::to_string(violations) + " violations"};
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << "cli failed: " << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const fs::path& work) {
  const fs::path data = work / "det_data";
  if (run_cli({"synth", "--count", "15", "--seed", "2", "--overwrite", "--out", data.string()}))
    return {false, "synth failed"};
  const SyntheticProvider model;
  write_png(work / "det_a.png", render_solid(model.palette(4), 16, 16));
  write_png(work / "det_b.png", render_solid(model.palette(9), 16, 16));

  const std::vector<std::vector<std::string>> commands{
      {"compare", "--dataset", (data / "eval.jsonl").string(), "--temperature", "0.7"},
      {"eval", "--dataset", (data / "eval.jsonl").string(), "--strategy", "vcd", "--noise",
       "gaussian"},
      {"leakage", "--dataset", (data / "leakage.jsonl").string(), "--noise", "impulse"},
      {"generate", "--image", (work / "det_a.png").string(), "--image",
       (work / "det_b.png").string(), "--prompt", "all images", "--temperature", "1.5",
       "--seed", "7"},
  };
  int identical = 0;
  std::string differing;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::string records[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = work / ("det_" + std::to_string(c) + "_" + std::to_string(run));
      auto args = commands[c];
      args.insert(args.end(), {"--overwrite", "--out", out.string()});
      if (run_cli(args) != 0) return {false, commands[c][0] + " failed"};
      records[run] = slurp(out / "records.jsonl");
    }
    if (!records[0].empty() && records[0] == records[1]) {
      ++identical;
    } else {
      differing += " " + commands[c][0];
    }
  }
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " commands byte-identical across runs" + (differing.empty() ? "" : ";" + differing)};
}

Outcome parallel_serial(const fs::path& work) {
  RandomStream rng(108);
  int mismatches = 0, steps = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng.below(4);
    const SyntheticProvider model(random_model(rng));
    const auto images = random_images(rng, n);
    DecodingConfig c = strategy(Strategy::kFocus);
    c.lambda = rng.uniform();
    c.alpha = rng.uniform();
    c.noise_type = static_cast<NoiseType>(rng.below(3));
    const RandomStream noise(rng.next_u64());
    const std::string prompt = random_prompt(rng, n);
    for (std::uint64_t step = 0; step < 3; ++step) {
      const auto a = focus_step(model, images, prompt, {}, c, noise, step, {1, false, false});
      const auto b = focus_step(model, images, prompt, {}, c, noise, step, {8, false, false});
      mismatches += !(a.final_logits == b.final_logits);
      ++steps;
    }
  }
  // The same through the tool: --jobs 1 against --jobs 8.
  const fs::path data = work / "det_data";
  std::string records[2];
  const char* jobs[2] = {"1", "8"};
  for (int i = 0; i < 2; ++i) {
    const fs::path out = work / (std::string("jobs_") + jobs[i]);
    if (run_cli({"eval", "--dataset", (data / "eval.jsonl").string(), "--jobs", jobs[i],
                 "--overwrite", "--out", out.string()}) != 0) {
      return {false, "eval --jobs " + std::string(jobs[i]) + " failed"};
    }
    records[i] = slurp(out / "records.jsonl");
  }
  const bool cli_same = !records[0].empty() && records[0] == records[1];
  return {mismatches == 0 && cli_same,
          std::to_string(steps) + " focus steps bitwise-compared, " + std::to_string(mismatches) +
              " mismatches; eval records --jobs 1 vs 8 " + (cli_same ? "identical" : "DIFFER")};
}

Outcome loopback_stub() {
  const SyntheticProvider model;
  ProtocolServer server(model, {});
  server.start();
  RemoteOptions o;
  o.endpoint = server.url();
  const RemoteProvider remote(o);
  SynthOptions so;
  so.count = 5;
  const auto instances = synthesize_minimal_pairs(so).eval;
  const auto local = compare_strategies(instances, model, {{"", strategy(Strategy::kFocus)}});
  const auto wired = compare_strategies(instances, remote, {{"", strategy(Strategy::kFocus)}});
  bool same = local.records.size() == wired.records.size();
  for (std::size_t i = 0; same && i < local.records.size(); ++i) {
    same = local.records[i].scores == wired.records[i].scores;
  }
  return {same, std::to_string(server.requests_served()) +
                    " requests over loopback, scores " + (same ? "bitwise equal" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "focus_acceptance";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--workdir") work = argv[i + 1];
  }
  fs::create_directories(work);

  report("reduction-identity-1 (lambda=0 greedy focus == baseline)", reduction_identity_1);
  report("reduction-identity-2 (N=1 alpha=0 bitwise baseline)", reduction_identity_2);
  report("aggregation-oracle", aggregation_oracle);
  report("pass-count-contract", pass_count_contract);
  report("noise-statistics", noise_statistics);
  report("sampling-fidelity", sampling_fidelity);
  report("leakage-reproduction", leakage_reproduction);
  report("focus-beats-vcd-variant", focus_beats_vcd);
  report("metric-identities", metric_identities);
  report("determinism (cli twice)", [&] { return determinism(work); });
  report("parallel-serial-equivalence", [&] { return parallel_serial(work); });
  report("loopback-protocol-stub", loopback_stub);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
