#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "focus/features.h"
#include "focus/image.h"
#include "focus/logits.h"
#include "focus/provider.h"
#include "focus/random.h"
#include "focus/synthetic_model.h"

namespace focus::testing {

// Provider backed by a callable; counts calls.
class FunctionProvider final : public LogitProvider {
 public:
  using Fn = std::function<LogitVector(const ProviderRequest&)>;

  FunctionProvider(Fn fn, VocabInfo vocab) : fn_(std::move(fn)), vocab_(std::move(vocab)) {}

  LogitVector next_token_logits(const ProviderRequest& request) const override {
    ++calls_;
    return fn_(request);
  }
  VocabInfo vocab() const override { return vocab_; }
  long calls() const { return calls_.load(); }

 private:
  Fn fn_;
  VocabInfo vocab_;
  mutable std::atomic<long> calls_{0};
};

// Returns the same logits for every request.
class StubProvider final : public LogitProvider {
 public:
  explicit StubProvider(LogitVector logits, std::size_t declared_size = 0)
      : logits_(std::move(logits)),
        declared_size_(declared_size == 0 ? logits_.size() : declared_size) {}

  LogitVector next_token_logits(const ProviderRequest&) const override {
    ++calls_;
    std::lock_guard lock(mutex_);
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    return logits_;
  }
  VocabInfo vocab() const override {
    std::lock_guard lock(mutex_);
    return VocabInfo{declared_size_, logits_.vocab_id(), {}, std::nullopt};
  }
  void set_logits(LogitVector logits) {
    std::lock_guard lock(mutex_);
    logits_ = std::move(logits);
  }
  void set_delay(std::chrono::milliseconds d) {
    std::lock_guard lock(mutex_);
    delay_ = d;
  }
  long calls() const { return calls_.load(); }

 private:
  mutable std::mutex mutex_;
  LogitVector logits_;
  std::size_t declared_size_;
  std::chrono::milliseconds delay_{0};
  mutable std::atomic<long> calls_{0};
};

// Uniform random pixels.
ImageTensor random_image(RandomStream& rng, int h, int w, int c);
// Random solid-colour blocks: a piecewise-flat, fully legible image.
ImageTensor random_blocks(RandomStream& rng, int h, int w);
LogitVector random_logits(RandomStream& rng, std::size_t n, const std::string& vocab_id,
                          double scale = 5.0);

// Independent re-implementations used as oracles.
namespace oracle {

std::vector<double> features(const ImageTensor& image, int dim);
// Spec mixing formula, no gating.
std::vector<double> mixed(const std::vector<std::vector<double>>& f, std::size_t k, double beta);
// sum_k f_k - N * alpha * f_noise
std::vector<double> focus_aggregate(const std::vector<std::vector<double>>& f,
                                    const std::vector<double>& noise, double alpha);
std::vector<double> softmax(const std::vector<double>& v, double t);
// Token whose unit prototype is nearest (Euclidean) to `x`.
TokenId nearest_prototype(const SyntheticProvider& model, const std::vector<double>& x,
                          std::size_t first, std::size_t last);
double ks_uniform(std::vector<double> samples);

}  // namespace oracle

}  // namespace focus::testing
