#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "focus/provider.h"
#include "focus/wire.h"

namespace focus {

struct RemoteOptions {
  // "http://host:port/path"; an empty or "/" path means "/logits".
  std::string endpoint;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;  // extra attempts after a transport failure or timeout
  std::chrono::milliseconds backoff{100};  // doubled after each failed attempt
  std::size_t pool_size = 8;
  ImageEncoding encoding = ImageEncoding::kRawF32;
};

// Parsed "http://host:port/path".
struct Endpoint {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path;

  static Endpoint parse(const std::string& url);
  std::string origin() const;
};

// Client side of the wire protocol. Transport failures and timeouts are
// retried with exponential backoff; server error objects and protocol
// violations are not. The first response fixes the vocab_id; any later
// response with a different id raises ProviderError(kVocabMismatch).
class RemoteProvider final : public LogitProvider {
 public:
  explicit RemoteProvider(RemoteOptions options);
  ~RemoteProvider() override;

  LogitVector next_token_logits(const ProviderRequest& request) const override;
  // Queries GET /health once and caches the answer.
  VocabInfo vocab() const override;
  ServerInfo health() const;

  const RemoteOptions& options() const noexcept { return options_; }
  std::uint64_t attempts() const noexcept;

 private:
  struct Pool;
  RemoteOptions options_;
  Endpoint endpoint_;
  std::unique_ptr<Pool> pool_;
};

}  // namespace focus
