#include "focus/remote_provider.h"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "focus/error.h"

namespace focus {
namespace {

using json = nlohmann::json;
using Kind = ProviderError::Kind;

}  // namespace

Endpoint Endpoint::parse(const std::string& url) {
  Endpoint e;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint '" + url + "' lacks a scheme (http://...)");
  }
  e.scheme = url.substr(0, scheme_end);
  if (e.scheme != "http") {
    throw InvalidArgument("endpoint scheme '" + e.scheme + "' is not supported");
  }
  const auto rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  const auto authority = rest.substr(0, slash);
  e.path = slash == std::string::npos ? "" : rest.substr(slash);
  if (e.path.empty() || e.path == "/") e.path = "/logits";
  const auto colon = authority.rfind(':');
  if (colon == std::string::npos) {
    e.host = authority;
  } else {
    e.host = authority.substr(0, colon);
    try {
      e.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("endpoint '" + url + "' has a bad port");
    }
  }
  if (e.host.empty() || e.port <= 0 || e.port > 65535) {
    throw InvalidArgument("endpoint '" + url + "' has no usable host/port");
  }
  return e;
}

std::string Endpoint::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

struct RemoteProvider::Pool {
  std::mutex mutex;
  std::condition_variable available;
  std::vector<std::unique_ptr<httplib::Client>> idle;
  std::size_t created = 0;
  std::size_t limit;
  std::string origin;
  std::chrono::milliseconds timeout;
  std::atomic<std::uint64_t> attempts{0};

  std::mutex vocab_mutex;
  std::optional<std::string> vocab_id;
  std::optional<ServerInfo> health;

  Pool(std::size_t n, std::string o, std::chrono::milliseconds t)
      : limit(std::max<std::size_t>(1, n)), origin(std::move(o)), timeout(t) {}

  std::unique_ptr<httplib::Client> acquire() {
    std::unique_lock lock(mutex);
    available.wait(lock, [&] { return !idle.empty() || created < limit; });
    if (!idle.empty()) {
      auto client = std::move(idle.back());
      idle.pop_back();
      return client;
    }
    ++created;
    lock.unlock();
    auto client = std::make_unique<httplib::Client>(origin);
    const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
    client->set_connection_timeout(sec.count(), usec.count());
    client->set_read_timeout(sec.count(), usec.count());
    client->set_write_timeout(sec.count(), usec.count());
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    {
      std::lock_guard lock(mutex);
      if (client) {
        idle.push_back(std::move(client));
      } else {
        --created;
      }
    }
    available.notify_one();
  }

  // One attempt. Returns the body on a response carrying JSON, throws
  // ProviderError(kTransport/kTimeout) otherwise.
  std::string exchange(const std::function<httplib::Result(httplib::Client&)>& call) {
    ++attempts;
    auto client = acquire();
    const auto started = std::chrono::steady_clock::now();
    httplib::Result result = call(*client);
    if (!result) {
      const auto err = result.error();
      release(nullptr);  // drop the connection; it may be half-open
      // httplib reports a read deadline as a plain read error.
      const bool deadline = std::chrono::steady_clock::now() - started >= timeout;
      const Kind kind = (err == httplib::Error::ConnectionTimeout || deadline)
                            ? Kind::kTimeout
                            : Kind::kTransport;
      throw ProviderError(kind, "request to " + origin + " failed: " + httplib::to_string(err));
    }
    std::string body = std::move(result->body);
    const int status = result->status;
    const bool is_json = result->get_header_value("Content-Type").find("json") != std::string::npos;
    release(std::move(client));
    if (!is_json && status >= 500) {
      throw ProviderError(Kind::kTransport,
                          origin + " answered HTTP " + std::to_string(status));
    }
    return body;
  }
};

RemoteProvider::RemoteProvider(RemoteOptions options)
    : options_(std::move(options)), endpoint_(Endpoint::parse(options_.endpoint)) {
  if (options_.retries < 0) throw InvalidArgument("retries must be >= 0");
  if (options_.timeout.count() <= 0) throw InvalidArgument("timeout must be positive");
  pool_ = std::make_unique<Pool>(options_.pool_size, endpoint_.origin(), options_.timeout);
}

RemoteProvider::~RemoteProvider() = default;

std::uint64_t RemoteProvider::attempts() const noexcept { return pool_->attempts.load(); }

namespace {

template <typename Fn>
std::string with_retries(const RemoteOptions& options, Fn&& attempt) {
  auto delay = options.backoff;
  for (int i = 0;; ++i) {
    try {
      return attempt();
    } catch (const ProviderError& e) {
      const bool transient = e.kind() == Kind::kTransport || e.kind() == Kind::kTimeout;
      if (!transient || i >= options.retries) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProviderError(Kind::kProtocol,
                        std::string("protocol violation: response is not JSON: ") + e.what());
  }
}

}  // namespace

LogitVector RemoteProvider::next_token_logits(const ProviderRequest& request) const {
  request.validate();
  const std::string payload = encode_request(request, options_.encoding).dump();
  const std::string body = with_retries(options_, [&] {
    return pool_->exchange([&](httplib::Client& client) {
      return client.Post(endpoint_.path, payload, "application/json");
    });
  });
  LogitVector logits = decode_response(parse_body(body));

  std::lock_guard lock(pool_->vocab_mutex);
  if (!pool_->vocab_id) {
    pool_->vocab_id = logits.vocab_id();
  } else if (*pool_->vocab_id != logits.vocab_id()) {
    throw ProviderError(Kind::kVocabMismatch,
                        "vocab_id changed from '" + *pool_->vocab_id + "' to '" +
                            logits.vocab_id() + "'");
  }
  return logits;
}

ServerInfo RemoteProvider::health() const {
  {
    std::lock_guard lock(pool_->vocab_mutex);
    if (pool_->health) return *pool_->health;
  }
  const std::string body = with_retries(options_, [&] {
    return pool_->exchange([](httplib::Client& client) { return client.Get("/health"); });
  });
  ServerInfo info = decode_health(parse_body(body));
  std::lock_guard lock(pool_->vocab_mutex);
  if (pool_->vocab_id && *pool_->vocab_id != info.vocab_id) {
    throw ProviderError(Kind::kVocabMismatch,
                        "health reports vocab_id '" + info.vocab_id + "', responses used '" +
                            *pool_->vocab_id + "'");
  }
  pool_->vocab_id = info.vocab_id;
  pool_->health = info;
  return info;
}

VocabInfo RemoteProvider::vocab() const {
  const ServerInfo info = health();
  VocabInfo vocab;
  vocab.size = info.vocab_size;
  vocab.id = info.vocab_id;
  return vocab;
}

}  // namespace focus
