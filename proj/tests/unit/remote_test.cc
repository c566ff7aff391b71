#include "focus/remote_provider.h"

#include <chrono>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "focus/error.h"
#include "focus/synthetic_model.h"
#include "test_support.h"

namespace focus {
namespace {

using namespace std::chrono_literals;
using Kind = ProviderError::Kind;

ProviderRequest sample_request() {
  RandomStream rng(1);
  return ProviderRequest{ImageContext({testing::random_blocks(rng, 8, 8),
                                       testing::random_blocks(rng, 8, 8)}),
                         "What is in image 2?", {1, 2}};
}

// A loopback port that was free a moment ago and has nothing listening.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

RemoteOptions fast_options(const std::string& url) {
  RemoteOptions o;
  o.endpoint = url;
  o.timeout = 2000ms;
  o.retries = 2;
  o.backoff = 5ms;
  return o;
}

Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ProviderError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ProviderError thrown";
  return Kind::kInvalidRequest;
}

// Serves canned bodies on /logits.
class RawServer {
 public:
  explicit RawServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/logits", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~RawServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/logits"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(Endpoint, Parse) {
  const Endpoint e = Endpoint::parse("http://localhost:8123");
  EXPECT_EQ(e.host, "localhost");
  EXPECT_EQ(e.port, 8123);
  EXPECT_EQ(e.path, "/logits");
  EXPECT_EQ(Endpoint::parse("http://h/").path, "/logits");
  EXPECT_EQ(Endpoint::parse("http://h:1/v1/next").path, "/v1/next");
  EXPECT_EQ(Endpoint::parse("http://h").port, 80);
  EXPECT_THROW(Endpoint::parse("https://h:1/x"), InvalidArgument);
  EXPECT_THROW(Endpoint::parse("localhost:80"), InvalidArgument);
}

TEST(RemoteProvider, LoopbackMatchesInProcessBitwise) {
  const SyntheticProvider model;
  ProtocolServer server(model, {});
  server.start();
  const RemoteProvider remote(fast_options(server.url()));
  const ProviderRequest req = sample_request();
  EXPECT_EQ(remote.next_token_logits(req), model.next_token_logits(req));
  EXPECT_EQ(remote.attempts(), 1u);
  const VocabInfo v = remote.vocab();
  EXPECT_EQ(v.size, 32u);
  EXPECT_EQ(v.id, model.vocab().id);
  EXPECT_EQ(server.requests_served(), 1u);
}

TEST(RemoteProvider, PngEncodingMatchesForEightBitImages) {
  const SyntheticProvider model;
  ProtocolServer server(model, {});
  server.start();
  RemoteOptions o = fast_options(server.url());
  o.encoding = ImageEncoding::kPng;
  const RemoteProvider remote(o);
  const ProviderRequest req{
      ImageContext({render_solid(model.palette(3), 4, 4), render_solid(model.palette(8), 4, 4)}),
      "image 1", {}};
  EXPECT_EQ(remote.next_token_logits(req), model.next_token_logits(req));
}

TEST(RemoteProvider, ConcurrentCallsAreSafe) {
  const SyntheticProvider model;
  ProtocolServer server(model, {});
  server.start();
  const RemoteProvider remote(fast_options(server.url()));
  const ProviderRequest req = sample_request();
  const LogitVector expect = model.next_token_logits(req);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) ok += remote.next_token_logits(req) == expect;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 40);
}

TEST(RemoteProvider, ServerErrorIsNotRetried) {
  const SyntheticProvider model;
  ProtocolServer server(model, {});
  server.start();
  const RemoteProvider remote(fast_options(server.url()));
  const ProviderRequest req{sample_request().context, "no directive here", {}};
  try {
    remote.next_token_logits(req);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), Kind::kServer);
    EXPECT_EQ(e.code(), "invalid_request");
  }
  EXPECT_EQ(remote.attempts(), 1u);
}

TEST(RemoteProvider, LengthMismatchIsProtocolError) {
  RawServer raw([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"protocol_version":1,"vocab_size":32,"vocab_id":"v","logits":[0.0,1.0]})",
                    "application/json");
  });
  const RemoteProvider remote(fast_options(raw.url()));
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kProtocol);
  EXPECT_EQ(remote.attempts(), 1u);
}

TEST(RemoteProvider, NonJsonBodyIsProtocolError) {
  RawServer raw([](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "application/json");
  });
  const RemoteProvider remote(fast_options(raw.url()));
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kProtocol);
}

TEST(RemoteProvider, ClosedPortIsTransportAfterAllRetries) {
  const int port = closed_port();
  const RemoteProvider remote(fast_options("http://127.0.0.1:" + std::to_string(port)));
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kTransport);
  EXPECT_EQ(remote.attempts(), 3u);
}

TEST(RemoteProvider, PlainHttp5xxIsRetriedAsTransport) {
  std::atomic<int> hits{0};
  RawServer raw([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
    res.set_content("busy", "text/plain");
  });
  const RemoteProvider remote(fast_options(raw.url()));
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kTransport);
  EXPECT_EQ(hits.load(), 3);
}

TEST(RemoteProvider, SlowServerTimesOut) {
  testing::StubProvider stub(LogitVector::zeros(32, "stub"));
  stub.set_delay(600ms);
  ProtocolServer server(stub, {});
  server.start();
  RemoteOptions o = fast_options(server.url());
  o.timeout = 150ms;
  o.retries = 1;
  const RemoteProvider remote(o);
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kTimeout);
  EXPECT_EQ(remote.attempts(), 2u);
}

TEST(RemoteProvider, VocabChangeIsDetected) {
  testing::StubProvider stub(LogitVector::zeros(4, "first"));
  ProtocolServer server(stub, {});
  server.start();
  const RemoteProvider remote(fast_options(server.url()));
  remote.next_token_logits(sample_request());
  stub.set_logits(LogitVector::zeros(4, "second"));
  EXPECT_EQ(kind_of([&] { remote.next_token_logits(sample_request()); }), Kind::kVocabMismatch);
}

TEST(RemoteProvider, RejectsBadOptions) {
  RemoteOptions o = fast_options("http://127.0.0.1:1");
  o.retries = -1;
  EXPECT_THROW(RemoteProvider{o}, InvalidArgument);
  o.retries = 0;
  o.timeout = 0ms;
  EXPECT_THROW(RemoteProvider{o}, InvalidArgument);
}

}  // namespace
}  // namespace focus
