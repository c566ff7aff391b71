#include "focus/wire.h"

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "focus/codec.h"
#include "focus/error.h"
#include "focus/image_io.h"
#include "focus/version.h"

namespace focus {
namespace {

using json = nlohmann::json;

[[noreturn]] void bad_request(const std::string& message) {
  throw ProviderError(ProviderError::Kind::kInvalidRequest, message);
}

[[noreturn]] void violation(const std::string& message) {
  throw ProviderError(ProviderError::Kind::kProtocol, "protocol violation: " + message);
}

void check_version(const json& j, bool request) {
  if (!j.is_object()) {
    request ? bad_request("body is not a JSON object") : violation("body is not a JSON object");
  }
  const auto it = j.find("protocol_version");
  if (it == j.end() || !it->is_number_integer() || it->get<int>() != kProtocolVersion) {
    const std::string msg = "protocol_version must be " + std::to_string(kProtocolVersion);
    request ? bad_request(msg) : violation(msg);
  }
}

}  // namespace

std::string_view to_string(ImageEncoding e) {
  return e == ImageEncoding::kPng ? "png-base64" : "raw-f32-base64";
}

ImageEncoding parse_image_encoding(std::string_view text) {
  if (text == "raw-f32-base64" || text == "raw-f32") return ImageEncoding::kRawF32;
  if (text == "png-base64" || text == "png") return ImageEncoding::kPng;
  throw InvalidArgument("unknown image encoding '" + std::string(text) + "'");
}

json encode_image(const ImageTensor& image, ImageEncoding encoding) {
  const auto bytes = encoding == ImageEncoding::kPng ? encode_png(image)
                                                     : pack_f32_le(image.data());
  return json{{"height", image.height()},
              {"width", image.width()},
              {"channels", image.channels()},
              {"encoding", to_string(encoding)},
              {"data", base64_encode(bytes)}};
}

ImageTensor decode_image(const json& j) {
  try {
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    const int c = j.at("channels").get<int>();
    const auto encoding = parse_image_encoding(j.at("encoding").get<std::string>());
    const auto bytes = base64_decode(j.at("data").get<std::string>());
    if (encoding == ImageEncoding::kRawF32) {
      return ImageTensor(h, w, c, unpack_f32_le(bytes));
    }
    ImageTensor image = decode_png(bytes);
    if (image.height() != h || image.width() != w || image.channels() != c) {
      bad_request("png dimensions disagree with the declared shape");
    }
    return image;
  } catch (const json::exception& e) {
    bad_request(std::string("image: ") + e.what());
  } catch (const InvalidArgument& e) {
    bad_request(std::string("image: ") + e.what());
  }
}

json encode_request(const ProviderRequest& request, ImageEncoding encoding) {
  json images = json::array();
  for (const auto& image : request.context.slots()) {
    images.push_back(encode_image(image, encoding));
  }
  return json{{"protocol_version", kProtocolVersion},
              {"images", std::move(images)},
              {"prompt", request.prompt},
              {"prefix_tokens", request.prefix_tokens}};
}

ProviderRequest decode_request(const json& j) {
  check_version(j, true);
  for (const char* field : {"images", "prompt", "prefix_tokens"}) {
    if (!j.contains(field)) bad_request(std::string("missing field '") + field + "'");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "protocol_version" && key != "images" && key != "prompt" &&
        key != "prefix_tokens") {
      bad_request("unknown field '" + key + "'");
    }
  }
  if (!j["images"].is_array() || j["images"].empty()) {
    bad_request("'images' must be a non-empty array");
  }
  if (!j["prompt"].is_string()) bad_request("'prompt' must be a string");
  if (!j["prefix_tokens"].is_array()) bad_request("'prefix_tokens' must be an array");

  std::vector<ImageTensor> images;
  for (const auto& image : j["images"]) images.push_back(decode_image(image));
  std::vector<TokenId> prefix;
  for (const auto& t : j["prefix_tokens"]) {
    if (!t.is_number_integer()) bad_request("'prefix_tokens' must hold integers");
    prefix.push_back(t.get<TokenId>());
  }
  ProviderRequest request{ImageContext(std::move(images)),
                          j["prompt"].get<std::string>(), std::move(prefix)};
  try {
    request.validate();
  } catch (const InvalidArgument& e) {
    bad_request(e.what());
  }
  return request;
}

json encode_logits_response(const LogitVector& logits) {
  return json{{"protocol_version", kProtocolVersion},
              {"vocab_size", logits.size()},
              {"vocab_id", logits.vocab_id()},
              {"logits", logits.values()}};
}

json encode_error_response(std::string_view code, std::string_view message) {
  return json{{"protocol_version", kProtocolVersion},
              {"error", {{"code", code}, {"message", message}}}};
}

LogitVector decode_response(const json& j) {
  check_version(j, false);
  if (const auto it = j.find("error"); it != j.end()) {
    if (!it->is_object() || !it->contains("code") || !it->contains("message") ||
        !(*it)["code"].is_string() || !(*it)["message"].is_string()) {
      violation("malformed error object");
    }
    const auto code = (*it)["code"].get<std::string>();
    throw ProviderError(ProviderError::Kind::kServer,
                        (*it)["message"].get<std::string>(), code);
  }
  for (const char* field : {"vocab_size", "vocab_id", "logits"}) {
    if (!j.contains(field)) violation(std::string("missing field '") + field + "'");
  }
  if (!j["vocab_size"].is_number_unsigned()) violation("'vocab_size' must be a non-negative integer");
  if (!j["vocab_id"].is_string()) violation("'vocab_id' must be a string");
  if (!j["logits"].is_array()) violation("'logits' must be an array");
  const auto vocab_size = j["vocab_size"].get<std::size_t>();
  const auto& raw = j["logits"];
  if (raw.size() != vocab_size) {
    violation("logits length " + std::to_string(raw.size()) +
              " != vocab_size " + std::to_string(vocab_size));
  }
  std::vector<double> values;
  values.reserve(raw.size());
  for (const auto& v : raw) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      violation("logits must be finite numbers");
    }
    values.push_back(v.get<double>());
  }
  return LogitVector(std::move(values), j["vocab_id"].get<std::string>());
}

json encode_health(const ServerInfo& info) {
  return json{{"protocol_version", kProtocolVersion},
              {"version", info.version},
              {"model_id", info.model_id},
              {"vocab_size", info.vocab_size},
              {"vocab_id", info.vocab_id}};
}

ServerInfo decode_health(const json& j) {
  check_version(j, false);
  try {
    ServerInfo info;
    info.version = j.value("version", std::string());
    info.model_id = j.value("model_id", std::string());
    info.vocab_size = j.at("vocab_size").get<std::size_t>();
    info.vocab_id = j.at("vocab_id").get<std::string>();
    return info;
  } catch (const json::exception& e) {
    violation(std::string("health: ") + e.what());
  }
}

struct ProtocolServer::Impl {
  const LogitProvider& provider;
  Options options;
  httplib::Server server;
  std::thread thread;
  std::atomic<std::uint64_t> served{0};

  Impl(const LogitProvider& p, Options o) : provider(p), options(std::move(o)) {}

  void install() {
    server.set_tcp_nodelay(true);
    server.new_task_queue = [n = options.threads] {
      return new httplib::ThreadPool(static_cast<std::size_t>(std::max(1, n)));
    };
    server.Post(options.path, [this](const httplib::Request& req, httplib::Response& res) {
      ++served;
      json body;
      int status = 200;
      try {
        const auto request = decode_request(json::parse(req.body));
        body = encode_logits_response(provider.next_token_logits(request));
      } catch (const json::parse_error& e) {
        status = 400;
        body = encode_error_response("malformed_json", e.what());
      } catch (const ProviderError& e) {
        status = e.kind() == ProviderError::Kind::kInvalidRequest ? 400 : 502;
        body = encode_error_response(to_string(e.kind()), e.what());
      } catch (const InvalidArgument& e) {
        status = 400;
        body = encode_error_response("invalid_request", e.what());
      } catch (const std::exception& e) {
        status = 500;
        body = encode_error_response("internal", e.what());
      }
      res.status = status;
      res.set_content(body.dump(), "application/json");
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      const VocabInfo vocab = provider.vocab();
      const ServerInfo info{kVersion, options.model_id, vocab.size, vocab.id};
      res.set_content(encode_health(info).dump(), "application/json");
    });
  }
};

ProtocolServer::ProtocolServer(const LogitProvider& provider, Options options)
    : impl_(std::make_unique<Impl>(provider, std::move(options))) {
  impl_->install();
}

ProtocolServer::~ProtocolServer() { stop(); }

int ProtocolServer::start() {
  const auto& o = impl_->options;
  port_ = o.port == 0 ? impl_->server.bind_to_any_port(o.host)
                      : (impl_->server.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port_ < 0) {
    throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void ProtocolServer::run() {
  if (!impl_->thread.joinable()) {
    start();
  }
  impl_->thread.join();
}

void ProtocolServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable() && impl_->thread.get_id() != std::this_thread::get_id()) {
    impl_->thread.join();
  }
}

std::string ProtocolServer::url() const {
  return "http://" + impl_->options.host + ":" + std::to_string(port_) + impl_->options.path;
}

std::uint64_t ProtocolServer::requests_served() const noexcept {
  return impl_->served.load();
}

}  // namespace focus
