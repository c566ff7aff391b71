#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "focus/image.h"
#include "focus/logits.h"
#include "focus/provider.h"

namespace focus {

inline constexpr int kProtocolVersion = 1;

// "raw-f32-base64" is bit-exact; "png-base64" quantises to 8 bits.
enum class ImageEncoding { kRawF32, kPng };

std::string_view to_string(ImageEncoding e);
ImageEncoding parse_image_encoding(std::string_view text);

// One image object of the request "images" array.
nlohmann::json encode_image(const ImageTensor& image, ImageEncoding encoding);
// Throws ProviderError(kInvalidRequest) on bad shape, encoding or data.
ImageTensor decode_image(const nlohmann::json& j);

// {"protocol_version", "images", "prompt", "prefix_tokens"}. The mask flags
// stay client-side; the server only sees pixels in slot order.
nlohmann::json encode_request(const ProviderRequest& request,
                              ImageEncoding encoding = ImageEncoding::kRawF32);
// Throws ProviderError(kInvalidRequest) naming the offending field.
ProviderRequest decode_request(const nlohmann::json& j);

nlohmann::json encode_logits_response(const LogitVector& logits);
nlohmann::json encode_error_response(std::string_view code,
                                     std::string_view message);

// Throws ProviderError(kServer) carrying the server's code and message
// verbatim for an error object, and ProviderError(kProtocol) for anything
// that is neither a logits nor an error response (missing fields, version
// mismatch, logits length != vocab_size, non-finite values).
LogitVector decode_response(const nlohmann::json& j);

struct ServerInfo {
  std::string version;
  std::string model_id;
  std::size_t vocab_size = 0;
  std::string vocab_id;
};

nlohmann::json encode_health(const ServerInfo& info);
ServerInfo decode_health(const nlohmann::json& j);

// HTTP front end for any LogitProvider: POST <path> takes a request object,
// GET /health reports ServerInfo. Provider exceptions become error objects;
// the server keeps serving after a bad request.
class ProtocolServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    std::string path = "/logits";
    std::string model_id = "focus-server";
    int threads = 4;
  };

  ProtocolServer(const LogitProvider& provider, Options options);
  ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  int start();
  // Blocks serving on the calling thread until stop() is called.
  void run();
  void stop();

  int port() const noexcept { return port_; }
  std::string url() const;
  std::uint64_t requests_served() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace focus
