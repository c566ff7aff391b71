#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "focus/image.h"
#include "focus/logits.h"
#include "focus/types.h"

namespace focus {

// Conditioning for one next-token query: images, prompt, generated prefix.
struct ProviderRequest {
  ImageContext context;
  std::string prompt;
  std::vector<TokenId> prefix_tokens;

  // Throws InvalidArgument on an empty prompt or mixed channel counts.
  void validate() const;
};

struct VocabInfo {
  std::size_t size = 0;
  std::string id;
  // Token strings when the provider knows them (synthetic); may be empty.
  std::vector<std::string> names;
  std::optional<TokenId> stop_token;

  // Token id for `name`, if the vocabulary carries names.
  std::optional<TokenId> find(const std::string& name) const;
};

// The model seen as a next-token logit function. Implementations must be
// safe to call concurrently from several threads.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual LogitVector next_token_logits(const ProviderRequest& request) const = 0;
  virtual VocabInfo vocab() const = 0;
};

}  // namespace focus
