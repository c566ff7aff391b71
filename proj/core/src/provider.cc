#include "focus/provider.h"

#include "focus/error.h"

namespace focus {

void ProviderRequest::validate() const {
  if (prompt.empty()) throw InvalidArgument("ProviderRequest: prompt is empty");
  const int channels = context.slot(0).channels();
  for (const auto& image : context.slots()) {
    if (image.channels() != channels) {
      throw InvalidArgument("ProviderRequest: images differ in channel count");
    }
  }
}

std::optional<TokenId> VocabInfo::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

}  // namespace focus
