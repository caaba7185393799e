#pragma once

#include <string>

namespace kgrag {

// A text-in/text-out language model. Implementations: the HTTP
// chat-completion client in remote.hpp, and test doubles.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  // Throws TransportError on failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

}  // namespace kgrag
