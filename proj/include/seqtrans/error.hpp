#pragma once

#include <stdexcept>
#include <string>

namespace seqtrans {

// Every failure surfaced to callers carries a short category ("parse", "config",
// "io", "model", ...) so the CLI can print a machine-parsable prefix.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

}  // namespace seqtrans
