#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tbqkd {

// Machine-readable failure classes. The CLI maps these onto exit codes.
enum class ErrorCategory {
  kDomain,      // argument outside an operation's precondition
  kConfig,      // invalid parameters or scenario
  kAllocation,  // channel plan cannot be built
  kSyncFailure, // no significant cross-correlation peak
  kIo,
};

std::string_view to_string(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace tbqkd
