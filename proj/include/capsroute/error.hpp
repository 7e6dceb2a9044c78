#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace capsroute {

enum class ErrorKind {
  kDimensionMismatch,
  kNonFinite,
  kEmpty,
  kDomain,
  kOffSimplex,
  kInvalidArgument,
  kParse,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Raised for every contract violation in the library. `capsule()` names the
/// offending output capsule when the error is tied to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::size_t> capsule = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> capsule() const noexcept { return capsule_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> capsule_;
};

}  // namespace capsroute
