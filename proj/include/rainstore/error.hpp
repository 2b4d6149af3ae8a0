#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rainstore {

enum class ErrorCode {
  invalid_argument,
  io,
  format,
  bad_magic,
  bad_version,
  size_mismatch,
  unsupported_dtype,
  unknown_variable,
  out_of_range,
  inconsistent_time,
  insufficient_data,
  checksum_mismatch,
  partition_violation,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rainstore
