#ifndef FACEPIPE_ERROR_HPP_
#define FACEPIPE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace facepipe {

enum class Errc {
  file_not_found,
  unsupported_format,
  corrupt_header,
  degenerate_eyes,
  kernel_larger_than_image,
  empty_class,
  single_class,
  rank_deficient,
  target_too_large,
  dimension_mismatch,
  no_convergence,
  non_linear_kernel,
  zero_vector,
  unknown_subject,
  empty_scores,
  empty_dataset,
  missing_view_tags,
  insufficient_images,
  version_mismatch,
  corrupt_file,
  io_error,
  invalid_argument,
};

/// Returns a stable CamelCase name ("FileNotFound", ...) used in CLI error lines.
const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        message_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

}  // namespace facepipe

#endif  // FACEPIPE_ERROR_HPP_
