#pragma once

#include <stdexcept>
#include <string>

namespace picap {

// Numeric values are mirrored by picap_status in include/picap/picap.h.
enum class Errc : int {
  invalid_argument = 1,
  invalid_config,
  insufficient_distinct_glyphs,
  alphabet_exhausted,
  hash_too_short,
  unknown_slot,
  not_a_permutation,
  terminal_state,
  invalid_probabilities,
  no_active_challenge,
  bucket_empty,
  layout_overflow,
  out_of_bounds,
  duplicate_block_click,
  duplicate_user,
  weak_password,
  rate_limited,
  malformed_secret,
  unknown_challenge,
  expired,
  already_consumed,
  storage,
  unsupported_model,
  too_large,
  io,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  explicit Error(Errc code) : Error(code, errc_name(code)) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace picap
