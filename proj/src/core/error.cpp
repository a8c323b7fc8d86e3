#include "core/error.hpp"

namespace picap {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::invalid_config: return "invalid_config";
    case Errc::insufficient_distinct_glyphs: return "insufficient_distinct_glyphs";
    case Errc::alphabet_exhausted: return "alphabet_exhausted";
    case Errc::hash_too_short: return "hash_too_short";
    case Errc::unknown_slot: return "unknown_slot";
    case Errc::not_a_permutation: return "not_a_permutation";
    case Errc::terminal_state: return "terminal_state";
    case Errc::invalid_probabilities: return "invalid_probabilities";
    case Errc::no_active_challenge: return "no_active_challenge";
    case Errc::bucket_empty: return "bucket_empty";
    case Errc::layout_overflow: return "layout_overflow";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::duplicate_block_click: return "duplicate_block_click";
    case Errc::duplicate_user: return "duplicate_user";
    case Errc::weak_password: return "weak_password";
    case Errc::rate_limited: return "rate_limited";
    case Errc::malformed_secret: return "malformed_secret";
    case Errc::unknown_challenge: return "unknown_challenge";
    case Errc::expired: return "expired";
    case Errc::already_consumed: return "already_consumed";
    case Errc::storage: return "storage";
    case Errc::unsupported_model: return "unsupported_model";
    case Errc::too_large: return "too_large";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace picap
