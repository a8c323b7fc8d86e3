#pragma once

// Challenge generation and classification for both challenge kinds.
//
// Character challenges mix k glyphs taken from the secret the user just
// submitted (the submission part, SP) with m distractors that provably do not
// occur in it (the generation part, GP). Datagram challenges cut the submitted
// hash into contiguous segments and present them in a shuffled order. All
// functions are pure given the Rng passed in.

#include <chrono>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core/random.hpp"

namespace picap {

using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

enum class Mode { character, datagram };
enum class Outcome { full, slight, fail };

const char* to_string(Mode mode) noexcept;
const char* to_string(Outcome outcome) noexcept;
Mode parse_mode(std::string_view text);

using GlyphSet = std::set<char>;

/// Glyphs that are never drawn as distractors.
inline constexpr std::string_view kConfusableGlyphs = "0O1lI";

/// Upper/lowercase letters and digits minus the confusables.
std::string default_alphabet();

/// Length of the client-side hash that datagram challenges are built from.
inline constexpr std::size_t kClientHashLength = 16;

struct ChallengeConfig {
  std::string alphabet = default_alphabet();
  int sp_count = 4;
  int gp_count = 4;
  int segment_count = 6;
  int min_segment_len = 2;
  // Slight outcomes are only produced when sp_count reaches this value.
  int slight_min_sp = 3;
  // Treat a single adjacent transposition of datagram blocks as Slight.
  bool datagram_adjacent_slight = false;
  std::chrono::seconds ttl{120};

  int slight_threshold() const noexcept { return sp_count - 1; }
  bool slight_enabled() const noexcept { return sp_count >= slight_min_sp; }

  /// Throws Error(invalid_config) when an invariant does not hold.
  void validate(std::size_t hash_length = kClientHashLength) const;
};

struct DisplaySlot {
  int slot_id;
  char glyph;

  bool operator==(const DisplaySlot&) const = default;
};

struct CharacterChallenge {
  std::string challenge_id;
  std::string user_id;
  GlyphSet sp;
  GlyphSet gp;
  std::vector<DisplaySlot> display;
  int slight_threshold = 0;
  bool slight_enabled = false;
  TimePoint created_at;
  TimePoint expires_at;

  bool operator==(const CharacterChallenge&) const = default;
};

struct DatagramChallenge {
  std::string challenge_id;
  std::string user_id;
  std::vector<std::string> segments;      // original order
  std::vector<int> display_permutation;   // display position -> segment index
  bool adjacent_slight = false;
  TimePoint created_at;
  TimePoint expires_at;

  bool operator==(const DatagramChallenge&) const = default;
};

using AnyChallenge = std::variant<CharacterChallenge, DatagramChallenge>;

/// Distinct printable-ASCII glyphs of `secret`, sorted.
GlyphSet distinct_glyphs(std::string_view secret);

/// k distinct glyphs of `password`, uniform over the k-subsets of its
/// distinct glyphs. Throws insufficient_distinct_glyphs.
GlyphSet select_sp(std::string_view password, int k, Rng& rng);

/// m distinct glyphs from `alphabet` that do not occur in `password`.
/// Throws alphabet_exhausted.
GlyphSet generate_gp(std::string_view alphabet, std::string_view password, int m, Rng& rng);

/// Password glyphs usable as SP: printable and inside the configured alphabet.
/// Restricting SP to the alphabet means a displayed glyph never reveals its
/// class by lying outside the distractor pool.
std::string sp_candidates(std::string_view password, const ChallengeConfig& config);

/// Config adjusted to a password with few usable glyphs: sp_count drops to the
/// distinct-glyph count (floor 2). Returns false when even that is impossible,
/// in which case the caller issues a datagram challenge instead.
bool adapt_to_password(std::string_view password, ChallengeConfig& config);

CharacterChallenge build_character_challenge(std::string_view user_id, std::string_view password,
                                             const ChallengeConfig& config, Rng& rng,
                                             TimePoint now = {});

/// Throws unknown_slot for ids outside the display.
Outcome classify_character_response(const CharacterChallenge& challenge,
                                    const std::set<int>& selection);

/// Contiguous cover of `hash` by `segment_count` pieces of at least
/// `min_segment_len` characters; cut points are uniform over all such
/// compositions.
std::vector<std::string> split_hash(std::string_view hash, int segment_count, int min_segment_len,
                                    Rng& rng);

/// Orderings of `blocks` (each used once) whose concatenation is `text`,
/// counted up to `limit`.
std::size_t count_spellings(std::string_view text, const std::vector<std::string>& blocks,
                            std::size_t limit = SIZE_MAX);

DatagramChallenge build_datagram_challenge(std::string_view user_id, std::string_view hash,
                                           const ChallengeConfig& config, Rng& rng,
                                           TimePoint now = {});

/// Block ids are display positions. Throws not_a_permutation.
Outcome classify_datagram_response(const DatagramChallenge& challenge,
                                   const std::vector<int>& ordered_block_ids);

/// Concatenation of the segment texts in the order given.
std::string recover_hash(const DatagramChallenge& challenge,
                         const std::vector<int>& ordered_block_ids);

/// Block ids in the order that reconstructs the original segment order.
std::vector<int> solution_order(const DatagramChallenge& challenge);

}  // namespace picap
