#include "core/captcha.hpp"

#include <algorithm>
#include <numeric>

#include "core/error.hpp"

namespace picap {

namespace {

constexpr int kMaxSplitDraws = 64;

bool printable(char c) { return c > 0x20 && c < 0x7f; }

// k distinct elements of `pool`, uniform over k-subsets (partial Fisher-Yates).
GlyphSet choose(std::vector<char> pool, int k, Rng& rng) {
  GlyphSet out;
  for (int i = 0; i < k; ++i) {
    const auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.insert(pool[i]);
  }
  return out;
}

void check_permutation(const std::vector<int>& ids, std::size_t n) {
  if (ids.size() != n) throw Error(Errc::not_a_permutation, "block count mismatch");
  std::vector<bool> seen(n, false);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= n || seen[id]) {
      throw Error(Errc::not_a_permutation, "duplicate or unknown block id");
    }
    seen[id] = true;
  }
}

}  // namespace

std::size_t count_spellings(std::string_view text, const std::vector<std::string>& blocks, std::size_t limit) {
  std::vector<bool> used(blocks.size(), false);
  std::size_t found = 0;
  auto search = [&](auto&& self, std::string_view rest, std::size_t placed) -> void {
    if (found >= limit) return;
    if (placed == blocks.size()) {
      found += rest.empty();
      return;
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (used[i] || !rest.starts_with(blocks[i])) continue;
      used[i] = true;
      self(self, rest.substr(blocks[i].size()), placed + 1);
      used[i] = false;
    }
  };
  search(search, text, 0);
  return found;
}

const char* to_string(Mode mode) noexcept {
  return mode == Mode::character ? "character" : "datagram";
}

const char* to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::full: return "full";
    case Outcome::slight: return "slight";
    case Outcome::fail: return "fail";
  }
  return "fail";
}

Mode parse_mode(std::string_view text) {
  if (text == "character") return Mode::character;
  if (text == "datagram") return Mode::datagram;
  throw Error(Errc::invalid_argument, "unknown mode: " + std::string(text));
}

std::string default_alphabet() {
  std::string out;
  for (char c = '0'; c <= '9'; ++c) out.push_back(c);
  for (char c = 'A'; c <= 'Z'; ++c) out.push_back(c);
  for (char c = 'a'; c <= 'z'; ++c) out.push_back(c);
  std::erase_if(out, [](char c) { return kConfusableGlyphs.find(c) != std::string_view::npos; });
  return out;
}

void ChallengeConfig::validate(std::size_t hash_length) const {
  if (sp_count < 1 || gp_count < 1) throw Error(Errc::invalid_config, "sp_count and gp_count must be >= 1");
  if (segment_count < 1 || min_segment_len < 1) {
    throw Error(Errc::invalid_config, "segment_count and min_segment_len must be >= 1");
  }
  if (slight_min_sp < 1) throw Error(Errc::invalid_config, "slight_min_sp must be >= 1");
  if (static_cast<std::size_t>(segment_count) * min_segment_len > hash_length) {
    throw Error(Errc::invalid_config, "segments do not fit the hash length");
  }
  GlyphSet seen;
  for (char c : alphabet) {
    if (!printable(c)) throw Error(Errc::invalid_config, "alphabet must be printable ASCII");
    if (kConfusableGlyphs.find(c) != std::string_view::npos) {
      throw Error(Errc::invalid_config, std::string("alphabet contains confusable glyph ") + c);
    }
    if (!seen.insert(c).second) throw Error(Errc::invalid_config, "alphabet has duplicate glyphs");
  }
  if (ttl.count() <= 0) throw Error(Errc::invalid_config, "ttl must be positive");
}

GlyphSet distinct_glyphs(std::string_view secret) {
  GlyphSet out;
  for (char c : secret) {
    if (printable(c)) out.insert(c);
  }
  return out;
}

GlyphSet select_sp(std::string_view password, int k, Rng& rng) {
  const GlyphSet distinct = distinct_glyphs(password);
  if (k < 1 || distinct.size() < static_cast<std::size_t>(k)) {
    throw Error(Errc::insufficient_distinct_glyphs,
                "password has " + std::to_string(distinct.size()) + " distinct glyphs, need " +
                    std::to_string(k));
  }
  return choose({distinct.begin(), distinct.end()}, k, rng);
}

GlyphSet generate_gp(std::string_view alphabet, std::string_view password, int m, Rng& rng) {
  const GlyphSet used(password.begin(), password.end());
  GlyphSet eligible_set;
  for (char c : alphabet) {
    if (!used.contains(c)) eligible_set.insert(c);
  }
  if (m < 1 || eligible_set.size() < static_cast<std::size_t>(m)) {
    throw Error(Errc::alphabet_exhausted,
                "only " + std::to_string(eligible_set.size()) + " distractor glyphs available");
  }
  return choose({eligible_set.begin(), eligible_set.end()}, m, rng);
}

std::string sp_candidates(std::string_view password, const ChallengeConfig& config) {
  std::string out;
  for (char c : password) {
    if (printable(c) && config.alphabet.find(c) != std::string::npos) out.push_back(c);
  }
  return out;
}

bool adapt_to_password(std::string_view password, ChallengeConfig& config) {
  const auto distinct = static_cast<int>(distinct_glyphs(sp_candidates(password, config)).size());
  if (distinct >= config.sp_count) return true;
  if (distinct < 2) return false;
  config.sp_count = distinct;
  return true;
}

CharacterChallenge build_character_challenge(std::string_view user_id, std::string_view password,
                                             const ChallengeConfig& config, Rng& rng,
                                             TimePoint now) {
  CharacterChallenge ch;
  ch.challenge_id = rng.hex_token(16);
  ch.user_id = std::string(user_id);
  ch.sp = select_sp(sp_candidates(password, config), config.sp_count, rng);
  ch.gp = generate_gp(config.alphabet, password, config.gp_count, rng);
  ch.slight_threshold = config.slight_threshold();
  ch.slight_enabled = config.slight_enabled();

  std::vector<char> glyphs(ch.sp.begin(), ch.sp.end());
  glyphs.insert(glyphs.end(), ch.gp.begin(), ch.gp.end());
  rng.shuffle(std::span(glyphs));
  ch.display.reserve(glyphs.size());
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    ch.display.push_back({static_cast<int>(i), glyphs[i]});
  }
  ch.created_at = now;
  ch.expires_at = now + config.ttl;
  return ch;
}

Outcome classify_character_response(const CharacterChallenge& challenge,
                                    const std::set<int>& selection) {
  std::size_t sp_hits = 0;
  std::size_t gp_hits = 0;
  for (int slot : selection) {
    if (slot < 0 || static_cast<std::size_t>(slot) >= challenge.display.size()) {
      throw Error(Errc::unknown_slot, "slot " + std::to_string(slot) + " is not in the challenge");
    }
    const char glyph = challenge.display[slot].glyph;
    if (challenge.sp.contains(glyph)) {
      ++sp_hits;
    } else {
      ++gp_hits;
    }
  }
  if (gp_hits == 0 && sp_hits == challenge.sp.size()) return Outcome::full;
  if (challenge.slight_enabled && gp_hits == 0 &&
      sp_hits == static_cast<std::size_t>(challenge.slight_threshold)) {
    return Outcome::slight;
  }
  return Outcome::fail;
}

std::vector<std::string> split_hash(std::string_view hash, int segment_count, int min_segment_len,
                                    Rng& rng) {
  if (segment_count < 1 || min_segment_len < 1) {
    throw Error(Errc::invalid_config, "segment_count and min_segment_len must be >= 1");
  }
  const auto floor_len = static_cast<std::size_t>(segment_count) * min_segment_len;
  if (hash.size() < floor_len) {
    throw Error(Errc::hash_too_short, "hash of length " + std::to_string(hash.size()) +
                                          " cannot hold " + std::to_string(segment_count) +
                                          " segments");
  }
  // Stars and bars: the surplus characters are spread over the segments by
  // choosing segment_count-1 bar positions among surplus+segment_count-1 slots.
  const std::size_t surplus = hash.size() - floor_len;
  const std::size_t slots = surplus + segment_count - 1;
  std::vector<std::size_t> positions(slots);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  for (int i = 0; i < segment_count - 1; ++i) {
    std::swap(positions[i], positions[i + rng.below(slots - i)]);
  }
  std::vector<std::size_t> bars(positions.begin(), positions.begin() + (segment_count - 1));
  std::sort(bars.begin(), bars.end());

  std::vector<std::string> segments;
  segments.reserve(segment_count);
  std::size_t offset = 0;
  std::size_t previous = static_cast<std::size_t>(-1);
  for (int i = 0; i < segment_count; ++i) {
    const std::size_t bar = i + 1 < segment_count ? bars[i] : slots;
    const std::size_t extra = bar - previous - 1;
    const std::size_t len = min_segment_len + extra;
    segments.emplace_back(hash.substr(offset, len));
    offset += len;
    previous = bar;
  }
  return segments;
}

DatagramChallenge build_datagram_challenge(std::string_view user_id, std::string_view hash,
                                           const ChallengeConfig& config, Rng& rng,
                                           TimePoint now) {
  if (config.segment_count < 2) {
    throw Error(Errc::invalid_config, "a shuffled display needs at least two segments");
  }
  DatagramChallenge ch;
  ch.challenge_id = rng.hex_token(16);
  ch.user_id = std::string(user_id);
  // A split whose blocks spell the hash in more than one order is ambiguous
  // to the user; redraw the cuts.
  for (int attempt = 0; attempt < kMaxSplitDraws; ++attempt) {
    ch.segments = split_hash(hash, config.segment_count, config.min_segment_len, rng);
    if (count_spellings(hash, ch.segments, 2) == 1) break;
  }
  ch.display_permutation.resize(ch.segments.size());
  std::iota(ch.display_permutation.begin(), ch.display_permutation.end(), 0);
  const auto identity = ch.display_permutation;
  do {
    rng.shuffle(std::span(ch.display_permutation));
  } while (ch.display_permutation == identity);
  ch.adjacent_slight = config.datagram_adjacent_slight;
  ch.created_at = now;
  ch.expires_at = now + config.ttl;
  return ch;
}

Outcome classify_datagram_response(const DatagramChallenge& challenge,
                                   const std::vector<int>& ordered_block_ids) {
  const auto n = challenge.segments.size();
  check_permutation(ordered_block_ids, n);
  std::vector<std::size_t> wrong;
  for (std::size_t t = 0; t < n; ++t) {
    if (challenge.display_permutation[ordered_block_ids[t]] != static_cast<int>(t)) wrong.push_back(t);
  }
  if (wrong.empty()) return Outcome::full;
  if (challenge.adjacent_slight && wrong.size() == 2 && wrong[1] == wrong[0] + 1) {
    return Outcome::slight;
  }
  return Outcome::fail;
}

std::string recover_hash(const DatagramChallenge& challenge,
                         const std::vector<int>& ordered_block_ids) {
  check_permutation(ordered_block_ids, challenge.segments.size());
  std::string out;
  for (int id : ordered_block_ids) out += challenge.segments[challenge.display_permutation[id]];
  return out;
}

std::vector<int> solution_order(const DatagramChallenge& challenge) {
  std::vector<int> order(challenge.display_permutation.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    order[challenge.display_permutation[pos]] = static_cast<int>(pos);
  }
  return order;
}

}  // namespace picap
