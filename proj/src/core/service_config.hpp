#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include "core/captcha.hpp"
#include "core/render.hpp"

namespace picap {

/// Service settings. Loadable from a key=value file; '#' starts a comment.
///
/// Recognised keys: alphabet, sp_count, gp_count, segment_count,
/// min_segment_len, slight_min_sp, datagram_adjacent_slight, challenge_ttl_s,
/// bucket_capacity, bucket_refill, bucket_interval_s, image_width,
/// image_height, datagram_image_width, datagram_image_height,
/// rotation_jitter_deg, noise_density, font, min_password_length.
struct ServiceConfig {
  ChallengeConfig challenge;
  StyleConfig character_style = StyleConfig::character_default();
  StyleConfig datagram_style = StyleConfig::datagram_default();
  int bucket_capacity = 3;
  int bucket_refill = 3;
  std::chrono::seconds bucket_interval{6 * 3600};
  std::size_t min_password_length = 6;

  /// Throws invalid_config for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  /// Style sized for `count` labels: one cell per label across the image.
  StyleConfig style_for(Mode mode, int count) const;

  static ServiceConfig load(const std::filesystem::path& path);
};

}  // namespace picap
