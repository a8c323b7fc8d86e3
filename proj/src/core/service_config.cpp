#include "core/service_config.hpp"

#include <charconv>
#include <fstream>

#include "core/error.hpp"

namespace picap {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(Errc::invalid_config, "bad value for " + std::string(key) + ": " + std::string(value));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(Errc::invalid_config, "bad value for " + std::string(key) + ": " + std::string(value));
}

}  // namespace

void ServiceConfig::set(std::string_view key, std::string_view value) {
  if (key == "alphabet") {
    challenge.alphabet = std::string(value);
  } else if (key == "sp_count") {
    challenge.sp_count = parse_number<int>(key, value);
  } else if (key == "gp_count") {
    challenge.gp_count = parse_number<int>(key, value);
  } else if (key == "segment_count") {
    challenge.segment_count = parse_number<int>(key, value);
  } else if (key == "min_segment_len") {
    challenge.min_segment_len = parse_number<int>(key, value);
  } else if (key == "slight_min_sp") {
    challenge.slight_min_sp = parse_number<int>(key, value);
  } else if (key == "datagram_adjacent_slight") {
    challenge.datagram_adjacent_slight = parse_bool(key, value);
  } else if (key == "challenge_ttl_s") {
    challenge.ttl = std::chrono::seconds(parse_number<long long>(key, value));
  } else if (key == "bucket_capacity") {
    bucket_capacity = parse_number<int>(key, value);
  } else if (key == "bucket_refill") {
    bucket_refill = parse_number<int>(key, value);
  } else if (key == "bucket_interval_s") {
    bucket_interval = std::chrono::seconds(parse_number<long long>(key, value));
  } else if (key == "image_width") {
    character_style.width = parse_number<int>(key, value);
  } else if (key == "image_height") {
    character_style.height = parse_number<int>(key, value);
  } else if (key == "datagram_image_width") {
    datagram_style.width = parse_number<int>(key, value);
  } else if (key == "datagram_image_height") {
    datagram_style.height = parse_number<int>(key, value);
  } else if (key == "rotation_jitter_deg") {
    character_style.rotation_jitter_deg = parse_number<double>(key, value);
  } else if (key == "noise_density") {
    character_style.noise_density = datagram_style.noise_density = parse_number<double>(key, value);
  } else if (key == "font") {
    character_style.font = datagram_style.font = parse_number<int>(key, value);
  } else if (key == "min_password_length") {
    min_password_length = parse_number<std::size_t>(key, value);
  } else {
    throw Error(Errc::invalid_config, "unknown config key: " + std::string(key));
  }
}

void ServiceConfig::validate() const {
  challenge.validate();
  if (bucket_capacity < 1 || bucket_refill < 1 || bucket_interval.count() <= 0) {
    throw Error(Errc::invalid_config, "token bucket settings must be positive");
  }
  // Layout must hold the configured counts.
  layout_regions(challenge.sp_count + challenge.gp_count,
                 style_for(Mode::character, challenge.sp_count + challenge.gp_count));
  layout_regions(challenge.segment_count, style_for(Mode::datagram, challenge.segment_count));
}

StyleConfig ServiceConfig::style_for(Mode mode, int count) const {
  StyleConfig s = mode == Mode::character ? character_style : datagram_style;
  if (count > 0) {
    s.cell_width = s.width / count;
    s.cell_height = s.height;
  }
  return s;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read config file " + path.string());
  ServiceConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::invalid_config, path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    config.set(trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
  }
  config.validate();
  return config;
}

}  // namespace picap
