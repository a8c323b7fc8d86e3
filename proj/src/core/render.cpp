#include "core/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string_view>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "core/error.hpp"

namespace picap {

namespace {

constexpr int kFaces[] = {cv::FONT_HERSHEY_SIMPLEX, cv::FONT_HERSHEY_DUPLEX,
                          cv::FONT_HERSHEY_COMPLEX, cv::FONT_HERSHEY_TRIPLEX};

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

cv::Scalar ink(Rng& rng) {
  return {static_cast<double>(rng.below(96)), static_cast<double>(rng.below(96)),
          static_cast<double>(rng.below(96))};
}

cv::Mat background(const StyleConfig& style, Rng& rng) {
  const double shade = 236 + static_cast<double>(rng.below(16));
  return cv::Mat(style.height, style.width, CV_8UC3, cv::Scalar(shade, shade, shade - 6));
}

// Every label goes through this function regardless of what it is, so the
// distortion a glyph receives depends only on the draw order and the seed.
void draw_label(cv::Mat& image, const Rect& region, const std::string& text,
                const StyleConfig& style, Rng& rng) {
  const int face = hershey_face(style.font);
  int baseline = 0;
  const cv::Size natural = cv::getTextSize(text, face, 1.0, style.stroke, &baseline);
  const double text_w = natural.width;
  const double text_h = natural.height + baseline;

  const double max_theta = style.rotation_jitter_deg * std::numbers::pi / 180.0;
  const double bound_w = text_w * std::cos(max_theta) + text_h * std::sin(max_theta);
  const double bound_h = text_w * std::sin(max_theta) + text_h * std::cos(max_theta);
  const double scale = std::min({0.8 * region.width / bound_w, 0.8 * region.height / bound_h, 2.0});

  const double angle = (2.0 * rng.uniform() - 1.0) * style.rotation_jitter_deg;
  const double slack_x = std::max(0.0, (region.width - scale * bound_w) / 2.0);
  const double slack_y = std::max(0.0, (region.height - scale * bound_h) / 2.0);
  const double jitter_share = style.rotation_jitter_deg > 0 ? 0.5 : 0.0;
  const double dx = (2.0 * rng.uniform() - 1.0) * slack_x * jitter_share;
  const double dy = (2.0 * rng.uniform() - 1.0) * slack_y * jitter_share;
  const cv::Scalar color = ink(rng);

  cv::Mat mask = cv::Mat::zeros(region.height, region.width, CV_8UC1);
  int scaled_baseline = 0;
  const cv::Size scaled = cv::getTextSize(text, face, scale, style.stroke, &scaled_baseline);
  const cv::Point origin((region.width - scaled.width) / 2,
                         (region.height + scaled.height - scaled_baseline) / 2);
  cv::putText(mask, text, origin, face, scale, cv::Scalar(255), style.stroke, cv::LINE_AA);

  const cv::Point2f centre(region.width / 2.0f, region.height / 2.0f);
  cv::Mat transform = cv::getRotationMatrix2D(centre, angle, 1.0);
  transform.at<double>(0, 2) += dx;
  transform.at<double>(1, 2) += dy;
  cv::Mat warped;
  cv::warpAffine(mask, warped, transform, mask.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                 cv::Scalar(0));

  cv::Mat roi = image(cv::Rect(region.x, region.y, region.width, region.height));
  for (int y = 0; y < roi.rows; ++y) {
    const auto* alpha = warped.ptr<std::uint8_t>(y);
    auto* px = roi.ptr<cv::Vec3b>(y);
    for (int x = 0; x < roi.cols; ++x) {
      if (alpha[x] == 0) continue;
      const double a = alpha[x] / 255.0;
      for (int c = 0; c < 3; ++c) {
        px[x][c] = cv::saturate_cast<std::uint8_t>((1.0 - a) * px[x][c] + a * color[c]);
      }
    }
  }
}

void add_noise(cv::Mat& image, const StyleConfig& style, Rng& rng) {
  const auto dots = static_cast<std::uint64_t>(style.noise_density * image.rows * image.cols);
  for (std::uint64_t i = 0; i < dots; ++i) {
    const auto x = static_cast<int>(rng.below(image.cols));
    const auto y = static_cast<int>(rng.below(image.rows));
    const auto v = static_cast<std::uint8_t>(80 + rng.below(120));
    image.at<cv::Vec3b>(y, x) = cv::Vec3b(v, v, v);
  }
  const auto lines = static_cast<int>(std::lround(style.noise_density * 50));
  for (int i = 0; i < lines; ++i) {
    const cv::Point a(static_cast<int>(rng.below(image.cols)), static_cast<int>(rng.below(image.rows)));
    const cv::Point b(static_cast<int>(rng.below(image.cols)), static_cast<int>(rng.below(image.rows)));
    const auto v = 120 + static_cast<double>(rng.below(80));
    cv::line(image, a, b, cv::Scalar(v, v, v), 1, cv::LINE_AA);
  }
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", image, out)) throw Error(Errc::io, "PNG encoding failed");
  return out;
}

}  // namespace

int hershey_face(int font_index) noexcept {
  const int n = static_cast<int>(std::size(kFaces));
  return kFaces[((font_index % n) + n) % n];
}

const RegionEntry* RegionMap::find(int target_id) const noexcept {
  for (const auto& e : entries) {
    if (e.target_id == target_id) return &e;
  }
  return nullptr;
}

StyleConfig StyleConfig::datagram_default() {
  StyleConfig s;
  s.width = 480;
  s.height = 120;
  s.cell_width = 80;
  s.cell_height = 120;
  s.margin = 4;
  s.rotation_jitter_deg = 5.0;
  return s;
}

void StyleConfig::validate() const {
  if (width < 1 || height < 1 || cell_width < 1 || cell_height < 1) {
    throw Error(Errc::invalid_config, "image and cell sizes must be positive");
  }
  if (margin < 0 || 2 * margin >= cell_width || 2 * margin >= cell_height) {
    throw Error(Errc::invalid_config, "margin leaves no room for a region");
  }
  if (stroke < 1) throw Error(Errc::invalid_config, "stroke must be >= 1");
  if (rotation_jitter_deg < 0 || rotation_jitter_deg > 45) {
    throw Error(Errc::invalid_config, "rotation jitter must be within [0, 45] degrees");
  }
  if (noise_density < 0 || noise_density > 1) {
    throw Error(Errc::invalid_config, "noise density must be within [0, 1]");
  }
}

RegionMap layout_regions(int count, const StyleConfig& style) {
  style.validate();
  if (count < 1 || static_cast<long long>(count) * style.cell_width > style.width ||
      style.cell_height > style.height) {
    throw Error(Errc::layout_overflow, std::to_string(count) + " cells do not fit a " +
                                           std::to_string(style.width) + "x" +
                                           std::to_string(style.height) + " image");
  }
  RegionMap map;
  map.width = style.width;
  map.height = style.height;
  const int x0 = (style.width - count * style.cell_width) / 2;
  const int y0 = (style.height - style.cell_height) / 2;
  for (int i = 0; i < count; ++i) {
    map.entries.push_back({i, Rect{x0 + i * style.cell_width + style.margin, y0 + style.margin,
                                   style.cell_width - 2 * style.margin,
                                   style.cell_height - 2 * style.margin}});
  }
  return map;
}

RenderedChallenge render_character_challenge(const CharacterChallenge& challenge,
                                             const StyleConfig& style) {
  RenderedChallenge out;
  out.region_map = layout_regions(static_cast<int>(challenge.display.size()), style);
  Rng rng(mix_seed(style.seed, fnv1a(challenge.challenge_id)));
  cv::Mat image = background(style, rng);
  for (const auto& slot : challenge.display) {
    draw_label(image, out.region_map.entries[slot.slot_id].rect, std::string(1, slot.glyph), style, rng);
  }
  add_noise(image, style, rng);
  out.png = encode_png(image);
  return out;
}

RenderedChallenge render_datagram_challenge(const DatagramChallenge& challenge,
                                            const StyleConfig& style) {
  RenderedChallenge out;
  const auto n = static_cast<int>(challenge.display_permutation.size());
  out.region_map = layout_regions(n, style);
  Rng rng(mix_seed(style.seed, fnv1a(challenge.challenge_id)));
  cv::Mat image = background(style, rng);
  for (int pos = 0; pos < n; ++pos) {
    const Rect& r = out.region_map.entries[pos].rect;
    cv::rectangle(image, cv::Rect(r.x, r.y, r.width, r.height), cv::Scalar(150, 150, 150), 1);
    draw_label(image, r, challenge.segments[challenge.display_permutation[pos]], style, rng);
  }
  add_noise(image, style, rng);
  out.png = encode_png(image);
  return out;
}

std::optional<int> resolve_click(const RegionMap& map, Point pt) {
  if (pt.x < 0 || pt.y < 0 || pt.x >= map.width || pt.y >= map.height) {
    throw Error(Errc::out_of_bounds, "click outside the image");
  }
  for (const auto& e : map.entries) {
    if (e.rect.contains(pt)) return e.target_id;
  }
  return std::nullopt;
}

ChallengeView view_of(const AnyChallenge& challenge, const RegionMap& map) {
  ChallengeView view;
  if (const auto* ch = std::get_if<CharacterChallenge>(&challenge)) {
    view.mode = Mode::character;
    for (const auto& slot : ch->display) view.labels.emplace_back(1, slot.glyph);
  } else {
    const auto& dg = std::get<DatagramChallenge>(challenge);
    view.mode = Mode::datagram;
    for (int idx : dg.display_permutation) view.labels.push_back(dg.segments[idx]);
  }
  for (std::size_t i = 0; i < view.labels.size(); ++i) {
    const RegionEntry* e = map.find(static_cast<int>(i));
    if (e == nullptr) throw Error(Errc::invalid_argument, "region map does not cover the challenge");
    view.centers.push_back(e->rect.center());
  }
  return view;
}

SelectionResponse resolve_selection(const RegionMap& map, std::span<const Point> points, Mode mode) {
  SelectionResponse out;
  out.mode = mode;
  for (const Point& pt : points) {
    const auto target = resolve_click(map, pt);
    if (!target) continue;
    if (mode == Mode::character) {
      out.slots.insert(*target);
    } else {
      if (std::find(out.blocks.begin(), out.blocks.end(), *target) != out.blocks.end()) {
        throw Error(Errc::duplicate_block_click, "block " + std::to_string(*target) + " clicked twice");
      }
      out.blocks.push_back(*target);
    }
  }
  return out;
}

}  // namespace picap
