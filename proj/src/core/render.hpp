#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "core/captcha.hpp"

namespace picap {

struct Point {
  int x = 0;
  int y = 0;
};

/// Half-open pixel rectangle [x, x + width) x [y, y + height).
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(Point pt) const noexcept {
    return pt.x >= x && pt.x < x + width && pt.y >= y && pt.y < y + height;
  }
  Point center() const noexcept { return {x + width / 2, y + height / 2}; }
  bool overlaps(const Rect& o) const noexcept {
    return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
  }
};

struct RegionEntry {
  int target_id;
  Rect rect;
};

/// Server-side map from image regions to challenge targets (slot ids for
/// character challenges, block ids for datagram challenges). Never sent to
/// the client.
struct RegionMap {
  std::vector<RegionEntry> entries;
  int width = 0;
  int height = 0;

  const RegionEntry* find(int target_id) const noexcept;
};

struct StyleConfig {
  int width = 400;
  int height = 100;
  int cell_width = 50;
  int cell_height = 100;
  int margin = 3;               // inset of a region inside its cell; the gutter is 2*margin
  int font = 0;                 // index into the Hershey faces
  int stroke = 2;
  double rotation_jitter_deg = 15.0;
  double noise_density = 0.02;  // fraction of pixels receiving a noise dot
  std::uint64_t seed = 0;

  static StyleConfig character_default() { return {}; }
  static StyleConfig datagram_default();

  void validate() const;
};

struct RenderedChallenge {
  std::vector<std::uint8_t> png;
  RegionMap region_map;
};

/// Row of `count` equally sized cells centred in the image. Throws
/// layout_overflow when they do not fit.
RegionMap layout_regions(int count, const StyleConfig& style);

RenderedChallenge render_character_challenge(const CharacterChallenge& challenge,
                                             const StyleConfig& style);
RenderedChallenge render_datagram_challenge(const DatagramChallenge& challenge,
                                            const StyleConfig& style);

/// Target whose rectangle contains the point, or nullopt for a gutter click.
/// Throws out_of_bounds for points outside the image.
std::optional<int> resolve_click(const RegionMap& map, Point pt);

struct SelectionResponse {
  Mode mode = Mode::character;
  std::set<int> slots;        // character mode
  std::vector<int> blocks;    // datagram mode, in click order
};

/// Aggregates raw clicks: misses are dropped; in datagram mode a second click
/// on the same block throws duplicate_block_click.
SelectionResponse resolve_selection(const RegionMap& map, std::span<const Point> points, Mode mode);

/// What a person looking at the rendered image can see: the labels in
/// display order and where each one sits. Carries no SP/GP membership and no
/// secret.
struct ChallengeView {
  Mode mode = Mode::character;
  std::vector<std::string> labels;
  std::vector<Point> centers;
};

ChallengeView view_of(const AnyChallenge& challenge, const RegionMap& map);

/// Hershey face used for a StyleConfig::font index.
int hershey_face(int font_index) noexcept;

}  // namespace picap
