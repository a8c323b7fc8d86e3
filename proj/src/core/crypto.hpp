#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace picap {

using Digest = std::array<std::uint8_t, 32>;
using Salt = std::array<std::uint8_t, 16>;

/// SHA-256 over salt || password.
Digest salted_hash(std::span<const std::uint8_t> salt, std::string_view password);

/// Lowercase hex of the first 8 bytes of SHA-256(password).
std::string client_hash(std::string_view password);

/// True for exactly 16 lowercase hex digits.
bool is_client_hash(std::string_view text) noexcept;

Digest sha256(std::span<const std::uint8_t> data);

/// Constant-time equality.
bool digest_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) noexcept;

Salt random_salt();
std::vector<std::uint8_t> random_bytes(std::size_t n);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Overwrites the contents before releasing them.
void secure_wipe(std::string& text) noexcept;

}  // namespace picap
