#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>

#include "ksauth/bigint.hpp"

namespace ksauth {

// A user or server identity: exactly `width` bytes, the raw name followed by
// zero padding. The raw name is non-empty and contains no zero byte.
class Identity {
 public:
  Identity() = default;

  static Identity from_string(std::string_view name, std::size_t width) {
    return from_bytes(ByteView(reinterpret_cast<const std::uint8_t*>(name.data()), name.size()),
                      width);
  }

  // Accepts either a raw name (padded here) or an already padded value.
  static Identity from_bytes(ByteView raw, std::size_t width) {
    if (raw.size() > width) {
      throw Error(ErrorCode::invalid_identity, "identity longer than " + std::to_string(width));
    }
    Bytes padded(raw.begin(), raw.end());
    padded.resize(width, 0);
    if (!well_formed(padded)) throw Error(ErrorCode::invalid_identity, "malformed identity");
    Identity id;
    id.bytes_ = std::move(padded);
    return id;
  }

  static std::optional<Identity> parse_padded(ByteView padded) {
    if (!well_formed(padded)) return std::nullopt;
    Identity id;
    id.bytes_.assign(padded.begin(), padded.end());
    return id;
  }

  // Uniform over names of the full width with no zero bytes (255^width values).
  static Identity random(std::size_t width, Rng& rng) {
    Identity id;
    id.bytes_.reserve(width);
    while (id.bytes_.size() < width) {
      for (auto b : random_bytes(width - id.bytes_.size(), rng)) {
        if (b != 0) id.bytes_.push_back(b);
      }
    }
    return id;
  }

  [[nodiscard]] const Bytes& bytes() const { return bytes_; }
  [[nodiscard]] std::size_t width() const { return bytes_.size(); }

  [[nodiscard]] std::string name() const {
    auto end = std::find(bytes_.begin(), bytes_.end(), std::uint8_t{0});
    return std::string(bytes_.begin(), end);
  }

  friend bool operator==(const Identity&, const Identity&) = default;

 private:
  static bool well_formed(ByteView padded) {
    if (padded.empty() || padded[0] == 0) return false;
    auto first_zero = std::find(padded.begin(), padded.end(), std::uint8_t{0});
    return std::all_of(first_zero, padded.end(), [](std::uint8_t b) { return b == 0; });
  }

  Bytes bytes_;
};

}  // namespace ksauth
