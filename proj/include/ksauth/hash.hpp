#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string_view>

#include <openssl/evp.h>

#include "ksauth/bigint.hpp"

namespace ksauth {

inline constexpr std::size_t kDefaultDigestWidth = 32;

struct Digest {
  Bytes bytes;

  [[nodiscard]] std::size_t size() const { return bytes.size(); }
  [[nodiscard]] ByteView view() const { return bytes; }
  friend bool operator==(const Digest&, const Digest&) = default;
  friend auto operator<=>(const Digest&, const Digest&) = default;
};

// The scheme's one-way function h. SHA-256 at the default 32-byte width;
// any other width uses the SHAKE256 extendable output so every width is a
// full-strength digest rather than a truncation.
inline Digest hash_digest(ByteView data, std::size_t width = kDefaultDigestWidth) {
  if (width == 0) throw Error(ErrorCode::invalid_argument, "digest width must be positive");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx) throw std::bad_alloc();
  Digest out{Bytes(width)};
  const bool xof = width != kDefaultDigestWidth;
  const EVP_MD* md = xof ? EVP_shake256() : EVP_sha256();
  bool ok = EVP_DigestInit_ex(ctx.get(), md, nullptr) == 1 &&
            EVP_DigestUpdate(ctx.get(), data.data(), data.size()) == 1;
  if (ok) {
    ok = xof ? EVP_DigestFinalXOF(ctx.get(), out.bytes.data(), width) == 1
             : EVP_DigestFinal_ex(ctx.get(), out.bytes.data(), nullptr) == 1;
  }
  if (!ok) throw std::runtime_error("OpenSSL digest failure");
  return out;
}

inline Digest hash_digest(std::string_view text, std::size_t width = kDefaultDigestWidth) {
  return hash_digest(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), width);
}

// Big-endian integer value of a digest, i.e. h(.) used as an exponent.
inline BigInt digest_value(const Digest& digest) { return decode(digest.bytes); }

inline BigInt hash_to_exponent(ByteView data, std::size_t width = kDefaultDigestWidth) {
  return digest_value(hash_digest(data, width));
}

inline Bytes xor_fixed(ByteView a, ByteView b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::width_mismatch,
                "xor of " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " bytes");
  }
  Bytes out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

// a || b || ...
template <typename... Parts>
Bytes concat(const Parts&... parts) {
  Bytes out;
  out.reserve((std::size(parts) + ...));
  (out.insert(out.end(), std::begin(parts), std::end(parts)), ...);
  return out;
}

}  // namespace ksauth
