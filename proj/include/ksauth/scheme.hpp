#pragma once

// Formulas shared by the card and the server. Each takes the public
// parameters so both sides encode every operand identically: big integers
// and timestamps at the common width w, identities left zero-padded to the
// width required by the XOR they take part in.

#include <cstdint>
#include <optional>
#include <string_view>

#include "ksauth/bigint.hpp"
#include "ksauth/hash.hpp"
#include "ksauth/identity.hpp"
#include "ksauth/params.hpp"

namespace ksauth {

using Timestamp = std::uint64_t;

inline Bytes encode_identity(const Identity& id, std::size_t width) {
  if (id.width() > width) throw Error(ErrorCode::value_too_wide, "identity wider than target");
  Bytes out(width - id.width(), 0);
  out.insert(out.end(), id.bytes().begin(), id.bytes().end());
  return out;
}

// Inverse of encode_identity; nullopt when the prefix is not zero or the
// identity itself is malformed.
inline std::optional<Identity> decode_identity(ByteView encoded, std::size_t id_width) {
  if (encoded.size() < id_width) return std::nullopt;
  const std::size_t pad = encoded.size() - id_width;
  for (std::size_t i = 0; i < pad; ++i) {
    if (encoded[i] != 0) return std::nullopt;
  }
  return Identity::parse_padded(encoded.subspan(pad));
}

// PWD mapped to digest_width bytes before it is XORed with b.
inline Bytes password_mask(std::string_view password, std::size_t digest_width) {
  if (password.empty()) throw Error(ErrorCode::empty_password, "password must be non-empty");
  return hash_digest(password, digest_width).bytes;
}

// h(b xor PWD)
inline Digest blinded_password(ByteView b, std::string_view password, std::size_t digest_width) {
  return hash_digest(xor_fixed(b, password_mask(password, digest_width)), digest_width);
}

// h(ID) as an exponentiation base: a residue in [2, n-1]. Rehashes with a
// 4-byte counter suffix in the rare case the reduction lands on 0 or 1.
inline BigInt identity_base(const Identity& id, const PublicParams& pub) {
  BigInt base = hash_to_exponent(id.bytes(), pub.digest_width) % pub.n;
  for (std::uint32_t counter = 1; base <= 1; ++counter) {
    if (counter > static_cast<std::uint32_t>(kRetryBudget)) {
      throw Error(ErrorCode::invalid_argument, "identity hash degenerate modulo n");
    }
    base = hash_to_exponent(concat(id.bytes(), encode_u32(counter)), pub.digest_width) % pub.n;
  }
  return base;
}

// B1 = h(ID)^h(b xor PWD) mod n
inline BigInt password_verifier(const Identity& id, const Digest& blinded, const PublicParams& pub) {
  return mod_exp(identity_base(id, pub), digest_value(blinded), pub.n);
}

// h(d || T_R || ID)
inline BigInt credential_exponent(const BigInt& d, Timestamp registered_at, const Identity& id,
                                  const PublicParams& pub) {
  const std::size_t w = pub.common_width();
  return hash_to_exponent(concat(encode_fixed(d, w), encode_fixed(registered_at, w), id.bytes()),
                          pub.digest_width);
}

// h(B2 xor B3): the mask hiding ID in C.
inline Digest identity_mask(const BigInt& b2, const BigInt& b3, const PublicParams& pub) {
  const std::size_t w = pub.common_width();
  return hash_digest(xor_fixed(encode_fixed(b2, w), encode_fixed(b3, w)), pub.digest_width);
}

// M = h(C' || C)
inline Digest login_authenticator(const BigInt& unblinded, ByteView masked_id,
                                  const PublicParams& pub) {
  return hash_digest(concat(encode_fixed(unblinded, pub.common_width()), masked_id),
                     pub.digest_width);
}

// t = h(T_s xor ID_i xor ID_s xor B3)
inline BigInt time_binding(Timestamp server_time, const Identity& user, const Identity& server,
                           const BigInt& b3, const PublicParams& pub) {
  const std::size_t w = pub.common_width();
  Bytes acc = xor_fixed(encode_fixed(server_time, w), encode_identity(user, w));
  acc = xor_fixed(acc, encode_identity(server, w));
  acc = xor_fixed(acc, encode_fixed(b3, w));
  return hash_to_exponent(acc, pub.digest_width);
}

// h(C1) on the server, h(C2) on the card.
inline Digest reply_digest(const BigInt& c, const PublicParams& pub) {
  return hash_digest(encode_fixed(c, pub.common_width()), pub.digest_width);
}

// M1 / M2 = h(C xor ID)^T mod n
inline BigInt auth_value(const BigInt& c, const Identity& user, Timestamp t, const PublicParams& pub) {
  const std::size_t w = pub.common_width();
  const BigInt base = hash_to_exponent(xor_fixed(encode_fixed(c, w), encode_identity(user, w)),
                                       pub.digest_width);
  return mod_exp(base, t, pub.n);
}

// h(ID_i || ID_s || C)
inline Digest session_key(const Identity& user, const Identity& server, const BigInt& c,
                          const PublicParams& pub) {
  return hash_digest(concat(user.bytes(), server.bytes(), encode_fixed(c, pub.common_width())),
                     pub.digest_width);
}

}  // namespace ksauth
