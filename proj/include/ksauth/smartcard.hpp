#pragma once

#include <optional>
#include <string_view>

#include "ksauth/messages.hpp"
#include "ksauth/params.hpp"
#include "ksauth/scheme.hpp"

namespace ksauth {

// What the server writes onto a freshly issued card: <C_in, B1, g, y, n, h>.
// The widths in `pub` pin down h.
struct CardPayload {
  BigInt c_in;
  BigInt b1;
  PublicParams pub;
  friend bool operator==(const CardPayload&, const CardPayload&) = default;
};

struct SmartCard {
  BigInt c_in;
  BigInt b1;
  PublicParams pub;
  Bytes b;
  friend bool operator==(const SmartCard&, const SmartCard&) = default;
};

// Card-side state between sending <B2, M, C> and receiving the reply.
struct CardSession {
  PublicParams pub;
  BigInt j;
  BigInt b2;
  BigInt b3;
  Bytes c;
  BigInt c_in_prime;
  Identity id;
  Timestamp started_at = 0;
};

struct RegistrationBundle {
  RegistrationRequest request;
  Bytes b;  // kept by the user, inserted into the card later
};

struct LoginStart {
  LoginRequest request;
  CardSession session;
};

struct ReplyOutcome {
  AuthMessage z;
  BigInt c2;
};

inline RegistrationBundle create_registration_request(const Identity& id, std::string_view password,
                                                      Rng& rng,
                                                      std::size_t digest_width = kDefaultDigestWidth) {
  if (password.empty()) throw Error(ErrorCode::empty_password, "password must be non-empty");
  RegistrationBundle out;
  out.b = random_bytes(digest_width, rng);
  out.request.id = id;
  out.request.blinded_password = blinded_password(out.b, password, digest_width);
  return out;
}

inline SmartCard personalize_card(const CardPayload& issued, Bytes b) {
  const PublicParams& pub = issued.pub;
  if (!public_params_valid(pub)) {
    throw Error(ErrorCode::invalid_card_payload, "public parameters inconsistent");
  }
  if (issued.c_in <= 0 || issued.c_in >= pub.n || issued.b1 <= 0 || issued.b1 >= pub.n) {
    throw Error(ErrorCode::invalid_card_payload, "card values must lie in (0, n)");
  }
  if (b.size() != pub.digest_width) {
    throw Error(ErrorCode::width_mismatch, "b must be exactly digest_width bytes");
  }
  return SmartCard{issued.c_in, issued.b1, pub, std::move(b)};
}

// Login steps 1-2.
inline LoginStart login_begin(const SmartCard& card, const Identity& id_entered,
                              std::string_view password_entered, Timestamp now, Rng& rng) {
  const PublicParams& pub = card.pub;
  if (id_entered.width() != pub.id_width) {
    throw Error(ErrorCode::invalid_identity, "identity width does not match card");
  }
  const Digest blinded = blinded_password(card.b, password_entered, pub.digest_width);
  if (password_verifier(id_entered, blinded, pub) != card.b1) {
    throw Error(ErrorCode::wrong_credentials, "B1* != B1");
  }

  CardSession s;
  s.pub = pub;
  s.id = id_entered;
  s.started_at = now;
  s.j = random_in_range(2, pub.n - 2, rng);
  s.b2 = mod_exp(pub.g, s.j, pub.n);
  s.b3 = mod_exp(pub.y, s.j, pub.n);
  s.c = xor_fixed(encode_identity(id_entered, pub.digest_width),
                  identity_mask(s.b2, s.b3, pub).bytes);
  // y^-x computed as (y^-1)^x; the card has no phi(n) to reduce with.
  const BigInt unblind = mod_exp(mod_inv(pub.y, pub.n), digest_value(blinded), pub.n);
  s.c_in_prime = card.c_in * unblind % pub.n;

  LoginRequest request{s.b2, login_authenticator(s.c_in_prime, s.c, pub), s.c};
  return LoginStart{std::move(request), std::move(s)};
}

// Login steps 6-8. `id_s` has to come from outside the protocol: no message
// carries it, which is exactly why an honest user cannot finish step 7.
inline ReplyOutcome process_server_reply(const CardSession& session, const ServerReply& reply,
                                         const Identity& id_s, Timestamp now, Timestamp delta_t) {
  const PublicParams& pub = session.pub;
  if (now > reply.t_s && now - reply.t_s > delta_t) {
    throw Error(ErrorCode::stale_reply, "T - T_s exceeds delta T");
  }
  const BigInt t_star = time_binding(reply.t_s, session.id, id_s, session.b3, pub);
  const BigInt c2 = mod_exp(session.c_in_prime, reply.r + t_star, pub.n);
  if (reply_digest(c2, pub) != reply.h_c1) {
    throw Error(ErrorCode::server_verification_failed, "h(C2) != h(C1)");
  }
  return ReplyOutcome{AuthMessage{auth_value(c2, session.id, now, pub), now}, c2};
}

inline Digest derive_user_session_key(const CardSession& session, const Identity& id_s,
                                      const BigInt& c2) {
  return session_key(session.id, id_s, c2, session.pub);
}

}  // namespace ksauth
