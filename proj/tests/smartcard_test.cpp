#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ksauth/smartcard.hpp"

namespace ksauth {
namespace {

using testing::make_fixture;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_argument;
}

TEST(Identity, PaddingAndValidation) {
  Identity id = Identity::from_string("bob", 8);
  EXPECT_EQ(id.bytes(), (Bytes{'b', 'o', 'b', 0, 0, 0, 0, 0}));
  EXPECT_EQ(id.name(), "bob");
  EXPECT_EQ(code_of([] { Identity::from_string("way too long", 4); }), ErrorCode::invalid_identity);
  EXPECT_EQ(code_of([] { Identity::from_string("", 4); }), ErrorCode::invalid_identity);
  EXPECT_EQ(code_of([] { Identity::from_bytes(Bytes{'a', 0, 'b'}, 4); }), ErrorCode::invalid_identity);
  EXPECT_FALSE(Identity::parse_padded(Bytes{0, 'a', 0}).has_value());
}

TEST(Registration, DeterministicUnderSeed) {
  Identity id = Identity::from_string("alice", kDefaultIdWidth);
  Rng a(7);
  Rng b(7);
  RegistrationBundle x = create_registration_request(id, "pw", a);
  RegistrationBundle y = create_registration_request(id, "pw", b);
  EXPECT_EQ(x.b, y.b);
  EXPECT_EQ(x.request, y.request);
  EXPECT_EQ(x.b.size(), kDefaultDigestWidth);
}

TEST(Registration, FreshRandomNumberPerSeed) {
  Identity id = Identity::from_string("alice", kDefaultIdWidth);
  std::set<Bytes> seen;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    ASSERT_TRUE(seen.insert(create_registration_request(id, "pw", rng).b).second) << seed;
  }
}

TEST(Registration, LongPasswordIsHashedFirst) {
  Identity id = Identity::from_string("alice", kDefaultIdWidth);
  Rng rng(1);
  const std::string long_pw(200, 'x');
  RegistrationBundle r = create_registration_request(id, long_pw, rng);
  EXPECT_EQ(r.request.blinded_password,
            hash_digest(xor_fixed(r.b, hash_digest(long_pw).bytes)));
}

TEST(Registration, EmptyPasswordRejected) {
  Identity id = Identity::from_string("alice", kDefaultIdWidth);
  Rng rng(1);
  EXPECT_EQ(code_of([&] { create_registration_request(id, "", rng); }), ErrorCode::empty_password);
}

TEST(Personalize, CopiesPayload) {
  Rng rng(2);
  auto f = make_fixture(16, rng);
  EXPECT_EQ(f.card.pub, f.pub());
  EXPECT_EQ(f.card.b, f.bundle.b);
  EXPECT_GT(f.card.c_in, 0);
  EXPECT_LT(f.card.c_in, f.pub().n);
  EXPECT_GT(f.card.b1, 0);
  EXPECT_LT(f.card.b1, f.pub().n);
}

TEST(Personalize, RejectsBadInputs) {
  Rng rng(3);
  auto f = make_fixture(16, rng);
  CardPayload payload{f.card.c_in, f.card.b1, f.card.pub};
  EXPECT_EQ(code_of([&] { personalize_card(payload, Bytes(5)); }), ErrorCode::width_mismatch);
  CardPayload wide = payload;
  wide.c_in = f.pub().n;
  EXPECT_EQ(code_of([&] { personalize_card(wide, f.card.b); }), ErrorCode::invalid_card_payload);
  wide = payload;
  wide.b1 = f.pub().n + 5;
  EXPECT_EQ(code_of([&] { personalize_card(wide, f.card.b); }), ErrorCode::invalid_card_payload);
}

TEST(Login, WrongPasswordRejectedOnCard) {
  Rng rng(4);
  auto f = make_fixture(16, rng);
  EXPECT_EQ(code_of([&] { login_begin(f.card, f.user, "not it", 1000, rng); }),
            ErrorCode::wrong_credentials);
  Identity other = Identity::from_string("mallory", kDefaultIdWidth);
  EXPECT_EQ(code_of([&] { login_begin(f.card, other, f.password, 1000, rng); }),
            ErrorCode::wrong_credentials);
}

TEST(Login, FreshBlindingEachTime) {
  Rng rng(5);
  auto f = make_fixture(64, rng);
  std::set<BigInt> b2s;
  for (int i = 0; i < 100; ++i) {
    ASSERT_TRUE(b2s.insert(login_begin(f.card, f.user, f.password, 1000, rng).request.b2).second);
  }
}

TEST(Login, SessionInvariants) {
  Rng rng(6);
  for (unsigned bits : {8u, 16u, 64u}) {
    auto f = make_fixture(bits, rng);
    LoginStart start = login_begin(f.card, f.user, f.password, 1000, rng);
    const CardSession& s = start.session;
    const BigInt& n = f.pub().n;
    EXPECT_EQ(s.b2, mod_exp(f.pub().g, s.j, n));
    EXPECT_EQ(s.b3, mod_exp(f.pub().y, s.j, n));
    EXPECT_EQ(start.request.b2, s.b2);
    EXPECT_EQ(start.request.c, s.c);
    // Unblinded credential matches what the server derives on its own.
    EXPECT_EQ(s.c_in_prime, f.server.unblinded_credential(f.user, f.registered_at));
    // The identity comes back out of C given B2 and B3.
    const Bytes recovered = xor_fixed(s.c, identity_mask(s.b2, s.b3, f.pub()).bytes);
    EXPECT_EQ(recovered, encode_identity(f.user, f.pub().digest_width));
    EXPECT_NE(s.c, encode_identity(f.user, f.pub().digest_width));
  }
}

struct HonestRun {
  LoginStart start;
  LoginResponse response;
};

HonestRun begin_and_answer(testing::Fixture& f, Rng& rng, Timestamp t) {
  LoginStart start = login_begin(f.card, f.user, f.password, t, rng);
  LoginResponse response = f.server.handle_login_request(start.request, t + 1, rng);
  return HonestRun{std::move(start), std::move(response)};
}

TEST(ServerReply, HonestRunAtEightBits) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto f = make_fixture(8, rng);
    HonestRun run = begin_and_answer(f, rng, 1000);
    ReplyOutcome reply = process_server_reply(run.start.session, run.response.reply, f.server_id, 1002, 60);
    EXPECT_EQ(reply.c2, run.response.session.c1);
    EXPECT_EQ(reply.z.t, 1002u);
    Digest server_key = f.server.handle_auth_message(run.response.session, reply.z, 1003);
    EXPECT_EQ(derive_user_session_key(run.start.session, f.server_id, reply.c2), server_key);
  }
}

TEST(ServerReply, WrongServerIdentityFails) {
  Rng rng(8);
  auto f = make_fixture(16, rng);
  HonestRun run = begin_and_answer(f, rng, 1000);
  Identity guess = Identity::random(kDefaultIdWidth, rng);
  EXPECT_EQ(code_of([&] { process_server_reply(run.start.session, run.response.reply, guess, 1002, 60); }),
            ErrorCode::server_verification_failed);
}

TEST(ServerReply, StaleReplyRejected) {
  Rng rng(9);
  auto f = make_fixture(16, rng);
  HonestRun run = begin_and_answer(f, rng, 1000);
  // T_s = 1001; 1061 is exactly on the window edge, 1062 is past it.
  EXPECT_NO_THROW(process_server_reply(run.start.session, run.response.reply, f.server_id, 1061, 60));
  EXPECT_EQ(code_of([&] { process_server_reply(run.start.session, run.response.reply, f.server_id, 1062, 60); }),
            ErrorCode::stale_reply);
}

TEST(SessionKey, DeterministicAndSensitiveToC2) {
  Rng rng(10);
  auto f = make_fixture(32, rng);
  LoginStart start = login_begin(f.card, f.user, f.password, 1000, rng);
  std::set<Digest> keys;
  for (int i = 0; i < 1000; ++i) {
    const BigInt c2 = random_below(f.pub().n - 1, rng);
    const Digest k = derive_user_session_key(start.session, f.server_id, c2);
    ASSERT_EQ(k, derive_user_session_key(start.session, f.server_id, c2));
    ASSERT_NE(k, derive_user_session_key(start.session, f.server_id, c2 + 1));
    keys.insert(k);
  }
  EXPECT_GT(keys.size(), 900u);
}

TEST(IdentityBase, NonTrivialResidue) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    SchemeParams sp = generate_params(8, rng);
    Identity id = Identity::random(kDefaultIdWidth, rng);
    const BigInt base = identity_base(id, sp.pub);
    ASSERT_GE(base, 2);
    ASSERT_LT(base, sp.pub.n);
  }
}

}  // namespace
}  // namespace ksauth
