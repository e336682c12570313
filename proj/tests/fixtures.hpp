#pragma once

#include <string>

#include "ksauth/server.hpp"
#include "ksauth/smartcard.hpp"

namespace ksauth::testing {

// A server with one registered user and that user's personalized card.
struct Fixture {
  SchemeParams params;
  Identity server_id;
  AuthServer server;
  Identity user;
  std::string password;
  RegistrationBundle bundle;
  SmartCard card;
  Timestamp registered_at;

  [[nodiscard]] const PublicParams& pub() const { return params.pub; }
};

inline Fixture make_fixture(unsigned prime_bits, Rng& rng, std::string name = "alice",
                            std::string password = "s3cret", Timestamp registered_at = 100,
                            Widths widths = {}) {
  SchemeParams params = generate_params(prime_bits, rng, widths);
  Identity server_id = Identity::random(widths.id, rng);
  AuthServer server(params.pub, params.secret, server_id);
  Identity user = Identity::from_string(name, widths.id);
  RegistrationBundle bundle = create_registration_request(user, password, rng, widths.digest);
  CardPayload payload = server.handle_registration(bundle.request, registered_at);
  SmartCard card = personalize_card(payload, bundle.b);
  return Fixture{std::move(params), std::move(server_id), std::move(server), std::move(user),
                 std::move(password), std::move(bundle), std::move(card), registered_at};
}

}  // namespace ksauth::testing
