// Walks one user through registration, login and authentication by calling
// the card and server APIs directly, then repeats the login without the
// server identity to show where it breaks.

#include <iostream>

#include "ksauth/ksauth.hpp"

int main() {
  using namespace ksauth;

  Rng rng(2024);
  SchemeParams params = generate_params(64, rng);
  Identity server_id = Identity::random(params.pub.id_width, rng);
  AuthServer server(params.pub, params.secret, server_id);

  Identity alice = Identity::from_string("alice", params.pub.id_width);
  RegistrationBundle bundle = create_registration_request(alice, "hunter2", rng);
  SmartCard card = personalize_card(server.handle_registration(bundle.request, 100), bundle.b);

  Timestamp now = 1000;
  LoginStart start = login_begin(card, alice, "hunter2", now, rng);
  LoginResponse response = server.handle_login_request(start.request, ++now, rng);
  ReplyOutcome reply = process_server_reply(start.session, response.reply, server_id, ++now, 60);
  Digest server_key = server.handle_auth_message(response.session, reply.z, ++now);
  Digest user_key = derive_user_session_key(start.session, server_id, reply.c2);

  std::cout << "user key   " << to_hex(user_key.bytes) << "\n"
            << "server key " << to_hex(server_key.bytes) << "\n"
            << (user_key == server_key ? "keys match\n" : "keys differ\n");

  // Without ID_s the card has nothing to put into t*.
  start = login_begin(card, alice, "hunter2", ++now, rng);
  response = server.handle_login_request(start.request, ++now, rng);
  try {
    process_server_reply(start.session, response.reply, Identity::random(params.pub.id_width, rng), ++now, 60);
  } catch (const Error& e) {
    std::cout << "without ID_s: " << e.what() << "\n";
  }
}
