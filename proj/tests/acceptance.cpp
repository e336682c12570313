// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ksauth/ksauth.hpp"
#include "oracles.hpp"

namespace {

using namespace ksauth;
using SteadyClock = std::chrono::steady_clock;

constexpr unsigned kPrimeBits = 256;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double seconds_since(SteadyClock::time_point t0) {
  return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

struct Arena {
  Clock clock;
  Rng rng;
  SchemeParams params;
  Identity server_id;
  World world;

  Arena(unsigned prime_bits, std::uint64_t seed)
      : rng(seed),
        params(generate_params(prime_bits, rng)),
        server_id(Identity::random(kDefaultIdWidth, rng)),
        world(make_world(params, server_id, clock, rng)) {}
};

// 1. Honest sessions complete with equal keys when the card knows ID_s.
Verdict honest_completeness() {
  Verdict v;
  const auto t0 = SteadyClock::now();
  Arena a(kPrimeBits, 101);
  std::size_t ok = 0;
  for (int i = 0; i < 1000; ++i) {
    SessionOutcome o = run_honest_session(a.world, true, a.clock, a.rng);
    const bool good = o.stage == Stage::fully_authenticated && o.keys_match && o.user_key &&
                      o.server_key && o.user_key->bytes == o.server_key->bytes;
    ok += good;
    v.require(good, "session " + std::to_string(i) + " ended at " + std::string(to_string(o.stage)));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 60.0, "runtime over 60 s");
  v.detail << ok << "/1000 fully authenticated with identical keys at " << kPrimeBits << "-bit primes in "
           << secs << " s";
  return v;
}

// 2. Without ID_s the card cannot verify the reply: no session completes.
Verdict faulty_login() {
  Verdict v;
  Arena a(kPrimeBits, 202);
  v.require(8 * a.params.pub.id_width >= 64, "identity space below 2^64");
  std::size_t completions = 0;
  std::size_t at_step_seven = 0;
  for (int i = 0; i < 1000; ++i) {
    SessionOutcome o = run_honest_session(a.world, false, a.clock, a.rng);
    completions += o.stage == Stage::fully_authenticated;
    at_step_seven += o.stage == Stage::server_verification_failed;
  }
  v.require(completions == 0, "a session completed");
  v.require(at_step_seven == 1000, "a session failed somewhere other than the h(C2) check");
  v.detail << completions << " completions; " << at_step_seven
           << "/1000 failed at the user-side h(C2) == h(C1) check; identity space 2^"
           << 8 * a.params.pub.id_width;
  return v;
}

struct ReplayGrid {
  std::size_t cells = 0;
  std::size_t trials = 0;
  std::size_t hits = 0;
  std::size_t completions = 0;
};

ReplayGrid replay_grid(ReplayMode policy, Stage expected, std::uint64_t seed) {
  ReplayGrid g;
  for (std::size_t m : {2u, 5u, 10u}) {
    Arena a(kPrimeBits, seed + m);
    for (std::size_t k = 1; k <= m - 1; ++k) {
      AttackReport r = run_replay_attack(a.world, {m, k, policy, 100}, a.clock, a.rng);
      ++g.cells;
      g.trials += r.outcomes.size();
      g.hits += r.count(expected) == 100 ? 1 : 0;
      g.completions += r.count(Stage::fully_authenticated);
    }
  }
  return g;
}

// 3. Without a replay cache a recorded login request is answered again.
Verdict replay_attack() {
  Verdict v;
  ReplayGrid g = replay_grid(ReplayMode::none, Stage::reply_emitted, 303);
  v.require(g.hits == g.cells, "some (m, k) cell below 100/100 reply_emitted");
  v.require(g.completions == 0, "adversary reached fully_authenticated");
  v.detail << g.hits << "/" << g.cells << " (m, k) cells with 100/100 reply_emitted over " << g.trials
           << " trials; adversary completions: " << g.completions;
  return v;
}

// 4. The full-history cache blocks the replay; its size and cost grow with logins.
Verdict countermeasure() {
  Verdict v;
  ReplayGrid g = replay_grid(ReplayMode::full_history, Stage::rejected_at_replay_cache, 404);
  v.require(g.hits == g.cells, "some (m, k) cell below 100/100 rejected");
  v.require(g.completions == 0, "adversary reached fully_authenticated");

  for (std::size_t k : {1u, 10u, 100u}) {
    Arena a(kPrimeBits, 410 + k);
    CacheCostReport r = measure_replay_cache_cost(a.world, k, a.clock, a.rng);
    v.require(r.history_size == k && r.failed_logins == 0,
              "history size " + std::to_string(r.history_size) + " after " + std::to_string(k) + " logins");
  }

  constexpr std::size_t kMaxLogins = 10000;
  Arena a(kPrimeBits, 499);
  CacheCostReport r = measure_replay_cache_cost(a.world, kMaxLogins, a.clock, a.rng);
  v.require(r.rows.size() == kMaxLogins && r.history_size == kMaxLogins && r.failed_logins == 0,
            "cost run did not record every login");
  std::cout << "  replay-cache check cost (mean ns per login over each window)\n"
            << "  logins            history_size  mean_check_ns\n";
  const std::vector<std::pair<std::size_t, std::size_t>> windows = {
      {1, 1}, {2, 10}, {11, 100}, {101, 1000}, {1001, 2500}, {2501, 5000}, {5001, 7500}, {7501, 10000}};
  for (auto [lo, hi] : windows) {
    double sum = 0;
    for (std::size_t i = lo; i <= hi; ++i) sum += static_cast<double>(r.rows[i - 1].check_time.count());
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %5zu..%-5zu  %12zu  %13.0f\n", lo, hi, r.rows[hi - 1].history_size,
                  sum / static_cast<double>(hi - lo + 1));
    std::cout << buf;
  }
  v.detail << g.hits << "/" << g.cells << " (m, k) cells with 100/100 rejected; history sizes exact for k in "
           << "{1, 10, 100}; cost table over " << r.rows.size() << " logins";
  return v;
}

// 5. Algebraic identities the protocol rests on, checked on small parameters.
Verdict algebraic_identities() {
  Verdict v;
  std::size_t sets = 0;
  std::size_t exhaustive = 0;
  for (unsigned bits : {8u, 16u}) {
    Rng rng(500 + bits);
    for (int i = 0; i < 100; ++i, ++sets) {
      auto f = testing::make_fixture(bits, rng);
      const BigInt& n = f.pub().n;
      const BigInt& y = f.pub().y;
      const BigInt& d = f.params.secret.d;
      const std::size_t w = f.pub().common_width();

      LoginStart start = login_begin(f.card, f.user, f.password, 1000, rng);
      LoginResponse resp = f.server.handle_login_request(start.request, 1001, rng);

      // (a) B2^d = y^j
      v.require(mod_exp(start.request.b2, d, n) == mod_exp(y, start.session.j, n), "B2^d != y^j");
      v.require(resp.session.b3_prime == start.session.b3, "server B3' != card B3");

      // (b) C_in * y^(-h(b xor PWD)) = y^(h(d || T_R || ID))
      const Digest hb = hash_digest(xor_fixed(f.card.b, hash_digest(f.password).bytes));
      const BigInt lhs = f.card.c_in * mod_exp(mod_inv(y, n), digest_value(hb), n) % n;
      const BigInt cred = digest_value(hash_digest(
          concat(encode_fixed(d, w), encode_fixed(f.registered_at, w), f.user.bytes())));
      const BigInt rhs = mod_exp(y, cred, n);
      v.require(lhs == rhs, "unblinding identity");
      v.require(start.session.c_in_prime == rhs, "card C_in' differs");

      // (c) ID recovered from C
      const Bytes mask = hash_digest(xor_fixed(encode_fixed(start.request.b2, w),
                                               encode_fixed(resp.session.b3_prime, w)))
                             .bytes;
      const Bytes padded = xor_fixed(start.request.c, mask);
      Bytes expected(f.pub().digest_width - f.user.width(), 0);
      expected.insert(expected.end(), f.user.bytes().begin(), f.user.bytes().end());
      v.require(padded == expected, "ID recovery bytes");
      v.require(resp.session.id == f.user, "server derived a different ID");

      // (d) e*d = 1 mod phi(n)
      const BigInt& phi = f.params.secret.phi_n;
      v.require(f.params.secret.e * d % phi == 1, "e*d != 1 mod phi");
      if (phi < (1 << 16)) {
        auto inv = oracle::exhaustive_inverse(f.params.secret.e.convert_to<std::uint64_t>(),
                                              phi.convert_to<std::uint64_t>());
        v.require(inv && BigInt(*inv) == d, "d differs from exhaustive inverse");
        ++exhaustive;
      }
    }
  }
  v.detail << sets << " parameter sets at 8 and 16 bits; (a)-(d) exact; d cross-checked exhaustively on "
           << exhaustive << " sets with phi(n) < 2^16";
  return v;
}

// 6. Arithmetic against brute-force oracles.
Verdict oracle_equivalence() {
  Verdict v;
  Rng rng(606);
  std::size_t invertible = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t m = 2 + rng() % (0x10000 - 2);
    const std::uint64_t base = rng() % 0x10000;
    const std::uint64_t exp = rng() % 0x10000;
    v.require(mod_exp(base, exp, m).convert_to<std::uint64_t>() == oracle::naive_pow(base, exp, m),
              "mod_exp mismatch");
    const std::uint64_t a = rng() % m;
    auto inv = oracle::exhaustive_inverse(a, m);
    if (inv) {
      ++invertible;
      v.require(mod_inv(a, m).convert_to<std::uint64_t>() == *inv, "mod_inv mismatch");
    } else {
      bool threw = false;
      try {
        (void)mod_inv(a, m);
      } catch (const Error& e) {
        threw = e.code() == ErrorCode::not_invertible;
      }
      v.require(threw, "mod_inv accepted a non-invertible input");
    }
  }
  SchemeParams sp = params_from_components(11, 13, 7, 2);
  const std::uint64_t y = oracle::naive_pow(2, 103, 143);
  v.require(sp.secret.d == 103, "fixture d");
  v.require(sp.pub.y == y, "fixture y");
  v.detail << "1000 mod_exp and 1000 mod_inv instances (" << invertible
           << " invertible) agree; fixture d=" << sp.secret.d << ", y=" << sp.pub.y << " (oracle " << y << ")";
  return v;
}

Message random_message(Rng& rng) {
  auto big = [&rng] { return random_below(BigInt(1) << (rng() % 600), rng); };
  auto digest = [&rng] { return Digest{random_bytes(1 + rng() % 64, rng)}; };
  switch (rng() % 4) {
    case 0: return LoginRequest{big(), digest(), random_bytes(rng() % 64, rng)};
    case 1: return ServerReply{digest(), big(), rng()};
    case 2: return AuthMessage{big(), rng()};
    default: return RegistrationRequest{Identity::random(1 + rng() % 32, rng), digest()};
  }
}

std::string report_without_wall_time(std::vector<ReportLine> lines) {
  for (auto& l : lines) l.wall_time_ns = 0;
  return format_json_lines(lines);
}

// 7. Determinism, codec round trips, database file round trip.
Verdict determinism_and_codec() {
  Verdict v;
  ScenarioConfig config;
  config.trials = 20;
  config.sessions = 3;
  config.replay_from = 2;
  for (std::string_view name : kScenarioNames) {
    ScenarioResult x = run_scenario(name, config);
    ScenarioResult y = run_scenario(name, config);
    v.require(format_json_lines(x.transcript) == format_json_lines(y.transcript),
              "transcript differs for " + std::string(name));
    v.require(report_without_wall_time(x.report) == report_without_wall_time(y.report),
              "report differs for " + std::string(name));
  }

  Rng rng(707);
  std::size_t round_trips = 0;
  for (int i = 0; i < 10000; ++i) {
    const Message m = random_message(rng);
    const bool ok = deserialize_message(serialize_message(m)) == m;
    round_trips += ok;
    v.require(ok, "codec round trip " + std::to_string(i));
  }

  SchemeParams sp = generate_params(kPrimeBits, rng);
  const Identity server_id = Identity::random(kDefaultIdWidth, rng);
  AuthServer server(sp.pub, sp.secret, server_id);
  for (int u = 0; u < 50; ++u) {
    const Identity id = Identity::from_string("user" + std::to_string(u), sp.pub.id_width);
    server.handle_registration(create_registration_request(id, "pw", rng, sp.pub.digest_width).request,
                               1000 + static_cast<Timestamp>(u));
  }
  const auto path = std::filesystem::temp_directory_path() / "ksauth-acceptance.ksdb";
  server.database().save(path);
  UserDatabase loaded = UserDatabase::load(path, sp.pub.digest_width);
  std::filesystem::remove(path);
  v.require(loaded == server.database(), "database differs after reload");
  AuthServer restored(sp.pub, sp.secret, server_id);
  restored.set_database(loaded);
  for (int u = 0; u < 50; ++u) {
    const Identity id = Identity::from_string("user" + std::to_string(u), sp.pub.id_width);
    v.require(restored.registration_time(id) == 1000 + static_cast<Timestamp>(u), "restored T_R");
  }
  v.detail << "transcripts and reports identical across reruns of " << kScenarioNames.size()
           << " scenarios; " << round_trips << "/10000 codec round trips; " << loaded.size()
           << " database records reloaded exactly";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"honest-run completeness", honest_completeness},
      {"faulty login reproduction", faulty_login},
      {"replay attack reproduction", replay_attack},
      {"replay-cache countermeasure", countermeasure},
      {"algebraic identities", algebraic_identities},
      {"oracle equivalence", oracle_equivalence},
      {"determinism and codec", determinism_and_codec},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& [name, run] = criteria[i];
    Verdict v;
    const auto t0 = SteadyClock::now();
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::cout << (v.pass ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << " " << name << ": "
              << v.detail.str() << " (" << seconds_since(t0) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
