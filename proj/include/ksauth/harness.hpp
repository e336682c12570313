#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ksauth/messages.hpp"
#include "ksauth/server.hpp"
#include "ksauth/smartcard.hpp"

namespace ksauth {

// Logical time source. Every channel event takes one tick; sessions are
// separated by larger epoch jumps.
struct Clock {
  Timestamp now = 0;
  Timestamp step = 1;

  Timestamp tick() { return now += step; }
  void advance(Timestamp seconds) { now += seconds; }
};

enum class Direction { user_to_server, server_to_user };

constexpr std::string_view to_string(Direction d) {
  return d == Direction::user_to_server ? "user_to_server" : "server_to_user";
}

struct TapeEntry {
  Direction direction;
  MessageKind kind;
  Bytes bytes;
  Timestamp time;
};

// Append-only record of everything that crossed the channel, as seen by an
// eavesdropping adversary.
class ChannelTape {
 public:
  std::size_t record(Direction direction, MessageKind kind, Bytes bytes, Timestamp time) {
    if (!entries_.empty() && time <= entries_.back().time) {
      throw Error(ErrorCode::invalid_argument, "tape times must strictly increase");
    }
    entries_.push_back(TapeEntry{direction, kind, std::move(bytes), time});
    return entries_.size() - 1;
  }

  [[nodiscard]] const Bytes& replay(std::size_t index) const {
    if (index >= entries_.size()) {
      throw Error(ErrorCode::index_out_of_range,
                  "tape index " + std::to_string(index) + " of " + std::to_string(entries_.size()));
    }
    return entries_[index].bytes;
  }

  [[nodiscard]] const std::vector<TapeEntry>& entries() const { return entries_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  std::vector<TapeEntry> entries_;
};

struct TranscriptLine {
  Timestamp time = 0;
  std::string actor;  // card, server, adversary
  std::string event;
  std::map<std::string, std::string> fields;  // hex-encoded components

  friend bool operator==(const TranscriptLine&, const TranscriptLine&) = default;
};

using Transcript = std::vector<TranscriptLine>;

// How far a session (or injected message) got. Ordered by protocol step.
enum class Stage {
  rejected_by_card,
  rejected_at_replay_cache,
  rejected_at_lookup,
  rejected_at_M_check,
  reply_emitted,
  reply_stale,
  server_verification_failed,
  auth_stale,
  auth_failed,
  fully_authenticated,
};

constexpr std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::rejected_by_card: return "rejected_by_card";
    case Stage::rejected_at_replay_cache: return "rejected_at_replay_cache";
    case Stage::rejected_at_lookup: return "rejected_at_lookup";
    case Stage::rejected_at_M_check: return "rejected_at_M_check";
    case Stage::reply_emitted: return "reply_emitted";
    case Stage::reply_stale: return "reply_stale";
    case Stage::server_verification_failed: return "server_verification_failed";
    case Stage::auth_stale: return "auth_stale";
    case Stage::auth_failed: return "auth_failed";
    case Stage::fully_authenticated: return "fully_authenticated";
  }
  return "unknown";
}

// A registered user, their card, and the server, wired to one channel.
struct World {
  AuthServer server;
  SmartCard card;
  Identity user_id;
  std::string password;
  ChannelTape tape;
  Transcript* transcript = nullptr;
};

struct WorldOptions {
  std::string user_name = "alice";
  std::string password = "correct horse battery staple";
  Timestamp delta_t = kDefaultDeltaT;
};

namespace detail {

inline void log(World& world, Timestamp time, std::string actor, std::string event,
                std::map<std::string, std::string> fields = {}) {
  if (world.transcript == nullptr) return;
  world.transcript->push_back(TranscriptLine{time, std::move(actor), std::move(event), std::move(fields)});
}

inline Stage stage_for_server_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::replay_detected: return Stage::rejected_at_replay_cache;
    case ErrorCode::bad_authenticator: return Stage::rejected_at_M_check;
    default: return Stage::rejected_at_lookup;
  }
}

inline std::map<std::string, std::string> login_fields(const LoginRequest& m, ByteView wire) {
  return {{"B2", to_hex(m.b2)}, {"M", to_hex(m.m.bytes)}, {"C", to_hex(m.c)}, {"wire", to_hex(wire)}};
}

}  // namespace detail

// Registers a user from scratch: registration request, card issuance and
// personalization.
inline World make_world(const SchemeParams& params, const Identity& server_id, Clock& clock,
                        Rng& rng, const WorldOptions& options = {},
                        Transcript* transcript = nullptr) {
  AuthServer server(params.pub, params.secret, server_id, ReplayMode::none, options.delta_t);
  Identity user = Identity::from_string(options.user_name, params.pub.id_width);
  RegistrationBundle bundle =
      create_registration_request(user, options.password, rng, params.pub.digest_width);
  const Timestamp t = clock.tick();
  CardPayload payload = server.handle_registration(bundle.request, t);
  SmartCard card = personalize_card(payload, std::move(bundle.b));
  World world{std::move(server), std::move(card), std::move(user), options.password, {}, transcript};
  detail::log(world, t, "server", "registered",
              {{"ID", to_hex(world.user_id.bytes())},
               {"C_in", to_hex(world.card.c_in)},
               {"B1", to_hex(world.card.b1)}});
  return world;
}

struct SessionOutcome {
  Stage stage = Stage::rejected_by_card;
  bool keys_match = false;
  std::optional<Digest> user_key;
  std::optional<Digest> server_key;
  std::optional<std::size_t> login_tape_index;
  std::optional<std::size_t> auth_tape_index;
};

// Drives one complete handshake over the channel. The card is handed
// `id_s_for_card` as its belief about the server identity.
inline SessionOutcome run_session(World& world, const Identity& id_s_for_card, Clock& clock, Rng& rng) {
  SessionOutcome out;
  const Timestamp delta_t = world.server.delta_t();

  Timestamp t = clock.tick();
  LoginStart start;
  try {
    start = login_begin(world.card, world.user_id, world.password, t, rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::wrong_credentials) throw;
    detail::log(world, t, "card", "login_rejected");
    return out;
  }
  Bytes wire = serialize_message(start.request);
  out.login_tape_index = world.tape.record(Direction::user_to_server, MessageKind::login_request, wire, t);
  detail::log(world, t, "card", "login_request", detail::login_fields(start.request, wire));

  t = clock.tick();
  LoginResponse response;
  try {
    response = world.server.handle_login_request(deserialize_as<LoginRequest>(wire), t, rng);
  } catch (const Error& e) {
    out.stage = detail::stage_for_server_error(e.code());
    detail::log(world, t, "server", std::string(to_string(e.code())));
    return out;
  }
  out.stage = Stage::reply_emitted;
  wire = serialize_message(response.reply);
  world.tape.record(Direction::server_to_user, MessageKind::server_reply, wire, t);
  detail::log(world, t, "server", "server_reply",
              {{"h_C1", to_hex(response.reply.h_c1.bytes)},
               {"r", to_hex(response.reply.r)},
               {"T_s", to_hex(encode_u64(response.reply.t_s))},
               {"wire", to_hex(wire)}});

  t = clock.tick();
  ReplyOutcome reply;
  try {
    reply = process_server_reply(start.session, deserialize_as<ServerReply>(wire), id_s_for_card, t,
                                 delta_t);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::stale_reply) {
      out.stage = Stage::reply_stale;
    } else if (e.code() == ErrorCode::server_verification_failed) {
      out.stage = Stage::server_verification_failed;
    } else {
      throw;
    }
    detail::log(world, t, "card", std::string(to_string(e.code())));
    return out;
  }
  wire = serialize_message(reply.z);
  out.auth_tape_index = world.tape.record(Direction::user_to_server, MessageKind::auth_message, wire, t);
  detail::log(world, t, "card", "auth_message",
              {{"M1", to_hex(reply.z.m1)}, {"T", to_hex(encode_u64(reply.z.t))}, {"wire", to_hex(wire)}});

  t = clock.tick();
  try {
    out.server_key = world.server.handle_auth_message(response.session, deserialize_as<AuthMessage>(wire), t);
  } catch (const Error& e) {
    out.stage = e.code() == ErrorCode::stale_auth_message ? Stage::auth_stale : Stage::auth_failed;
    detail::log(world, t, "server", std::string(to_string(e.code())));
    return out;
  }
  out.user_key = derive_user_session_key(start.session, id_s_for_card, reply.c2);
  out.stage = Stage::fully_authenticated;
  out.keys_match = *out.user_key == *out.server_key;
  detail::log(world, t, "server", "authenticated",
              {{"server_key", to_hex(out.server_key->bytes)}, {"user_key", to_hex(out.user_key->bytes)}});
  return out;
}

// With id_s_known the real server identity is leaked to the card out of
// band; otherwise the card can only guess one uniformly at random.
inline SessionOutcome run_honest_session(World& world, bool id_s_known, Clock& clock, Rng& rng) {
  const Identity id_s = id_s_known
                            ? world.server.server_id()
                            : Identity::random(world.server.public_params().id_width, rng);
  return run_session(world, id_s, clock, rng);
}

struct TrialRecord {
  std::size_t trial = 0;
  Stage stage = Stage::rejected_by_card;
  std::size_t history_size = 0;
  std::chrono::nanoseconds wall_time{0};
};

struct AttackReport {
  std::string scenario;
  std::size_t trials = 0;
  std::vector<TrialRecord> outcomes;
  std::chrono::nanoseconds wall_time{0};
  std::size_t history_size = 0;

  [[nodiscard]] std::size_t count(Stage stage) const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += o.stage == stage;
    return n;
  }
};

struct ReplayAttackConfig {
  std::size_t sessions_to_record = 2;  // m
  std::size_t replay_from = 1;         // k, 1-based
  ReplayMode policy = ReplayMode::none;
  std::size_t trials = 1;
  Timestamp epoch_gap = 3600;
};

// Records m honest sessions, then at session m+1 re-injects the login
// request of session k byte-for-byte. If the server answers, the adversary
// also tries to close the handshake with the Z recorded in session k, both
// verbatim and re-stamped with the current time.
inline AttackReport run_replay_attack(World& world, const ReplayAttackConfig& config, Clock& clock,
                                      Rng& rng) {
  if (config.trials == 0) throw Error(ErrorCode::invalid_trial_count, "trials must be positive");
  if (config.sessions_to_record == 0 || config.replay_from == 0 ||
      config.replay_from > config.sessions_to_record) {
    throw Error(ErrorCode::invalid_argument, "need m >= 1 and 1 <= k <= m");
  }
  AttackReport report;
  report.scenario = "replay";
  report.trials = config.trials;
  const Digest user_token = world.server.lookup_token(world.user_id);
  const auto started_all = std::chrono::steady_clock::now();

  for (std::size_t trial = 0; trial < config.trials; ++trial) {
    const auto started = std::chrono::steady_clock::now();
    world.server.replay_cache().set_mode(config.policy);
    world.server.replay_cache().clear();

    std::vector<SessionOutcome> recorded;
    for (std::size_t i = 0; i < config.sessions_to_record; ++i) {
      clock.advance(config.epoch_gap);
      recorded.push_back(run_session(world, world.server.server_id(), clock, rng));
      if (!recorded.back().login_tape_index) {
        throw Error(ErrorCode::invalid_argument, "honest session produced no login request");
      }
    }

    clock.advance(config.epoch_gap);
    const SessionOutcome& target = recorded[config.replay_from - 1];
    const Bytes login_wire = world.tape.replay(*target.login_tape_index);
    Timestamp t = clock.tick();
    world.tape.record(Direction::user_to_server, MessageKind::login_request, login_wire, t);
    detail::log(world, t, "adversary", "replay_login_request",
                {{"source_index", std::to_string(*target.login_tape_index)}, {"wire", to_hex(login_wire)}});

    TrialRecord record;
    record.trial = trial;
    t = clock.tick();
    std::optional<LoginResponse> response;
    try {
      response = world.server.handle_login_request(deserialize_as<LoginRequest>(login_wire), t, rng);
      record.stage = Stage::reply_emitted;
      Bytes wire = serialize_message(response->reply);
      world.tape.record(Direction::server_to_user, MessageKind::server_reply, wire, t);
      detail::log(world, t, "server", "server_reply", {{"wire", to_hex(wire)}});
    } catch (const Error& e) {
      record.stage = detail::stage_for_server_error(e.code());
      detail::log(world, t, "server", std::string(to_string(e.code())));
    }

    if (response && target.auth_tape_index) {
      const AuthMessage old_z = deserialize_as<AuthMessage>(world.tape.replay(*target.auth_tape_index));
      for (const AuthMessage& forged : {old_z, AuthMessage{old_z.m1, clock.now + 1}}) {
        t = clock.tick();
        Bytes wire = serialize_message(forged);
        world.tape.record(Direction::user_to_server, MessageKind::auth_message, wire, t);
        try {
          (void)world.server.handle_auth_message(response->session, forged, t);
          record.stage = Stage::fully_authenticated;
          detail::log(world, t, "server", "authenticated");
        } catch (const Error& e) {
          detail::log(world, t, "server", std::string(to_string(e.code())), {{"wire", to_hex(wire)}});
        }
      }
    }

    record.history_size = world.server.replay_cache().history_size(user_token);
    record.wall_time = std::chrono::steady_clock::now() - started;
    report.outcomes.push_back(record);
  }
  report.history_size = world.server.replay_cache().history_size(user_token);
  report.wall_time = std::chrono::steady_clock::now() - started_all;
  return report;
}

struct CacheCostRow {
  std::size_t login = 0;  // 1-based
  std::size_t history_size = 0;
  std::chrono::nanoseconds check_time{0};
};

struct CacheCostReport {
  std::vector<CacheCostRow> rows;
  std::size_t history_size = 0;
  std::size_t failed_logins = 0;

  // Mean check time per contiguous bucket of logins.
  [[nodiscard]] std::vector<double> bucket_means(std::size_t buckets) const {
    std::vector<double> means;
    if (rows.empty() || buckets == 0) return means;
    buckets = std::min(buckets, rows.size());
    for (std::size_t b = 0; b < buckets; ++b) {
      const std::size_t lo = b * rows.size() / buckets;
      const std::size_t hi = (b + 1) * rows.size() / buckets;
      double sum = 0;
      for (std::size_t i = lo; i < hi; ++i) sum += static_cast<double>(rows[i].check_time.count());
      means.push_back(sum / static_cast<double>(hi - lo));
    }
    return means;
  }
};

// k honest logins under the full-history policy, timing each replay-cache
// lookup.
inline CacheCostReport measure_replay_cache_cost(World& world, std::size_t total_logins, Clock& clock,
                                                 Rng& rng) {
  if (total_logins == 0) throw Error(ErrorCode::invalid_trial_count, "need at least one login");
  world.server.replay_cache().set_mode(ReplayMode::full_history);
  world.server.replay_cache().clear();
  const Digest user_token = world.server.lookup_token(world.user_id);
  CacheCostReport report;
  report.rows.reserve(total_logins);
  for (std::size_t i = 1; i <= total_logins; ++i) {
    SessionOutcome outcome = run_session(world, world.server.server_id(), clock, rng);
    if (outcome.stage != Stage::fully_authenticated) ++report.failed_logins;
    report.rows.push_back(CacheCostRow{i, world.server.replay_cache().history_size(user_token),
                                       world.server.last_replay_check()});
  }
  report.history_size = world.server.replay_cache().history_size(user_token);
  return report;
}

}  // namespace ksauth
