#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksauth/harness.hpp"
#include "ksauth/params.hpp"
#include "ksauth/server.hpp"

namespace ksauth {

struct ScenarioConfig {
  unsigned prime_bits = 256;
  std::size_t digest_width = kDefaultDigestWidth;
  std::size_t id_width = kDefaultIdWidth;
  Timestamp delta_t = kDefaultDeltaT;
  std::uint64_t seed = 1;
  std::size_t trials = 100;
  ReplayMode replay_policy = ReplayMode::none;
  bool id_s_known = true;
  std::string output_path = "ksauth-out";
  // Replay scenario: sessions recorded (m) and the one re-injected (k).
  std::size_t sessions = 5;
  std::size_t replay_from = 1;
  // Directory holding params.pub / params.sec; generated from the seed when empty.
  std::string params_path;

  [[nodiscard]] Widths widths() const { return Widths{digest_width, id_width}; }

  void validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::config_invalid, why); };
    if (prime_bits < kMinPrimeBits) fail("prime_bits must be at least " + std::to_string(kMinPrimeBits));
    if (digest_width == 0 || id_width == 0) fail("widths must be positive");
    if (id_width > digest_width) fail("id_width must not exceed digest_width");
    if (trials == 0) fail("trials must be at least 1");
    if (sessions == 0) fail("sessions must be at least 1");
    if (replay_from == 0 || replay_from > sessions) fail("replay_from must lie in [1, sessions]");
  }
};

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{{"prime_bits", c.prime_bits},
                     {"digest_width", c.digest_width},
                     {"id_width", c.id_width},
                     {"delta_t", c.delta_t},
                     {"seed", c.seed},
                     {"trials", c.trials},
                     {"replay_policy", std::string(to_string(c.replay_policy))},
                     {"id_s_known", c.id_s_known},
                     {"output_path", c.output_path},
                     {"sessions", c.sessions},
                     {"replay_from", c.replay_from},
                     {"params_path", c.params_path}};
}

// Keys present in `j` override the matching fields of `base`; unknown keys
// are rejected.
inline ScenarioConfig merge_config(ScenarioConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::config_invalid, "config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "prime_bits") base.prime_bits = value.get<unsigned>();
      else if (key == "digest_width") base.digest_width = value.get<std::size_t>();
      else if (key == "id_width") base.id_width = value.get<std::size_t>();
      else if (key == "delta_t") base.delta_t = value.get<Timestamp>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "trials") base.trials = value.get<std::size_t>();
      else if (key == "replay_policy") {
        auto mode = parse_replay_mode(value.get<std::string>());
        if (!mode) throw Error(ErrorCode::config_invalid, "unknown replay_policy");
        base.replay_policy = *mode;
      } else if (key == "id_s_known") base.id_s_known = value.get<bool>();
      else if (key == "output_path") base.output_path = value.get<std::string>();
      else if (key == "sessions") base.sessions = value.get<std::size_t>();
      else if (key == "replay_from") base.replay_from = value.get<std::size_t>();
      else if (key == "params_path") base.params_path = value.get<std::string>();
      else throw Error(ErrorCode::config_invalid, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_invalid, e.what());
  }
  return base;
}

inline ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::file_read_error, "cannot open " + path.string());
  try {
    return merge_config(std::move(base), nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::config_invalid, e.what());
  }
}

// ---- parameter and card files ------------------------------------------

inline constexpr std::string_view kPublicParamsMagic = "KSPP1";
inline constexpr std::string_view kSecretParamsMagic = "KSSK1";
inline constexpr std::string_view kCardMagic = "KSSC1";

struct ServerKeys {
  SchemeParams params;
  Identity server_id;
};

namespace detail {

inline void write_public(FieldWriter& w, const PublicParams& pub) {
  w.field(pub.n);
  w.field(pub.g);
  w.field(pub.y);
  w.field(encode_u32(static_cast<std::uint32_t>(pub.modulus_width)));
  w.field(encode_u32(static_cast<std::uint32_t>(pub.digest_width)));
  w.field(encode_u32(static_cast<std::uint32_t>(pub.id_width)));
}

inline std::size_t read_width(FieldReader& r) {
  ByteView raw = r.field();
  if (raw.size() != 4) r.fail("width field must be 4 bytes");
  return static_cast<std::size_t>(decode_u64(raw));
}

inline PublicParams read_public(FieldReader& r) {
  PublicParams pub;
  pub.n = r.field_bigint();
  pub.g = r.field_bigint();
  pub.y = r.field_bigint();
  pub.modulus_width = read_width(r);
  pub.digest_width = read_width(r);
  pub.id_width = read_width(r);
  if (!public_params_valid(pub)) r.fail("public parameters violate invariants");
  return pub;
}

}  // namespace detail

inline Bytes serialize_public_params(const PublicParams& pub) {
  FieldWriter w;
  w.raw(detail::as_bytes(kPublicParamsMagic));
  detail::write_public(w, pub);
  return w.take();
}

inline PublicParams deserialize_public_params(ByteView bytes) {
  FieldReader r(bytes, ErrorCode::malformed_file);
  detail::expect_magic(r, kPublicParamsMagic);
  PublicParams pub = detail::read_public(r);
  r.expect_done();
  return pub;
}

inline Bytes serialize_secret(const ServerSecret& s, const Identity& server_id) {
  FieldWriter w;
  w.raw(detail::as_bytes(kSecretParamsMagic));
  w.field(s.p);
  w.field(s.q);
  w.field(s.phi_n);
  w.field(s.e);
  w.field(s.d);
  w.field(server_id.bytes());
  return w.take();
}

inline std::pair<ServerSecret, Identity> deserialize_secret(ByteView bytes) {
  FieldReader r(bytes, ErrorCode::malformed_file);
  detail::expect_magic(r, kSecretParamsMagic);
  ServerSecret s;
  s.p = r.field_bigint();
  s.q = r.field_bigint();
  s.phi_n = r.field_bigint();
  s.e = r.field_bigint();
  s.d = r.field_bigint();
  auto id = Identity::parse_padded(r.field());
  if (!id) r.fail("malformed server identity");
  r.expect_done();
  return {s, std::move(*id)};
}

inline void save_server_keys(const std::filesystem::path& dir, const ServerKeys& keys) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::file_write_error, "cannot create " + dir.string());
  detail::write_file(dir / "params.pub", serialize_public_params(keys.params.pub));
  detail::write_file(dir / "params.sec", serialize_secret(keys.params.secret, keys.server_id));
}

inline ServerKeys load_server_keys(const std::filesystem::path& dir) {
  ServerKeys keys;
  keys.params.pub = deserialize_public_params(detail::read_file(dir / "params.pub"));
  auto [secret, id] = deserialize_secret(detail::read_file(dir / "params.sec"));
  keys.params.secret = std::move(secret);
  keys.server_id = std::move(id);
  if (keys.server_id.width() != keys.params.pub.id_width) {
    throw Error(ErrorCode::malformed_file, "server identity width does not match id_width");
  }
  return keys;
}

inline Bytes serialize_card(const SmartCard& card) {
  FieldWriter w;
  w.raw(detail::as_bytes(kCardMagic));
  detail::write_public(w, card.pub);
  w.field(card.c_in);
  w.field(card.b1);
  w.field(card.b);
  return w.take();
}

inline SmartCard deserialize_card(ByteView bytes) {
  FieldReader r(bytes, ErrorCode::malformed_file);
  detail::expect_magic(r, kCardMagic);
  CardPayload payload;
  payload.pub = detail::read_public(r);
  payload.c_in = r.field_bigint();
  payload.b1 = r.field_bigint();
  ByteView b = r.field();
  r.expect_done();
  return personalize_card(payload, Bytes(b.begin(), b.end()));
}

// ---- commands ------------------------------------------------------------

inline ServerKeys generate_server_keys(const ScenarioConfig& config, Rng& rng) {
  ServerKeys keys;
  keys.params = generate_params(config.prime_bits, rng, config.widths());
  keys.server_id = Identity::random(config.id_width, rng);
  return keys;
}

inline ServerKeys cmd_keygen(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  Rng rng(config.seed);
  ServerKeys keys = generate_server_keys(config, rng);
  save_server_keys(out_dir, keys);
  return keys;
}

// Registers `name` against the stored server state. The database file is
// created when missing; the personalized card is written to `card_path`.
inline SmartCard cmd_register(const std::filesystem::path& params_dir, const std::filesystem::path& db_path,
                              const std::filesystem::path& card_path, std::string_view name,
                              std::string_view password, Timestamp now, std::uint64_t seed) {
  ServerKeys keys = load_server_keys(params_dir);
  AuthServer server(keys.params.pub, keys.params.secret, keys.server_id);
  if (std::filesystem::exists(db_path)) {
    server.set_database(UserDatabase::load(db_path, keys.params.pub.digest_width));
  }
  Rng rng(seed);
  Identity id = Identity::from_string(name, keys.params.pub.id_width);
  RegistrationBundle bundle = create_registration_request(id, password, rng, keys.params.pub.digest_width);
  CardPayload payload = server.handle_registration(bundle.request, now);
  SmartCard card = personalize_card(payload, std::move(bundle.b));
  server.database().save(db_path);
  detail::write_file(card_path, serialize_card(card));
  return card;
}

inline constexpr std::array<std::string_view, 4> kScenarioNames = {"honest", "faulty-login", "replay",
                                                                   "cache-bench"};

struct ReportLine {
  std::string scenario;
  std::size_t trial = 0;
  std::string outcome;
  std::size_t history_size = 0;
  std::int64_t wall_time_ns = 0;
  std::optional<bool> keys_match;
  bool expected = true;
};

inline nlohmann::json to_json(const ReportLine& line) {
  nlohmann::json j{{"scenario", line.scenario},
                   {"trial", line.trial},
                   {"outcome", line.outcome},
                   {"history_size", line.history_size},
                   {"wall_time_ns", line.wall_time_ns},
                   {"expected", line.expected}};
  if (line.keys_match) j["keys_match"] = *line.keys_match;
  return j;
}

inline nlohmann::json to_json(const TranscriptLine& line) {
  return nlohmann::json{{"time", line.time}, {"actor", line.actor}, {"event", line.event}, {"fields", line.fields}};
}

struct ScenarioResult {
  std::string scenario;
  bool expectation_met = true;
  std::vector<ReportLine> report;
  Transcript transcript;
};

// Runs a named scenario for config.trials trials. expectation_met holds iff
// every trial produced the scenario's declared outcome.
inline ScenarioResult run_scenario(std::string_view name, const ScenarioConfig& config) {
  if (std::find(kScenarioNames.begin(), kScenarioNames.end(), name) == kScenarioNames.end()) {
    throw Error(ErrorCode::unknown_scenario, "unknown scenario '" + std::string(name) + "'");
  }
  config.validate();

  ScenarioResult result;
  result.scenario = std::string(name);
  Rng rng(config.seed);
  Clock clock;
  ServerKeys keys = config.params_path.empty() ? generate_server_keys(config, rng)
                                               : load_server_keys(config.params_path);
  WorldOptions options;
  options.delta_t = config.delta_t;
  World world = make_world(keys.params, keys.server_id, clock, rng, options, &result.transcript);

  auto push = [&result](ReportLine line) {
    result.expectation_met = result.expectation_met && line.expected;
    result.report.push_back(std::move(line));
  };

  if (name == "honest" || name == "faulty-login") {
    const bool faulty = name == "faulty-login";
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
      const auto started = std::chrono::steady_clock::now();
      SessionOutcome outcome = run_honest_session(world, config.id_s_known, clock, rng);
      ReportLine line;
      line.scenario = result.scenario;
      line.trial = trial;
      line.outcome = std::string(to_string(outcome.stage));
      line.wall_time_ns = (std::chrono::steady_clock::now() - started).count();
      line.keys_match = outcome.keys_match;
      const bool completed = outcome.stage == Stage::fully_authenticated && outcome.keys_match;
      if (faulty && !config.id_s_known) {
        line.expected = outcome.stage == Stage::server_verification_failed;
      } else {
        line.expected = completed;
      }
      push(std::move(line));
    }
  } else if (name == "replay") {
    ReplayAttackConfig attack;
    attack.sessions_to_record = config.sessions;
    attack.replay_from = config.replay_from;
    attack.policy = config.replay_policy;
    attack.trials = config.trials;
    AttackReport report = run_replay_attack(world, attack, clock, rng);
    const Stage expected = config.replay_policy == ReplayMode::none ? Stage::reply_emitted
                                                                    : Stage::rejected_at_replay_cache;
    for (const auto& o : report.outcomes) {
      push(ReportLine{result.scenario, o.trial, std::string(to_string(o.stage)), o.history_size,
                      o.wall_time.count(), std::nullopt, o.stage == expected});
    }
  } else {
    CacheCostReport report = measure_replay_cache_cost(world, config.trials, clock, rng);
    for (const auto& row : report.rows) {
      push(ReportLine{result.scenario, row.login, "recorded", row.history_size, row.check_time.count(),
                      std::nullopt, row.history_size == row.login});
    }
    if (report.failed_logins != 0 || report.history_size != config.trials) result.expectation_met = false;
  }
  return result;
}

inline std::string format_json_lines(const auto& lines) {
  std::string out;
  for (const auto& line : lines) {
    out += to_json(line).dump();
    out += '\n';
  }
  return out;
}

// Writes report.jsonl and transcript.jsonl under config.output_path.
inline void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::file_write_error, "cannot create " + out_dir.string());
  auto write_text = [](const std::filesystem::path& path, const std::string& text) {
    detail::write_file(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  };
  write_text(out_dir / "report.jsonl", format_json_lines(result.report));
  write_text(out_dir / "transcript.jsonl", format_json_lines(result.transcript));
}

}  // namespace ksauth
