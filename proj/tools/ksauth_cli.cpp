#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ksauth/ksauth.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> policy;
  std::optional<bool> id_s_known;
  std::optional<std::string> out;
  std::optional<unsigned> prime_bits;
  std::optional<std::size_t> digest_width;
  std::optional<std::size_t> id_width;
  std::optional<ksauth::Timestamp> delta_t;
  std::optional<std::size_t> sessions;
  std::optional<std::size_t> replay_from;
  std::optional<std::string> params;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "JSON config file (keys are ScenarioConfig field names)");
    cmd.add_option("--seed", seed, "RNG seed");
    cmd.add_option("--trials", trials, "number of trials");
    cmd.add_option("--policy", policy, "replay policy: none | full_history");
    cmd.add_option("--id-s-known", id_s_known, "leak the server identity to the card (true/false)");
    cmd.add_option("--out", out, "output directory");
    cmd.add_option("--prime-bits", prime_bits, "bit length of p and q");
    cmd.add_option("--digest-width", digest_width, "hash output width in bytes");
    cmd.add_option("--id-width", id_width, "identity width in bytes");
    cmd.add_option("--delta-t", delta_t, "freshness window in seconds");
    cmd.add_option("--sessions", sessions, "replay: recorded sessions m");
    cmd.add_option("--replay-from", replay_from, "replay: session k to re-inject (1-based)");
    cmd.add_option("--params", params, "directory with params.pub / params.sec");
  }

  // File values first, flags on top.
  [[nodiscard]] ksauth::ScenarioConfig resolve() const {
    ksauth::ScenarioConfig c;
    if (config) c = ksauth::load_config(*config, c);
    if (seed) c.seed = *seed;
    if (trials) c.trials = *trials;
    if (policy) {
      auto mode = ksauth::parse_replay_mode(*policy);
      if (!mode) throw ksauth::Error(ksauth::ErrorCode::config_invalid, "unknown policy '" + *policy + "'");
      c.replay_policy = *mode;
    }
    if (id_s_known) c.id_s_known = *id_s_known;
    if (out) c.output_path = *out;
    if (prime_bits) c.prime_bits = *prime_bits;
    if (digest_width) c.digest_width = *digest_width;
    if (id_width) c.id_width = *id_width;
    if (delta_t) c.delta_t = *delta_t;
    if (sessions) c.sessions = *sessions;
    if (replay_from) c.replay_from = *replay_from;
    if (params) c.params_path = *params;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smart-card remote user authentication: protocol simulator and attack harness"};
  app.require_subcommand(1);

  Overrides keygen_flags;
  auto* keygen = app.add_subcommand("keygen", "generate server parameters into --out");
  keygen_flags.attach(*keygen);

  std::string reg_params;
  std::string reg_db = "users.ksdb";
  std::string reg_card = "card.kssc";
  std::string reg_id;
  std::string reg_password;
  ksauth::Timestamp reg_time = 1;
  std::uint64_t reg_seed = 1;
  auto* reg = app.add_subcommand("register", "register a user and issue a card");
  reg->add_option("--params", reg_params, "directory with params.pub / params.sec")->required();
  reg->add_option("--db", reg_db, "user database file (created if missing)");
  reg->add_option("--card", reg_card, "output card file");
  reg->add_option("--id", reg_id, "user identity")->required();
  reg->add_option("--password", reg_password, "user password")->required();
  reg->add_option("--time", reg_time, "registration time T_R");
  reg->add_option("--seed", reg_seed, "RNG seed for the card's random number b");

  Overrides run_flags;
  std::string scenario_positional;
  std::string scenario_flag;
  auto* run = app.add_subcommand("run", "run a scenario: honest | faulty-login | replay | cache-bench");
  run->add_option("name", scenario_positional, "scenario name");
  run->add_option("--scenario", scenario_flag, "scenario name");
  run_flags.attach(*run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (keygen->parsed()) {
      ksauth::ScenarioConfig config = keygen_flags.resolve();
      ksauth::ServerKeys keys = ksauth::cmd_keygen(config, config.output_path);
      std::cout << "n=" << ksauth::to_hex(keys.params.pub.n) << "\n"
                << "g=" << ksauth::to_hex(keys.params.pub.g) << "\n"
                << "y=" << ksauth::to_hex(keys.params.pub.y) << "\n";
      return EXIT_SUCCESS;
    }
    if (reg->parsed()) {
      ksauth::SmartCard card =
          ksauth::cmd_register(reg_params, reg_db, reg_card, reg_id, reg_password, reg_time, reg_seed);
      std::cout << "C_in=" << ksauth::to_hex(card.c_in) << "\n"
                << "B1=" << ksauth::to_hex(card.b1) << "\n";
      return EXIT_SUCCESS;
    }
    std::string scenario = scenario_flag.empty() ? scenario_positional : scenario_flag;
    if (scenario.empty()) {
      std::cerr << "run: a scenario name is required\n";
      return 2;
    }
    ksauth::ScenarioConfig config = run_flags.resolve();
    ksauth::ScenarioResult result = ksauth::run_scenario(scenario, config);
    ksauth::write_scenario_outputs(result, config.output_path);
    std::size_t matched = 0;
    for (const auto& line : result.report) matched += line.expected;
    std::cout << scenario << ": " << matched << "/" << result.report.size()
              << " trials matched the expected outcome; report in " << config.output_path << "\n";
    return result.expectation_met ? EXIT_SUCCESS : EXIT_FAILURE;
  } catch (const ksauth::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
