#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ksauth {

enum class ErrorCode {
  invalid_argument,
  parameter_generation_failed,
  not_invertible,
  value_too_wide,
  width_mismatch,
  invalid_identity,
  empty_password,
  invalid_card_payload,
  wrong_credentials,
  stale_reply,
  server_verification_failed,
  duplicate_identity,
  replay_detected,
  unknown_user,
  bad_authenticator,
  stale_auth_message,
  auth_failed,
  corrupt_record,
  index_out_of_range,
  invalid_trial_count,
  malformed_message,
  malformed_file,
  unknown_scenario,
  config_invalid,
  file_write_error,
  file_read_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parameter_generation_failed: return "ParameterGenerationFailed";
    case ErrorCode::not_invertible: return "NotInvertible";
    case ErrorCode::value_too_wide: return "ValueTooWide";
    case ErrorCode::width_mismatch: return "WidthMismatch";
    case ErrorCode::invalid_identity: return "InvalidIdentity";
    case ErrorCode::empty_password: return "EmptyPassword";
    case ErrorCode::invalid_card_payload: return "InvalidCardPayload";
    case ErrorCode::wrong_credentials: return "WrongCredentials";
    case ErrorCode::stale_reply: return "StaleReply";
    case ErrorCode::server_verification_failed: return "ServerVerificationFailed";
    case ErrorCode::duplicate_identity: return "DuplicateIdentity";
    case ErrorCode::replay_detected: return "ReplayDetected";
    case ErrorCode::unknown_user: return "UnknownUser";
    case ErrorCode::bad_authenticator: return "BadAuthenticator";
    case ErrorCode::stale_auth_message: return "StaleAuthMessage";
    case ErrorCode::auth_failed: return "AuthFailed";
    case ErrorCode::corrupt_record: return "CorruptRecord";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::invalid_trial_count: return "InvalidTrialCount";
    case ErrorCode::malformed_message: return "MalformedMessage";
    case ErrorCode::malformed_file: return "MalformedFile";
    case ErrorCode::unknown_scenario: return "UnknownScenario";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::file_write_error: return "FileWriteError";
    case ErrorCode::file_read_error: return "FileReadError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above so
// callers (the harness in particular) can map rejections to protocol steps.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ksauth
