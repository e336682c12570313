#pragma once

#include <cstdint>
#include <variant>

#include "ksauth/bigint.hpp"
#include "ksauth/hash.hpp"
#include "ksauth/identity.hpp"
#include "ksauth/scheme.hpp"

namespace ksauth {

enum class MessageKind : std::uint8_t {
  login_request = 0x01,
  server_reply = 0x02,
  auth_message = 0x03,
  registration_request = 0x04,
};

constexpr std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::login_request: return "login_request";
    case MessageKind::server_reply: return "server_reply";
    case MessageKind::auth_message: return "auth_message";
    case MessageKind::registration_request: return "registration_request";
  }
  return "unknown";
}

// <ID_i, h(b xor PWD_i)>
struct RegistrationRequest {
  Identity id;
  Digest blinded_password;
  friend bool operator==(const RegistrationRequest&, const RegistrationRequest&) = default;
};

// <B2, M, C>
struct LoginRequest {
  BigInt b2;
  Digest m;
  Bytes c;
  friend bool operator==(const LoginRequest&, const LoginRequest&) = default;
};

// X = <h(C1), r, T_s>
struct ServerReply {
  Digest h_c1;
  BigInt r;
  Timestamp t_s = 0;
  friend bool operator==(const ServerReply&, const ServerReply&) = default;
};

// Z = <M1, T>
struct AuthMessage {
  BigInt m1;
  Timestamp t = 0;
  friend bool operator==(const AuthMessage&, const AuthMessage&) = default;
};

using Message = std::variant<LoginRequest, ServerReply, AuthMessage, RegistrationRequest>;

inline MessageKind kind_of(const Message& message) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LoginRequest>) return MessageKind::login_request;
        if constexpr (std::is_same_v<T, ServerReply>) return MessageKind::server_reply;
        if constexpr (std::is_same_v<T, AuthMessage>) return MessageKind::auth_message;
        if constexpr (std::is_same_v<T, RegistrationRequest>) return MessageKind::registration_request;
      },
      message);
}

// Length-prefixed field writer/reader shared by messages and on-disk files.
class FieldWriter {
 public:
  void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }

  void field(ByteView value) {
    if (value.size() > UINT32_MAX) throw Error(ErrorCode::invalid_argument, "field too long");
    raw(encode_u32(static_cast<std::uint32_t>(value.size())));
    raw(value);
  }
  void field(const BigInt& value) { field(encode_minimal(value)); }
  void field_u64(std::uint64_t value) { field(encode_u64(value)); }

  [[nodiscard]] Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class FieldReader {
 public:
  FieldReader(ByteView data, ErrorCode on_error) : data_(data), error_(on_error) {}

  ByteView raw(std::size_t count) {
    if (data_.size() - pos_ < count) fail("truncated input");
    ByteView out = data_.subspan(pos_, count);
    pos_ += count;
    return out;
  }

  std::uint32_t u32() { return static_cast<std::uint32_t>(decode_u64(raw(4))); }
  std::uint64_t u64() { return decode_u64(raw(8)); }

  ByteView field() { return raw(u32()); }

  // Canonical only: no leading zero byte.
  BigInt field_bigint() {
    ByteView bytes = field();
    if (!bytes.empty() && bytes[0] == 0) fail("non-canonical integer encoding");
    return decode(bytes);
  }

  std::uint64_t field_u64() {
    ByteView bytes = field();
    if (bytes.size() != 8) fail("timestamp field must be 8 bytes");
    return decode_u64(bytes);
  }

  [[nodiscard]] bool done() const { return pos_ == data_.size(); }

  void expect_done() {
    if (!done()) fail("trailing bytes");
  }

  [[noreturn]] void fail(const std::string& why) const { throw Error(error_, why); }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
  ErrorCode error_;
};

// Tag byte, then every field as a 4-byte big-endian length and its
// big-endian value, in declaration order.
inline Bytes serialize_message(const Message& message) {
  FieldWriter w;
  const std::uint8_t tag = static_cast<std::uint8_t>(kind_of(message));
  w.raw(ByteView(&tag, 1));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LoginRequest>) {
          w.field(m.b2);
          w.field(m.m.bytes);
          w.field(m.c);
        } else if constexpr (std::is_same_v<T, ServerReply>) {
          w.field(m.h_c1.bytes);
          w.field(m.r);
          w.field_u64(m.t_s);
        } else if constexpr (std::is_same_v<T, AuthMessage>) {
          w.field(m.m1);
          w.field_u64(m.t);
        } else {
          w.field(m.id.bytes());
          w.field(m.blinded_password.bytes);
        }
      },
      message);
  return w.take();
}

inline Message deserialize_message(ByteView bytes) {
  FieldReader r(bytes, ErrorCode::malformed_message);
  auto digest = [&r] {
    ByteView raw = r.field();
    if (raw.empty()) r.fail("empty digest");
    return Digest{Bytes(raw.begin(), raw.end())};
  };
  const std::uint8_t tag = r.raw(1)[0];
  Message out;
  switch (static_cast<MessageKind>(tag)) {
    case MessageKind::login_request: {
      LoginRequest m;
      m.b2 = r.field_bigint();
      m.m = digest();
      ByteView c = r.field();
      m.c.assign(c.begin(), c.end());
      out = std::move(m);
      break;
    }
    case MessageKind::server_reply: {
      ServerReply m;
      m.h_c1 = digest();
      m.r = r.field_bigint();
      m.t_s = r.field_u64();
      out = std::move(m);
      break;
    }
    case MessageKind::auth_message: {
      AuthMessage m;
      m.m1 = r.field_bigint();
      m.t = r.field_u64();
      out = std::move(m);
      break;
    }
    case MessageKind::registration_request: {
      RegistrationRequest m;
      auto id = Identity::parse_padded(r.field());
      if (!id) r.fail("malformed identity");
      m.id = std::move(*id);
      m.blinded_password = digest();
      out = std::move(m);
      break;
    }
    default:
      r.fail("unknown message tag " + std::to_string(tag));
  }
  r.expect_done();
  return out;
}

inline Message deserialize_message(MessageKind expected, ByteView bytes) {
  Message message = deserialize_message(bytes);
  if (kind_of(message) != expected) {
    throw Error(ErrorCode::malformed_message,
                "expected " + std::string(to_string(expected)) + ", got " +
                    std::string(to_string(kind_of(message))));
  }
  return message;
}

// Deserializes and checks the tag matches the expected kind.
template <typename T>
T deserialize_as(ByteView bytes) {
  Message message = deserialize_message(bytes);
  if (auto* typed = std::get_if<T>(&message)) return std::move(*typed);
  throw Error(ErrorCode::malformed_message, "unexpected message kind");
}

}  // namespace ksauth
