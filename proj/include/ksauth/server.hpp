#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string_view>
#include <utility>

#include "ksauth/messages.hpp"
#include "ksauth/params.hpp"
#include "ksauth/scheme.hpp"
#include "ksauth/smartcard.hpp"

namespace ksauth {

inline constexpr Timestamp kDefaultDeltaT = 60;

struct UserRecord {
  Digest lookup_token;
  Bytes ciphertext;
  Timestamp created_at = 0;
  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

namespace detail {

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::file_read_error, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::file_write_error, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::file_write_error, "short write to " + path.string());
}

inline void expect_magic(FieldReader& r, std::string_view magic) {
  ByteView got = r.raw(magic.size());
  if (!std::equal(got.begin(), got.end(), magic.begin())) r.fail("bad magic header");
}

inline ByteView as_bytes(std::string_view s) {
  return ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

}  // namespace detail

// Authenticated encryption of (ID_i, T_R) for the user table. Keys come
// from h(d || label); the keystream is h(enc_key || nonce || counter) and
// the tag h(mac_key || nonce || ciphertext). The record's lookup token is
// the nonce, so no two records share a keystream.
class RecordCipher {
 public:
  RecordCipher(const BigInt& d, const PublicParams& pub) : width_(pub.digest_width) {
    const Bytes key_material = encode_fixed(d, pub.common_width());
    enc_key_ = hash_digest(concat(key_material, detail::as_bytes("ksauth/record-enc")), width_).bytes;
    mac_key_ = hash_digest(concat(key_material, detail::as_bytes("ksauth/record-mac")), width_).bytes;
  }

  [[nodiscard]] Bytes seal(const Identity& id, Timestamp registered_at, const Digest& nonce) const {
    Bytes body = apply_keystream(concat(id.bytes(), encode_u64(registered_at)), nonce);
    Digest tag = hash_digest(concat(mac_key_, nonce.bytes, body), width_);
    return concat(body, tag.bytes);
  }

  [[nodiscard]] std::optional<std::pair<Identity, Timestamp>> open(ByteView sealed,
                                                                   const Digest& nonce) const {
    if (sealed.size() < width_ + 8 + 1) return std::nullopt;
    ByteView body = sealed.first(sealed.size() - width_);
    ByteView tag = sealed.last(width_);
    Digest expected = hash_digest(concat(mac_key_, nonce.bytes, body), width_);
    if (!std::equal(tag.begin(), tag.end(), expected.bytes.begin())) return std::nullopt;
    Bytes plain = apply_keystream(Bytes(body.begin(), body.end()), nonce);
    ByteView view(plain);
    auto id = Identity::parse_padded(view.first(plain.size() - 8));
    if (!id) return std::nullopt;
    return std::make_pair(std::move(*id), decode_u64(view.last(8)));
  }

 private:
  [[nodiscard]] Bytes apply_keystream(Bytes data, const Digest& nonce) const {
    std::size_t offset = 0;
    for (std::uint32_t counter = 0; offset < data.size(); ++counter) {
      Digest block = hash_digest(concat(enc_key_, nonce.bytes, encode_u32(counter)), width_);
      for (std::size_t i = 0; i < block.size() && offset < data.size(); ++i, ++offset) {
        data[offset] ^= block.bytes[i];
      }
    }
    return data;
  }

  std::size_t width_;
  Bytes enc_key_;
  Bytes mac_key_;
};

// User table indexed by lookup token h(d || ID).
class UserDatabase {
 public:
  static constexpr std::string_view kMagic = "KSDB1";

  void store(UserRecord record) {
    auto key = record.lookup_token;
    if (!records_.emplace(std::move(key), std::move(record)).second) {
      throw Error(ErrorCode::duplicate_identity, "lookup token already registered");
    }
  }

  [[nodiscard]] const UserRecord* find(const Digest& token) const {
    auto it = records_.find(token);
    return it == records_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] bool contains(const Digest& token) const { return records_.contains(token); }
  [[nodiscard]] std::size_t size() const { return records_.size(); }

  [[nodiscard]] Bytes serialize() const {
    FieldWriter w;
    w.raw(detail::as_bytes(kMagic));
    for (const auto& [token, record] : records_) {
      w.raw(token.bytes);
      w.field(record.ciphertext);
      w.raw(encode_u64(record.created_at));
    }
    return w.take();
  }

  static UserDatabase deserialize(ByteView bytes, std::size_t digest_width) {
    FieldReader r(bytes, ErrorCode::malformed_file);
    detail::expect_magic(r, kMagic);
    UserDatabase db;
    while (!r.done()) {
      UserRecord record;
      ByteView token = r.raw(digest_width);
      record.lookup_token.bytes.assign(token.begin(), token.end());
      ByteView ct = r.field();
      record.ciphertext.assign(ct.begin(), ct.end());
      record.created_at = r.u64();
      if (db.contains(record.lookup_token)) r.fail("duplicate token in database file");
      db.store(std::move(record));
    }
    return db;
  }

  void save(const std::filesystem::path& path) const { detail::write_file(path, serialize()); }

  static UserDatabase load(const std::filesystem::path& path, std::size_t digest_width) {
    return deserialize(detail::read_file(path), digest_width);
  }

  friend bool operator==(const UserDatabase&, const UserDatabase&) = default;

 private:
  std::map<Digest, UserRecord> records_;
};

enum class ReplayMode { none, full_history };

constexpr std::string_view to_string(ReplayMode mode) {
  return mode == ReplayMode::none ? "none" : "full_history";
}

inline std::optional<ReplayMode> parse_replay_mode(std::string_view text) {
  if (text == "none") return ReplayMode::none;
  if (text == "full_history" || text == "full-history") return ReplayMode::full_history;
  return std::nullopt;
}

// The "remember every login request" countermeasure. Entries are never
// evicted and a lookup scans the user's whole history, comparing message
// digests one by one.
class ReplayCache {
 public:
  static constexpr std::string_view kMagic = "KSRH1";

  explicit ReplayCache(ReplayMode mode = ReplayMode::none) : mode_(mode) {}

  [[nodiscard]] ReplayMode mode() const { return mode_; }
  void set_mode(ReplayMode mode) { mode_ = mode; }
  void clear() { history_.clear(); }

  [[nodiscard]] bool seen(const Digest& user_token, const Digest& request_digest) const {
    auto it = history_.find(user_token);
    if (it == history_.end()) return false;
    return std::find(it->second.begin(), it->second.end(), request_digest) != it->second.end();
  }

  void record(const Digest& user_token, Digest request_digest) {
    history_[user_token].push_back(std::move(request_digest));
  }

  [[nodiscard]] std::size_t history_size(const Digest& user_token) const {
    auto it = history_.find(user_token);
    return it == history_.end() ? 0 : it->second.size();
  }

  [[nodiscard]] std::size_t total_size() const {
    std::size_t total = 0;
    for (const auto& [token, entries] : history_) total += entries.size();
    return total;
  }

  // Magic, then per user: token, 4-byte entry count, the entry digests.
  [[nodiscard]] Bytes serialize() const {
    FieldWriter w;
    w.raw(detail::as_bytes(kMagic));
    for (const auto& [token, entries] : history_) {
      w.raw(token.bytes);
      w.raw(encode_u32(static_cast<std::uint32_t>(entries.size())));
      for (const auto& entry : entries) w.raw(entry.bytes);
    }
    return w.take();
  }

  static ReplayCache deserialize(ByteView bytes, std::size_t digest_width, ReplayMode mode) {
    FieldReader r(bytes, ErrorCode::malformed_file);
    detail::expect_magic(r, kMagic);
    ReplayCache cache(mode);
    while (!r.done()) {
      ByteView token = r.raw(digest_width);
      Digest key{Bytes(token.begin(), token.end())};
      const std::uint32_t count = r.u32();
      auto& entries = cache.history_[key];
      for (std::uint32_t i = 0; i < count; ++i) {
        ByteView entry = r.raw(digest_width);
        entries.push_back(Digest{Bytes(entry.begin(), entry.end())});
      }
    }
    return cache;
  }

  void save(const std::filesystem::path& path) const { detail::write_file(path, serialize()); }

  static ReplayCache load(const std::filesystem::path& path, std::size_t digest_width,
                          ReplayMode mode) {
    return deserialize(detail::read_file(path), digest_width, mode);
  }

  friend bool operator==(const ReplayCache&, const ReplayCache&) = default;

 private:
  ReplayMode mode_;
  std::map<Digest, std::vector<Digest>> history_;
};

struct ServerSession {
  Identity id;
  BigInt c_star;
  BigInt c1;
  BigInt b3_prime;
  BigInt r;
  BigInt t;
  Timestamp t_s = 0;
};

struct LoginResponse {
  ServerReply reply;
  ServerSession session;
};

// Server side of registration, login steps 3-5 and the authentication phase.
// Not thread-safe: handlers mutate the database and replay cache and must be
// called by one writer at a time.
class AuthServer {
 public:
  AuthServer(PublicParams pub, ServerSecret secret, Identity server_id,
             ReplayMode mode = ReplayMode::none, Timestamp delta_t = kDefaultDeltaT)
      : pub_(std::move(pub)),
        secret_(std::move(secret)),
        server_id_(std::move(server_id)),
        cipher_(secret_.d, pub_),
        replay_(mode),
        delta_t_(delta_t) {
    if (server_id_.width() != pub_.id_width) {
      throw Error(ErrorCode::invalid_identity, "server identity width does not match id_width");
    }
  }

  [[nodiscard]] const PublicParams& public_params() const { return pub_; }
  [[nodiscard]] const ServerSecret& secret() const { return secret_; }
  [[nodiscard]] const Identity& server_id() const { return server_id_; }
  [[nodiscard]] Timestamp delta_t() const { return delta_t_; }
  void set_delta_t(Timestamp delta_t) { delta_t_ = delta_t; }

  [[nodiscard]] UserDatabase& database() { return db_; }
  [[nodiscard]] const UserDatabase& database() const { return db_; }
  void set_database(UserDatabase db) { db_ = std::move(db); }
  [[nodiscard]] ReplayCache& replay_cache() { return replay_; }
  [[nodiscard]] const ReplayCache& replay_cache() const { return replay_; }

  // Wall time spent in the most recent replay-cache lookup.
  [[nodiscard]] std::chrono::nanoseconds last_replay_check() const { return last_check_; }

  [[nodiscard]] Digest lookup_token(const Identity& id) const {
    return hash_digest(concat(encode_fixed(secret_.d, pub_.common_width()), id.bytes()),
                       pub_.digest_width);
  }

  [[nodiscard]] std::optional<Timestamp> registration_time(const Identity& id) const {
    const Digest token = lookup_token(id);
    const UserRecord* record = db_.find(token);
    if (record == nullptr) return std::nullopt;
    auto opened = cipher_.open(record->ciphertext, token);
    if (!opened || opened->first != id) {
      throw Error(ErrorCode::corrupt_record, "user record failed authentication");
    }
    return opened->second;
  }

  // C* = y^h(d || T_R || ID) mod n
  [[nodiscard]] BigInt unblinded_credential(const Identity& id, Timestamp registered_at) const {
    return mod_exp(pub_.y, credential_exponent(secret_.d, registered_at, id, pub_), pub_.n);
  }

  CardPayload handle_registration(const RegistrationRequest& request, Timestamp now) {
    if (request.id.width() != pub_.id_width) {
      throw Error(ErrorCode::invalid_identity, "identity width does not match id_width");
    }
    if (request.blinded_password.size() != pub_.digest_width) {
      throw Error(ErrorCode::width_mismatch, "registration digest has wrong width");
    }
    const Digest token = lookup_token(request.id);
    if (db_.contains(token)) throw Error(ErrorCode::duplicate_identity, "identity already registered");

    const Timestamp registered_at = now;
    const BigInt blinded = digest_value(request.blinded_password);
    CardPayload payload;
    payload.pub = pub_;
    payload.b1 = password_verifier(request.id, request.blinded_password, pub_);
    payload.c_in = mod_exp(
        pub_.y, credential_exponent(secret_.d, registered_at, request.id, pub_) + blinded, pub_.n);
    db_.store(UserRecord{token, cipher_.seal(request.id, registered_at, token), now});
    return payload;
  }

  // Login steps 3-5.
  LoginResponse handle_login_request(const LoginRequest& request, Timestamp now, Rng& rng) {
    if (request.b2 <= 0 || request.b2 >= pub_.n || request.m.size() != pub_.digest_width ||
        request.c.size() != pub_.digest_width) {
      throw Error(ErrorCode::malformed_message, "login request field out of range");
    }
    const BigInt b3_prime = mod_exp(request.b2, secret_.d, pub_.n);
    const Bytes padded_id = xor_fixed(request.c, identity_mask(request.b2, b3_prime, pub_).bytes);
    auto id = decode_identity(padded_id, pub_.id_width);
    if (!id) throw Error(ErrorCode::unknown_user, "derived identity is malformed");
    const Digest token = lookup_token(*id);

    std::optional<Digest> request_digest;
    if (replay_.mode() == ReplayMode::full_history) {
      request_digest = hash_digest(serialize_message(request), pub_.digest_width);
      const auto started = std::chrono::steady_clock::now();
      const bool replayed = replay_.seen(token, *request_digest);
      last_check_ = std::chrono::steady_clock::now() - started;
      if (replayed) throw Error(ErrorCode::replay_detected, "login request seen before");
    }

    auto registered_at = registration_time(*id);
    if (!registered_at) throw Error(ErrorCode::unknown_user, "no such user");

    ServerSession session;
    session.id = std::move(*id);
    session.b3_prime = b3_prime;
    session.c_star = unblinded_credential(session.id, *registered_at);
    if (login_authenticator(session.c_star, request.c, pub_) != request.m) {
      throw Error(ErrorCode::bad_authenticator, "M* != M");
    }

    session.t_s = now;
    session.r = random_in_range(1, pub_.n - 1, rng);
    session.t = time_binding(session.t_s, session.id, server_id_, b3_prime, pub_);
    session.c1 = mod_exp(session.c_star, session.r + session.t, pub_.n);

    if (request_digest) replay_.record(token, std::move(*request_digest));

    ServerReply reply{reply_digest(session.c1, pub_), session.r, session.t_s};
    return LoginResponse{std::move(reply), std::move(session)};
  }

  // Authentication phase; returns the server's session key.
  [[nodiscard]] Digest handle_auth_message(const ServerSession& session, const AuthMessage& z,
                                           Timestamp now) const {
    if (now > z.t && now - z.t > delta_t_) {
      throw Error(ErrorCode::stale_auth_message, "T_s - T exceeds delta T");
    }
    if (auth_value(session.c1, session.id, z.t, pub_) != z.m1) {
      throw Error(ErrorCode::auth_failed, "M1 != M2");
    }
    return session_key(session.id, server_id_, session.c1, pub_);
  }

 private:
  PublicParams pub_;
  ServerSecret secret_;
  Identity server_id_;
  RecordCipher cipher_;
  UserDatabase db_;
  ReplayCache replay_;
  Timestamp delta_t_;
  std::chrono::nanoseconds last_check_{0};
};

}  // namespace ksauth
