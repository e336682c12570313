#pragma once

#include <cstddef>
#include <cstdint>
#include <concepts>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ksauth/errors.hpp"

namespace ksauth {

using BigInt = boost::multiprecision::cpp_int;
using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Seeded source for every random draw in the library. mt19937_64 has a
// standardized output sequence, so runs reproduce across platforms.
using Rng = std::mt19937_64;

// Any engine producing full-range 64-bit words can stand in for Rng.
template <typename G>
concept WordGenerator = std::uniform_random_bit_generator<std::remove_cvref_t<G>> &&
                        std::remove_cvref_t<G>::min() == 0 &&
                        std::remove_cvref_t<G>::max() == UINT64_MAX;

inline std::size_t bit_length(const BigInt& value) {
  return value.is_zero() ? 0 : boost::multiprecision::msb(value) + 1;
}

inline std::size_t byte_length(const BigInt& value) { return (bit_length(value) + 7) / 8; }

// Shortest big-endian form; zero encodes as the empty sequence.
inline Bytes encode_minimal(const BigInt& value) {
  if (value < 0) throw Error(ErrorCode::invalid_argument, "negative value cannot be encoded");
  Bytes out;
  if (value.is_zero()) return out;
  out.reserve(byte_length(value));
  boost::multiprecision::export_bits(value, std::back_inserter(out), 8, true);
  return out;
}

// Big-endian, left zero-padded to exactly `width` bytes.
inline Bytes encode_fixed(const BigInt& value, std::size_t width) {
  Bytes minimal = encode_minimal(value);
  if (minimal.size() > width) {
    throw Error(ErrorCode::value_too_wide,
                std::to_string(minimal.size()) + " bytes do not fit in " + std::to_string(width));
  }
  Bytes out(width - minimal.size(), 0);
  out.insert(out.end(), minimal.begin(), minimal.end());
  return out;
}

inline BigInt decode(ByteView bytes) {
  BigInt out;
  if (bytes.empty()) return out;
  boost::multiprecision::import_bits(out, bytes.begin(), bytes.end(), 8, true);
  return out;
}

inline Bytes encode_u64(std::uint64_t value) {
  Bytes out(8);
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
  return out;
}

inline Bytes encode_u32(std::uint32_t value) {
  return {static_cast<std::uint8_t>(value >> 24), static_cast<std::uint8_t>(value >> 16),
          static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
}

inline std::uint64_t decode_u64(ByteView bytes) {
  std::uint64_t out = 0;
  for (auto b : bytes) out = (out << 8) | b;
  return out;
}

// Left-to-right square-and-multiply.
inline BigInt mod_exp(const BigInt& base, const BigInt& exponent, const BigInt& modulus) {
  if (modulus < 2) throw Error(ErrorCode::invalid_argument, "modulus must be at least 2");
  if (exponent < 0) throw Error(ErrorCode::invalid_argument, "negative exponent");
  BigInt b = base % modulus;
  if (b < 0) b += modulus;
  BigInt result = 1;
  BigInt tmp;
  for (std::size_t i = bit_length(exponent); i-- > 0;) {
    tmp = result * result;
    result = tmp % modulus;
    if (boost::multiprecision::bit_test(exponent, static_cast<unsigned>(i))) {
      tmp = result * b;
      result = tmp % modulus;
    }
  }
  return result;
}

inline BigInt gcd(BigInt a, BigInt b) {
  while (!b.is_zero()) {
    BigInt r = a % b;
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

// Extended Euclid; result lies in [1, modulus-1].
inline BigInt mod_inv(const BigInt& a, const BigInt& modulus) {
  if (modulus < 2) throw Error(ErrorCode::invalid_argument, "modulus must be at least 2");
  BigInt r0 = modulus;
  BigInt r1 = a % modulus;
  if (r1 < 0) r1 += modulus;
  BigInt s0 = 0;
  BigInt s1 = 1;
  while (!r1.is_zero()) {
    BigInt quotient = r0 / r1;
    BigInt r2 = r0 - quotient * r1;
    BigInt s2 = s0 - quotient * s1;
    r0 = std::move(r1);
    r1 = std::move(r2);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (r0 != 1) throw Error(ErrorCode::not_invertible, "gcd(a, modulus) != 1");
  BigInt inverse = s0 % modulus;
  if (inverse < 0) inverse += modulus;
  return inverse;
}

template <WordGenerator G>
Bytes random_bytes(std::size_t count, G& rng) {
  Bytes out;
  out.reserve(count);
  while (out.size() < count) {
    std::uint64_t word = rng();
    for (int i = 0; i < 8 && out.size() < count; ++i) {
      out.push_back(static_cast<std::uint8_t>(word >> 56));
      word <<= 8;
    }
  }
  return out;
}

// Uniform in [0, bound) by masked rejection sampling.
template <WordGenerator G>
BigInt random_below(const BigInt& bound, G& rng) {
  if (bound <= 0) throw Error(ErrorCode::invalid_argument, "empty sampling range");
  if (bound == 1) return 0;
  const std::size_t bits = bit_length(bound - 1);
  const std::size_t bytes = (bits + 7) / 8;
  const unsigned top_mask = 0xffu >> (bytes * 8 - bits);
  for (;;) {
    Bytes raw = random_bytes(bytes, rng);
    raw[0] &= static_cast<std::uint8_t>(top_mask);
    BigInt candidate = decode(raw);
    if (candidate < bound) return candidate;
  }
}

// Uniform in [lo, hi].
template <WordGenerator G>
BigInt random_in_range(const BigInt& lo, const BigInt& hi, G& rng) {
  if (hi < lo) throw Error(ErrorCode::invalid_argument, "empty sampling range");
  return lo + random_below(hi - lo + 1, rng);
}

inline std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline std::string to_hex(const BigInt& value) {
  return value.is_zero() ? std::string("00") : to_hex(encode_minimal(value));
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::invalid_argument, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::invalid_argument, "non-hex character");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

}  // namespace ksauth
