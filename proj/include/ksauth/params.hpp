#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include "ksauth/bigint.hpp"
#include "ksauth/hash.hpp"

namespace ksauth {

inline constexpr std::size_t kDefaultIdWidth = 16;
inline constexpr unsigned kMinPrimeBits = 8;
inline constexpr int kRetryBudget = 10'000;
// 4^-32 = 2^-64 bound on a composite passing every round.
inline constexpr int kMillerRabinRounds = 32;

struct Widths {
  std::size_t digest = kDefaultDigestWidth;
  std::size_t id = kDefaultIdWidth;
};

struct PublicParams {
  BigInt n;
  BigInt g;
  BigInt y;
  std::size_t modulus_width = 0;
  std::size_t digest_width = kDefaultDigestWidth;
  std::size_t id_width = kDefaultIdWidth;

  // Width every XOR operand and hashed big integer is encoded at.
  [[nodiscard]] std::size_t common_width() const {
    return std::max({modulus_width, digest_width, id_width, std::size_t{8}});
  }

  friend bool operator==(const PublicParams&, const PublicParams&) = default;
};

struct ServerSecret {
  BigInt p;
  BigInt q;
  BigInt phi_n;
  BigInt e;
  BigInt d;

  friend bool operator==(const ServerSecret&, const ServerSecret&) = default;
};

struct SchemeParams {
  PublicParams pub;
  ServerSecret secret;
};

namespace detail {

inline constexpr std::array<unsigned, 25> kSmallPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23,
                                                         29, 31, 37, 41, 43, 47, 53, 59, 61,
                                                         67, 71, 73, 79, 83, 89, 97};

}  // namespace detail

// Miller-Rabin with random witnesses drawn from `rng`.
template <WordGenerator G>
bool is_probable_prime(const BigInt& candidate, G& rng, int rounds = kMillerRabinRounds) {
  if (candidate < 2) return false;
  for (unsigned p : detail::kSmallPrimes) {
    if (candidate == p) return true;
    if (candidate % p == 0) return false;
  }
  const BigInt minus_one = candidate - 1;
  BigInt odd = minus_one;
  unsigned twos = 0;
  while (!boost::multiprecision::bit_test(odd, 0)) {
    odd >>= 1;
    ++twos;
  }
  for (int round = 0; round < rounds; ++round) {
    BigInt witness = random_in_range(2, candidate - 2, rng);
    BigInt x = mod_exp(witness, odd, candidate);
    if (x == 1 || x == minus_one) continue;
    bool composite = true;
    for (unsigned i = 1; i < twos; ++i) {
      x = x * x % candidate;
      if (x == minus_one) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Prime with exactly `bits` significant bits.
template <WordGenerator G>
BigInt random_prime(unsigned bits, G& rng) {
  if (bits < 2) throw Error(ErrorCode::invalid_argument, "prime needs at least 2 bits");
  const BigInt lo = BigInt(1) << (bits - 1);
  const BigInt hi = (BigInt(1) << bits) - 1;
  for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
    BigInt candidate = random_in_range(lo, hi, rng);
    candidate |= 1;
    if (is_probable_prime(candidate, rng)) return candidate;
  }
  throw Error(ErrorCode::parameter_generation_failed,
              "no prime found within retry budget at " + std::to_string(bits) + " bits");
}

inline void validate_widths(const Widths& widths) {
  if (widths.digest == 0 || widths.id == 0) {
    throw Error(ErrorCode::invalid_argument, "widths must be positive");
  }
  if (widths.id > widths.digest) {
    throw Error(ErrorCode::invalid_argument, "id width must not exceed digest width");
  }
}

// Assembles both halves from explicit components; used for fixtures and by
// generate_params once sampling is done.
inline SchemeParams params_from_components(const BigInt& p, const BigInt& q, const BigInt& e,
                                           const BigInt& g, Widths widths = {}) {
  validate_widths(widths);
  if (p == q) throw Error(ErrorCode::invalid_argument, "p and q must differ");
  SchemeParams out;
  out.secret.p = p;
  out.secret.q = q;
  out.secret.phi_n = (p - 1) * (q - 1);
  out.secret.e = e;
  if (e <= 1 || e >= out.secret.phi_n) throw Error(ErrorCode::invalid_argument, "e out of range");
  out.secret.d = mod_inv(e, out.secret.phi_n);
  out.pub.n = p * q;
  if (g <= 1 || g >= out.pub.n || gcd(g, out.pub.n) != 1) {
    throw Error(ErrorCode::invalid_argument, "g must be a unit in (1, n)");
  }
  out.pub.g = g;
  out.pub.y = mod_exp(g, out.secret.d, out.pub.n);
  out.pub.modulus_width = byte_length(out.pub.n);
  out.pub.digest_width = widths.digest;
  out.pub.id_width = widths.id;
  return out;
}

template <WordGenerator G>
SchemeParams generate_params(unsigned prime_bits, G& rng, Widths widths = {}) {
  if (prime_bits < kMinPrimeBits) {
    throw Error(ErrorCode::invalid_argument,
                "prime_bits must be at least " + std::to_string(kMinPrimeBits));
  }
  validate_widths(widths);
  const BigInt p = random_prime(prime_bits, rng);
  BigInt q;
  int attempt = 0;
  do {
    if (++attempt > kRetryBudget) {
      throw Error(ErrorCode::parameter_generation_failed, "could not draw q distinct from p");
    }
    q = random_prime(prime_bits, rng);
  } while (q == p);

  const BigInt phi = (p - 1) * (q - 1);
  const BigInt n = p * q;

  // Odd e uniform over (1, phi): e = 2k+1 with k uniform in [1, phi/2 - 1].
  BigInt e;
  for (attempt = 0;; ++attempt) {
    if (attempt >= kRetryBudget) {
      throw Error(ErrorCode::parameter_generation_failed, "no exponent coprime to phi(n)");
    }
    e = 2 * random_in_range(1, phi / 2 - 1, rng) + 1;
    if (gcd(e, phi) == 1) break;
  }

  BigInt g;
  for (attempt = 0;; ++attempt) {
    if (attempt >= kRetryBudget) {
      throw Error(ErrorCode::parameter_generation_failed, "no generator coprime to n");
    }
    g = random_in_range(2, n - 2, rng);
    if (gcd(g, n) == 1) break;
  }
  return params_from_components(p, q, e, g, widths);
}

inline bool public_params_valid(const PublicParams& pub) {
  return pub.n > 3 && pub.g > 1 && pub.g < pub.n && gcd(pub.g, pub.n) == 1 && pub.y > 0 &&
         pub.y < pub.n && pub.modulus_width == byte_length(pub.n) && pub.digest_width > 0 &&
         pub.id_width > 0 && pub.id_width <= pub.digest_width;
}

// Full cross-check of both halves, including primality and y = g^d.
inline bool params_consistent(const PublicParams& pub, const ServerSecret& secret, Rng& rng) {
  return public_params_valid(pub) && secret.p != secret.q && is_probable_prime(secret.p, rng) &&
         is_probable_prime(secret.q, rng) && secret.p * secret.q == pub.n &&
         secret.phi_n == (secret.p - 1) * (secret.q - 1) && secret.e > 1 &&
         secret.e < secret.phi_n && gcd(secret.e, secret.phi_n) == 1 &&
         secret.e * secret.d % secret.phi_n == 1 && mod_exp(pub.g, secret.d, pub.n) == pub.y;
}

}  // namespace ksauth
