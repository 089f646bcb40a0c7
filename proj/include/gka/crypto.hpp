#pragma once

// Hash and authenticated encryption used by the protocol layer.
//
// H is SHA-256. E is ChaCha20-Poly1305 (IETF) keyed per pair by
// H(fe_encode(k_ij) || "enc"). Nonces are drawn by the sender from the run's
// seeded generator and travel in front of the ciphertext, so transcripts are
// reproducible from the seed.

#include <sodium.h>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "gka/gfpoly.hpp"

namespace gka::crypto {

inline constexpr std::string_view kHashId = "SHA-256";
inline constexpr std::string_view kAeadId = "ChaCha20-Poly1305-IETF";

inline constexpr std::size_t kDigestSize = crypto_hash_sha256_BYTES;
inline constexpr std::size_t kAeadKeySize = crypto_aead_chacha20poly1305_ietf_KEYBYTES;
inline constexpr std::size_t kNonceSize = crypto_aead_chacha20poly1305_ietf_NPUBBYTES;
inline constexpr std::size_t kTagSize = crypto_aead_chacha20poly1305_ietf_ABYTES;

using Digest = std::array<std::uint8_t, kDigestSize>;
using AeadKey = std::array<std::uint8_t, kAeadKeySize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;

inline void ensure_init() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error("libsodium initialisation failed");
}

// Incremental hasher so callers can feed the concatenated fields without
// building an intermediate buffer.
class Hasher {
 public:
  Hasher() {
    ensure_init();
    crypto_hash_sha256_init(&state_);
  }

  Hasher& update(std::span<const std::uint8_t> data) {
    crypto_hash_sha256_update(&state_, data.data(), data.size());
    return *this;
  }

  Hasher& update(std::string_view s) {
    return update(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

  Hasher& update(std::uint8_t b) { return update(std::span(&b, 1)); }

  Digest finish() {
    Digest out{};
    crypto_hash_sha256_final(&state_, out.data());
    return out;
  }

 private:
  crypto_hash_sha256_state state_{};
};

inline Digest sha256(std::span<const std::uint8_t> data) { return Hasher{}.update(data).finish(); }

inline AeadKey derive_aead_key(Fe pairwise_key, std::uint64_t p) {
  Digest d = Hasher{}.update(fe_encode(pairwise_key, p)).update("enc").finish();
  AeadKey k{};
  std::copy(d.begin(), d.end(), k.begin());
  return k;
}

inline Bytes aead_seal(const AeadKey& key, const Nonce& nonce, std::span<const std::uint8_t> plaintext,
                       std::span<const std::uint8_t> ad) {
  ensure_init();
  Bytes out(plaintext.size() + kTagSize);
  unsigned long long out_len = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &out_len, plaintext.data(), plaintext.size(),
                                            ad.data(), ad.size(), nullptr, nonce.data(), key.data());
  out.resize(out_len);
  return out;
}

// Returns nullopt on any authentication failure.
inline std::optional<Bytes> aead_open(const AeadKey& key, const Nonce& nonce,
                                      std::span<const std::uint8_t> ciphertext,
                                      std::span<const std::uint8_t> ad) {
  ensure_init();
  if (ciphertext.size() < kTagSize) return std::nullopt;
  Bytes out(ciphertext.size() - kTagSize);
  unsigned long long out_len = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &out_len, nullptr, ciphertext.data(),
                                                ciphertext.size(), ad.data(), ad.size(), nonce.data(),
                                                key.data()) != 0) {
    return std::nullopt;
  }
  out.resize(out_len);
  return out;
}

}  // namespace gka::crypto
