#pragma once

#include <array>
#include <span>
#include <vector>

#include "rdrive/rng.hpp"
#include "rdrive/types.hpp"

// Per-file authenticated encryption and (B, B) threshold splitting of the
// file key across the file's B blocks.
namespace rdrive::crypto {

struct FileKey {
    std::array<uint8_t, 32> bytes{};

    static FileKey random(Rng& rng);
    bool operator==(const FileKey&) const = default;
};

// One Shamir share: evaluations of the 32 per-byte polynomials at x = index.
struct KeyShard {
    int index = 0;  // in [1, B]
    std::array<uint8_t, 32> value{};

    bool operator==(const KeyShard&) const = default;
};

inline constexpr size_t kNonceBytes = 12;
inline constexpr size_t kTagBytes = 16;
// Ciphertext layout: nonce || ciphertext || tag.
inline constexpr size_t kCiphertextOverhead = kNonceBytes + kTagBytes;

// AES-256-GCM with the nonce derived from (fileId, blockIndex); safe because
// each key encrypts exactly one file exactly once.
Bytes encryptBlock(std::span<const uint8_t> plaintext, const FileKey& key, const FileId& fileId,
                   uint32_t blockIndex);

// Throws AuthenticationFailure on a wrong key, tampered data, or mismatched
// (fileId, blockIndex).
Bytes decryptBlock(std::span<const uint8_t> ciphertext, const FileKey& key, const FileId& fileId,
                   uint32_t blockIndex);

// Shamir (B, B) over GF(2^8): per key byte, a random degree B-1 polynomial
// with the key byte as constant term, evaluated at x = 1..B.
std::vector<KeyShard> splitKey(const FileKey& key, int shardCount, Rng& rng);

// Lagrange interpolation at x = 0; requires exactly all B distinct shards.
FileKey joinKey(std::span<const KeyShard> shards, int shardCount);

// Wire form of a shard inside a fragment header: index byte + 32 evaluations.
Bytes encodeKeyShard(const KeyShard& shard);
KeyShard decodeKeyShard(std::span<const uint8_t> bytes);

}  // namespace rdrive::crypto
