#include "rdrive/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>
#include <set>

#include "rdrive/gf256.hpp"

namespace rdrive::crypto {

namespace {

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

CipherCtx makeCtx() {
    CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
    if (!ctx) raise(Errc::InvalidParameters, "EVP context allocation failed");
    return ctx;
}

std::array<uint8_t, kNonceBytes> deriveNonce(const FileId& fileId, uint32_t blockIndex) {
    std::array<uint8_t, kNonceBytes> nonce{};
    std::copy(fileId.begin(), fileId.begin() + 8, nonce.begin());
    nonce[8] = static_cast<uint8_t>(blockIndex >> 24);
    nonce[9] = static_cast<uint8_t>(blockIndex >> 16);
    nonce[10] = static_cast<uint8_t>(blockIndex >> 8);
    nonce[11] = static_cast<uint8_t>(blockIndex);
    return nonce;
}

void checkShardCount(int shardCount) {
    if (shardCount < 1 || shardCount > 255) {
        raise(Errc::InvalidParameters, "shard count must be in [1, 255], got " + std::to_string(shardCount));
    }
}

}  // namespace

FileKey FileKey::random(Rng& rng) {
    FileKey key;
    rng.fillBytes(key.bytes);
    return key;
}

Bytes encryptBlock(std::span<const uint8_t> plaintext, const FileKey& key, const FileId& fileId,
                   uint32_t blockIndex) {
    const auto nonce = deriveNonce(fileId, blockIndex);
    Bytes out(kNonceBytes + plaintext.size() + kTagBytes);
    std::copy(nonce.begin(), nonce.end(), out.begin());

    auto ctx = makeCtx();
    int len = 0;
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.bytes.data(), nonce.data()) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM init failed");
    }
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data() + kNonceBytes, &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM encrypt failed");
    }
    int finalLen = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceBytes + len, &finalLen) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM finalize failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes,
                            out.data() + kNonceBytes + plaintext.size()) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM tag extraction failed");
    }
    return out;
}

Bytes decryptBlock(std::span<const uint8_t> ciphertext, const FileKey& key, const FileId& fileId,
                   uint32_t blockIndex) {
    if (ciphertext.size() < kCiphertextOverhead) {
        raise(Errc::AuthenticationFailure, "ciphertext shorter than nonce and tag");
    }
    const auto nonce = deriveNonce(fileId, blockIndex);
    if (!std::equal(nonce.begin(), nonce.end(), ciphertext.begin())) {
        raise(Errc::AuthenticationFailure, "nonce does not match (fileId, blockIndex)");
    }
    const size_t bodyLen = ciphertext.size() - kCiphertextOverhead;
    Bytes plaintext(bodyLen);

    auto ctx = makeCtx();
    int len = 0;
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.bytes.data(), nonce.data()) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM init failed");
    }
    if (bodyLen > 0 &&
        EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ciphertext.data() + kNonceBytes,
                          static_cast<int>(bodyLen)) != 1) {
        raise(Errc::AuthenticationFailure, "AES-GCM decrypt failed");
    }
    Bytes tag(ciphertext.end() - kTagBytes, ciphertext.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) != 1) {
        raise(Errc::InvalidParameters, "AES-GCM tag injection failed");
    }
    int finalLen = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + len, &finalLen) != 1) {
        raise(Errc::AuthenticationFailure, "authentication tag mismatch");
    }
    return plaintext;
}

std::vector<KeyShard> splitKey(const FileKey& key, int shardCount, Rng& rng) {
    checkShardCount(shardCount);
    std::vector<KeyShard> shards(static_cast<size_t>(shardCount));
    for (int i = 0; i < shardCount; ++i) shards[static_cast<size_t>(i)].index = i + 1;

    std::array<uint8_t, 255> coefficients{};
    for (size_t byte = 0; byte < key.bytes.size(); ++byte) {
        // coefficients[0] is the secret byte; the rest are uniform random.
        coefficients[0] = key.bytes[byte];
        if (shardCount > 1) {
            rng.fillBytes(std::span<uint8_t>(coefficients.data() + 1, static_cast<size_t>(shardCount - 1)));
        }
        for (int x = 1; x <= shardCount; ++x) {
            // Horner evaluation at x over GF(2^8).
            uint8_t acc = 0;
            for (int degree = shardCount - 1; degree >= 0; --degree) {
                acc = gf256::add(gf256::mul(acc, static_cast<uint8_t>(x)),
                                 coefficients[static_cast<size_t>(degree)]);
            }
            shards[static_cast<size_t>(x - 1)].value[byte] = acc;
        }
    }
    return shards;
}

FileKey joinKey(std::span<const KeyShard> shards, int shardCount) {
    checkShardCount(shardCount);
    std::set<int> seen;
    for (const auto& shard : shards) {
        if (shard.index < 1 || shard.index > shardCount) {
            raise(Errc::InvalidParameters, "shard index " + std::to_string(shard.index) +
                                               " outside [1, " + std::to_string(shardCount) + "]");
        }
        if (!seen.insert(shard.index).second) {
            raise(Errc::DuplicateShardIndex, "shard index " + std::to_string(shard.index) + " appears twice");
        }
    }
    if (static_cast<int>(seen.size()) < shardCount) {
        raise(Errc::InsufficientShards, "have " + std::to_string(seen.size()) + " distinct shards, need " +
                                            std::to_string(shardCount));
    }

    // Lagrange basis at x = 0: L_j = prod_{m != j} x_m / (x_j + x_m).
    FileKey key;
    for (size_t byte = 0; byte < key.bytes.size(); ++byte) {
        uint8_t acc = 0;
        for (const auto& shard : shards) {
            uint8_t basis = 1;
            for (const auto& other : shards) {
                if (other.index == shard.index) continue;
                const uint8_t xj = static_cast<uint8_t>(shard.index);
                const uint8_t xm = static_cast<uint8_t>(other.index);
                basis = gf256::mul(basis, gf256::div(xm, gf256::add(xj, xm)));
            }
            acc = gf256::add(acc, gf256::mul(shard.value[byte], basis));
        }
        key.bytes[byte] = acc;
    }
    return key;
}

Bytes encodeKeyShard(const KeyShard& shard) {
    Bytes out;
    out.reserve(1 + shard.value.size());
    out.push_back(static_cast<uint8_t>(shard.index));
    out.insert(out.end(), shard.value.begin(), shard.value.end());
    return out;
}

KeyShard decodeKeyShard(std::span<const uint8_t> bytes) {
    if (bytes.size() != 33) raise(Errc::InvalidParameters, "key shard must be 33 bytes");
    KeyShard shard;
    shard.index = bytes[0];
    if (shard.index < 1) raise(Errc::InvalidParameters, "key shard index must be positive");
    std::copy(bytes.begin() + 1, bytes.end(), shard.value.begin());
    return shard;
}

}  // namespace rdrive::crypto
