#include "rdrive/reed_solomon.hpp"

#include <algorithm>

#include "rdrive/gf256.hpp"

namespace rdrive::rs {

namespace {

constexpr size_t kLengthPrefixBytes = 4;

using Matrix = std::vector<std::vector<uint8_t>>;

Matrix identity(int size) {
    Matrix m(static_cast<size_t>(size), std::vector<uint8_t>(static_cast<size_t>(size), 0));
    for (int i = 0; i < size; ++i) m[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1;
    return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    const size_t rows = a.size();
    const size_t inner = b.size();
    const size_t cols = b[0].size();
    Matrix out(rows, std::vector<uint8_t>(cols, 0));
    for (size_t r = 0; r < rows; ++r) {
        for (size_t i = 0; i < inner; ++i) {
            const uint8_t coefficient = a[r][i];
            if (coefficient == 0) continue;
            const uint8_t* row = gf256::mulRow(coefficient);
            for (size_t c = 0; c < cols; ++c) out[r][c] ^= row[b[i][c]];
        }
    }
    return out;
}

// Gauss-Jordan inversion over GF(256).
Matrix invert(Matrix m) {
    const int size = static_cast<int>(m.size());
    Matrix inverse = identity(size);
    for (int col = 0; col < size; ++col) {
        int pivot = col;
        while (pivot < size && m[static_cast<size_t>(pivot)][static_cast<size_t>(col)] == 0) ++pivot;
        if (pivot == size) raise(Errc::InconsistentShards, "singular decode matrix");
        std::swap(m[static_cast<size_t>(pivot)], m[static_cast<size_t>(col)]);
        std::swap(inverse[static_cast<size_t>(pivot)], inverse[static_cast<size_t>(col)]);

        const uint8_t scale = gf256::inv(m[static_cast<size_t>(col)][static_cast<size_t>(col)]);
        for (int c = 0; c < size; ++c) {
            m[static_cast<size_t>(col)][static_cast<size_t>(c)] =
                gf256::mul(m[static_cast<size_t>(col)][static_cast<size_t>(c)], scale);
            inverse[static_cast<size_t>(col)][static_cast<size_t>(c)] =
                gf256::mul(inverse[static_cast<size_t>(col)][static_cast<size_t>(c)], scale);
        }
        for (int r = 0; r < size; ++r) {
            if (r == col) continue;
            const uint8_t factor = m[static_cast<size_t>(r)][static_cast<size_t>(col)];
            if (factor == 0) continue;
            const uint8_t* row = gf256::mulRow(factor);
            for (int c = 0; c < size; ++c) {
                m[static_cast<size_t>(r)][static_cast<size_t>(c)] ^=
                    row[m[static_cast<size_t>(col)][static_cast<size_t>(c)]];
                inverse[static_cast<size_t>(r)][static_cast<size_t>(c)] ^=
                    row[inverse[static_cast<size_t>(col)][static_cast<size_t>(c)]];
            }
        }
    }
    return inverse;
}

void checkParameters(int k, int n) {
    if (k < 1 || k > n) {
        raise(Errc::InvalidParameters,
              "need 1 <= k <= n, got k=" + std::to_string(k) + " n=" + std::to_string(n));
    }
    if (n > 255) raise(Errc::InvalidParameters, "n exceeds the GF(2^8) limit of 255");
}

}  // namespace

int ShardSet::presentCount() const {
    return static_cast<int>(std::count_if(shards.begin(), shards.end(),
                                          [](const auto& s) { return s.has_value(); }));
}

Matrix generatorMatrix(int k, int n) {
    checkParameters(k, n);
    // Vandermonde rows evaluated at 0..n-1, then normalized so the top k
    // rows are the identity. Any k rows of the result stay invertible.
    Matrix vandermonde(static_cast<size_t>(n), std::vector<uint8_t>(static_cast<size_t>(k), 0));
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < k; ++c) {
            vandermonde[static_cast<size_t>(r)][static_cast<size_t>(c)] =
                gf256::pow(static_cast<uint8_t>(r), static_cast<unsigned>(c));
        }
    }
    Matrix top(vandermonde.begin(), vandermonde.begin() + k);
    return multiply(vandermonde, invert(std::move(top)));
}

ShardSet encode(std::span<const uint8_t> block, int k, int n) {
    checkParameters(k, n);
    if (block.empty()) raise(Errc::InvalidParameters, "cannot encode an empty block");
    if (block.size() > 0xFFFFFFFFull) raise(Errc::InvalidParameters, "block exceeds the 4-byte length prefix");

    const size_t paddedLength =
        (block.size() + kLengthPrefixBytes + static_cast<size_t>(k) - 1) / static_cast<size_t>(k) *
        static_cast<size_t>(k);
    const size_t shardLength = paddedLength / static_cast<size_t>(k);

    Bytes padded(paddedLength, 0);
    const uint32_t originalLength = static_cast<uint32_t>(block.size());
    padded[0] = static_cast<uint8_t>(originalLength >> 24);
    padded[1] = static_cast<uint8_t>(originalLength >> 16);
    padded[2] = static_cast<uint8_t>(originalLength >> 8);
    padded[3] = static_cast<uint8_t>(originalLength);
    std::copy(block.begin(), block.end(), padded.begin() + kLengthPrefixBytes);

    ShardSet out;
    out.k = k;
    out.n = n;
    out.shardLength = shardLength;
    out.shards.resize(static_cast<size_t>(n));
    for (int i = 0; i < k; ++i) {
        out.shards[static_cast<size_t>(i)] =
            Bytes(padded.begin() + static_cast<long>(shardLength) * i,
                  padded.begin() + static_cast<long>(shardLength) * (i + 1));
    }

    const Matrix generator = generatorMatrix(k, n);
    for (int r = k; r < n; ++r) {
        Bytes parity(shardLength, 0);
        for (int c = 0; c < k; ++c) {
            const uint8_t coefficient = generator[static_cast<size_t>(r)][static_cast<size_t>(c)];
            if (coefficient == 0) continue;
            const uint8_t* row = gf256::mulRow(coefficient);
            const uint8_t* src = padded.data() + static_cast<size_t>(c) * shardLength;
            for (size_t i = 0; i < shardLength; ++i) parity[i] ^= row[src[i]];
        }
        out.shards[static_cast<size_t>(r)] = std::move(parity);
    }
    return out;
}

Bytes decode(const ShardSet& shards) {
    checkParameters(shards.k, shards.n);
    if (shards.shards.size() != static_cast<size_t>(shards.n)) {
        raise(Errc::InvalidParameters, "shard array size does not match n");
    }
    std::vector<int> present;
    for (int i = 0; i < shards.n; ++i) {
        const auto& shard = shards.shards[static_cast<size_t>(i)];
        if (!shard) continue;
        if (shard->size() != shards.shardLength) {
            raise(Errc::InconsistentShards,
                  "shard " + std::to_string(i) + " has length " + std::to_string(shard->size()) +
                      ", expected " + std::to_string(shards.shardLength));
        }
        present.push_back(i);
    }
    if (present.size() < static_cast<size_t>(shards.k)) {
        raise(Errc::InsufficientShards, "have " + std::to_string(present.size()) + " shards, need " +
                                            std::to_string(shards.k));
    }

    const size_t shardLength = shards.shardLength;
    const size_t k = static_cast<size_t>(shards.k);
    Bytes padded(shardLength * k, 0);

    const bool systematicIntact =
        std::all_of(present.begin(), present.begin() + static_cast<long>(k),
                    [&](int index) { return index < shards.k; });
    if (systematicIntact) {
        for (size_t c = 0; c < k; ++c) {
            const Bytes& shard = *shards.shards[c];
            std::copy(shard.begin(), shard.end(), padded.begin() + static_cast<long>(c * shardLength));
        }
    } else {
        present.resize(k);
        const Matrix generator = generatorMatrix(shards.k, shards.n);
        Matrix subset(k);
        for (size_t r = 0; r < k; ++r) subset[r] = generator[static_cast<size_t>(present[r])];
        const Matrix inverse = invert(std::move(subset));
        for (size_t c = 0; c < k; ++c) {
            uint8_t* dst = padded.data() + c * shardLength;
            for (size_t j = 0; j < k; ++j) {
                const uint8_t coefficient = inverse[c][j];
                if (coefficient == 0) continue;
                const uint8_t* row = gf256::mulRow(coefficient);
                const uint8_t* src = shards.shards[static_cast<size_t>(present[j])]->data();
                for (size_t i = 0; i < shardLength; ++i) dst[i] ^= row[src[i]];
            }
        }
    }

    if (padded.size() < kLengthPrefixBytes) raise(Errc::InconsistentShards, "decoded block shorter than prefix");
    const size_t originalLength = (static_cast<size_t>(padded[0]) << 24) |
                                  (static_cast<size_t>(padded[1]) << 16) |
                                  (static_cast<size_t>(padded[2]) << 8) | padded[3];
    if (originalLength + kLengthPrefixBytes > padded.size() ||
        padded.size() - (originalLength + kLengthPrefixBytes) >= k) {
        raise(Errc::InconsistentShards, "corrupt length prefix in decoded block");
    }
    return Bytes(padded.begin() + kLengthPrefixBytes,
                 padded.begin() + static_cast<long>(kLengthPrefixBytes + originalLength));
}

}  // namespace rdrive::rs
