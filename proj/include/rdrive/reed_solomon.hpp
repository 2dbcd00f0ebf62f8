#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rdrive/types.hpp"

// Systematic Reed-Solomon (n, k) over GF(2^8): shards 0..k-1 are the raw
// splits of the padded block, shards k..n-1 are parity.
namespace rdrive::rs {

struct ShardSet {
    int k = 0;
    int n = 0;
    size_t shardLength = 0;
    std::vector<std::optional<Bytes>> shards;  // size n; nullopt = lost

    int presentCount() const;
};

// Pads the block with a 4-byte big-endian length prefix and zero fill to a
// multiple of k, splits it into k data shards and derives n-k parity shards.
ShardSet encode(std::span<const uint8_t> block, int k, int n);

// Rebuilds the original block from any k shards; the systematic fast path
// needs no matrix inversion.
Bytes decode(const ShardSet& shards);

// n rows x k columns systematic generator matrix (row-reduced Vandermonde);
// exposed for inspection and the test oracle's subset checks.
std::vector<std::vector<uint8_t>> generatorMatrix(int k, int n);

}  // namespace rdrive::rs
