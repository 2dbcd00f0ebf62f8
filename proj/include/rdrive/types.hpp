#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdrive/errors.hpp"
#include "rdrive/rng.hpp"

namespace rdrive {

using Bytes = std::vector<uint8_t>;
using FileId = std::array<uint8_t, 16>;

// 40-character printable-ASCII device/user identifier. Byte-wise equality,
// usable as a map key.
class Guid {
public:
    Guid() = default;
    explicit Guid(std::string value);

    const std::string& value() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const Guid&) const = default;

    // Deterministic synthetic GUID for tests and generated worlds
    // ("node0000..." style, padded to 40 characters).
    static Guid synthetic(const std::string& stem, uint64_t index);

private:
    std::string value_;
};

struct DeviceProfile {
    Guid guid;
    double storageAvailableMb = 0.0;  // S_i
    double remainingTimeMin = 0.0;    // T_i
    double energyRank = 0.0;          // retrieval ordering key, defaults to T_i

    DeviceProfile() = default;
    DeviceProfile(Guid g, double storageMb, double remainingMin);
};

enum class AclMode { OWNER, WORLD, USERS };

struct AccessControlList {
    Guid owner;
    AclMode mode = AclMode::OWNER;
    std::set<Guid> userList;  // nonempty iff mode == USERS

    // The owner always passes; there is no inheritance from parents.
    bool allows(const Guid& caller) const;
    void validate() const;

    static AccessControlList ownerOnly(Guid owner);
    static AccessControlList world(Guid owner);
    static AccessControlList users(Guid owner, std::set<Guid> list);

    bool operator==(const AccessControlList&) const = default;
};

enum class RnodeType { FILE, DIRECTORY };

// One metadata record in the namespace. FILE rnodes carry coding parameters
// and the fragment placement map; DIRECTORY rnodes carry child listings.
struct Rnode {
    RnodeType rnodeType = RnodeType::DIRECTORY;
    FileId rnodeId{};
    std::string fileName;
    uint64_t fileSize = 0;
    FileId fileId{};
    std::string filePath;
    uint32_t n = 0;
    uint32_t k = 0;
    uint32_t blockCount = 0;
    // (blockIndex, fragmentIndex) -> holder device
    std::map<std::pair<uint32_t, uint32_t>, Guid> fragLocation;
    std::vector<std::string> fileList;
    std::vector<std::string> folderList;
    AccessControlList permission;
    uint64_t timeStamp = 0;  // milliseconds

    void validate() const;  // throws MalformedMetadata

    bool operator==(const Rnode&) const = default;
};

// One erasure-coded share of one encrypted block, as shipped between devices
// and stored on them.
struct Fragment {
    FileId fileId{};
    uint32_t blockIndex = 0;
    uint32_t fragmentIndex = 0;
    uint32_t n = 0;
    uint32_t k = 0;
    uint64_t timeStamp = 0;  // version number
    Bytes keyShard;          // shard of the file key for this block
    Bytes payload;

    bool operator==(const Fragment&) const = default;
};

struct CodingPlan {
    int k = 0;
    int n = 0;
    std::vector<Guid> devices;  // n holders, longest remaining time first
    double cost = 0.0;          // achieved weighted availability/storage cost
    double codeRate = 0.0;      // k/n
    double encodedSizeMb = 0.0; // F * n / k
};

// --- Metadata serialization (UTF-8 JSON text) ------------------------------

std::string serializeRnode(const Rnode& rnode);
Rnode deserializeRnode(const std::string& text);  // throws MalformedMetadata

// --- Fragment wire/disk format ---------------------------------------------
// Fixed binary header: fileId 16B, blockIndex u32 BE, fragmentIndex u16 BE,
// n u16 BE, k u16 BE, timeStamp u64 BE, keyShard length u16 BE + bytes,
// then the payload.

Bytes encodeFragment(const Fragment& fragment);
Fragment decodeFragment(std::span<const uint8_t> bytes);
size_t fragmentHeaderBytes(const Fragment& fragment);

// --- Identifiers and paths --------------------------------------------------

FileId randomFileId(Rng& rng);
std::string fileIdHex(const FileId& id);

bool isPrintableAscii(const std::string& text);

// Namespace paths are rooted at "/" with no empty segments.
void validatePath(const std::string& path);           // throws InvalidParameters
std::vector<std::string> splitPath(const std::string& path);
std::string parentPath(const std::string& path);
std::string baseName(const std::string& path);

}  // namespace rdrive
