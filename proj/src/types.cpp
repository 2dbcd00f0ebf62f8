#include "rdrive/types.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "json.hpp"

namespace rdrive {

namespace {

constexpr size_t kGuidLength = 40;

bool printableAsciiChar(char c) { return c >= 0x20 && c <= 0x7E; }

void putU16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void putU32(Bytes& out, uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(v >> shift));
}

void putU64(Bytes& out, uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(v >> shift));
}

uint64_t getBe(std::span<const uint8_t> in, size_t offset, size_t width) {
    uint64_t v = 0;
    for (size_t i = 0; i < width; ++i) v = (v << 8) | in[offset + i];
    return v;
}

}  // namespace

bool isPrintableAscii(const std::string& text) {
    return std::all_of(text.begin(), text.end(), printableAsciiChar);
}

Guid::Guid(std::string value) : value_(std::move(value)) {
    if (value_.size() != kGuidLength) {
        raise(Errc::InvalidParameters, "GUID must be exactly 40 characters, got " + std::to_string(value_.size()));
    }
    if (!isPrintableAscii(value_)) {
        raise(Errc::InvalidParameters, "GUID must be printable ASCII");
    }
}

Guid Guid::synthetic(const std::string& stem, uint64_t index) {
    char suffix[24];
    std::snprintf(suffix, sizeof(suffix), "%016llx", static_cast<unsigned long long>(index));
    std::string value = stem + suffix;
    if (value.size() > kGuidLength) {
        raise(Errc::InvalidParameters, "synthetic GUID stem too long");
    }
    value.append(kGuidLength - value.size(), '0');
    return Guid(value);
}

DeviceProfile::DeviceProfile(Guid g, double storageMb, double remainingMin)
    : guid(std::move(g)), storageAvailableMb(storageMb), remainingTimeMin(remainingMin), energyRank(remainingMin) {
    if (storageMb < 0 || remainingMin < 0) {
        raise(Errc::InvalidParameters, "device storage and remaining time must be non-negative");
    }
}

bool AccessControlList::allows(const Guid& caller) const {
    if (caller == owner) return true;
    switch (mode) {
        case AclMode::OWNER: return false;
        case AclMode::WORLD: return true;
        case AclMode::USERS: return userList.count(caller) > 0;
    }
    return false;
}

void AccessControlList::validate() const {
    if (owner.empty()) raise(Errc::MalformedMetadata, "ACL has no owner");
    if (mode == AclMode::USERS && userList.empty()) {
        raise(Errc::MalformedMetadata, "USERS ACL with empty user list");
    }
    if (mode != AclMode::USERS && !userList.empty()) {
        raise(Errc::MalformedMetadata, "user list present outside USERS mode");
    }
}

AccessControlList AccessControlList::ownerOnly(Guid owner) {
    return AccessControlList{std::move(owner), AclMode::OWNER, {}};
}

AccessControlList AccessControlList::world(Guid owner) {
    return AccessControlList{std::move(owner), AclMode::WORLD, {}};
}

AccessControlList AccessControlList::users(Guid owner, std::set<Guid> list) {
    return AccessControlList{std::move(owner), AclMode::USERS, std::move(list)};
}

void Rnode::validate() const {
    try {
        validatePath(filePath);
        permission.validate();
    } catch (const Error& e) {
        raise(Errc::MalformedMetadata, e.what());
    }
    if (rnodeType == RnodeType::DIRECTORY) {
        if (n != 0 || k != 0 || blockCount != 0 || !fragLocation.empty()) {
            raise(Errc::MalformedMetadata, "directory rnode with coding fields set");
        }
        return;
    }
    if (!fileList.empty() || !folderList.empty()) {
        raise(Errc::MalformedMetadata, "file rnode with child listings");
    }
    if (k < 1 || n < k) {
        raise(Errc::MalformedMetadata, "file rnode requires 1 <= k <= n, got k=" + std::to_string(k) +
                                           " n=" + std::to_string(n));
    }
    if (blockCount < 1) raise(Errc::MalformedMetadata, "file rnode requires at least one block");
    if (fragLocation.size() != static_cast<size_t>(blockCount) * n) {
        raise(Errc::MalformedMetadata, "fragLocation must have blockCount*n entries");
    }
    for (const auto& [key, guid] : fragLocation) {
        if (key.first >= blockCount || key.second >= n) {
            raise(Errc::MalformedMetadata, "fragLocation index out of range");
        }
        if (guid.empty()) raise(Errc::MalformedMetadata, "fragLocation entry without device");
    }
}

// --- JSON encoding -----------------------------------------------------------

namespace {

using nlohmann::json;

std::string bytesToHex(std::span<const uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

FileId hexToFileId(const std::string& hex) {
    if (hex.size() != 32) raise(Errc::MalformedMetadata, "id must be 32 hex characters");
    FileId id{};
    for (size_t i = 0; i < 16; ++i) {
        uint8_t value = 0;
        auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, value, 16);
        if (ec != std::errc() || ptr != hex.data() + 2 * i + 2) {
            raise(Errc::MalformedMetadata, "id is not valid hex");
        }
        id[i] = value;
    }
    return id;
}

const char* aclModeName(AclMode mode) {
    switch (mode) {
        case AclMode::OWNER: return "OWNER";
        case AclMode::WORLD: return "WORLD";
        case AclMode::USERS: return "USERS";
    }
    return "OWNER";
}

AclMode aclModeFromName(const std::string& name) {
    if (name == "OWNER") return AclMode::OWNER;
    if (name == "WORLD") return AclMode::WORLD;
    if (name == "USERS") return AclMode::USERS;
    raise(Errc::MalformedMetadata, "unknown ACL mode '" + name + "'");
}

json aclToJson(const AccessControlList& acl) {
    json j;
    j["owner"] = acl.owner.value();
    j["mode"] = aclModeName(acl.mode);
    json users = json::array();
    for (const auto& g : acl.userList) users.push_back(g.value());
    j["userList"] = std::move(users);
    return j;
}

AccessControlList aclFromJson(const json& j) {
    AccessControlList acl;
    acl.owner = Guid(j.at("owner").get<std::string>());
    acl.mode = aclModeFromName(j.at("mode").get<std::string>());
    for (const auto& entry : j.at("userList")) acl.userList.insert(Guid(entry.get<std::string>()));
    return acl;
}

}  // namespace

std::string serializeRnode(const Rnode& rnode) {
    // nlohmann objects are key-sorted maps, which makes the encoding
    // deterministic for identical rnodes.
    json j;
    j["rnodeType"] = rnode.rnodeType == RnodeType::FILE ? "FILE" : "DIRECTORY";
    j["rnodeId"] = bytesToHex(rnode.rnodeId);
    j["fileName"] = rnode.fileName;
    j["fileSize"] = rnode.fileSize;
    j["fileId"] = bytesToHex(rnode.fileId);
    j["filePath"] = rnode.filePath;
    j["n"] = rnode.n;
    j["k"] = rnode.k;
    j["blockCount"] = rnode.blockCount;
    json frag = json::object();
    for (const auto& [key, guid] : rnode.fragLocation) {
        frag[std::to_string(key.first) + ":" + std::to_string(key.second)] = guid.value();
    }
    j["fragLocation"] = std::move(frag);
    j["fileList"] = rnode.fileList;
    j["folderList"] = rnode.folderList;
    j["permission"] = aclToJson(rnode.permission);
    j["timeStamp"] = rnode.timeStamp;
    return j.dump();
}

Rnode deserializeRnode(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::MalformedMetadata, std::string("invalid JSON: ") + e.what());
    }
    Rnode rnode;
    try {
        const std::string type = j.at("rnodeType").get<std::string>();
        if (type == "FILE") {
            rnode.rnodeType = RnodeType::FILE;
        } else if (type == "DIRECTORY") {
            rnode.rnodeType = RnodeType::DIRECTORY;
        } else {
            raise(Errc::MalformedMetadata, "unknown rnodeType '" + type + "'");
        }
        rnode.rnodeId = hexToFileId(j.at("rnodeId").get<std::string>());
        rnode.fileName = j.at("fileName").get<std::string>();
        rnode.fileSize = j.at("fileSize").get<uint64_t>();
        rnode.fileId = hexToFileId(j.at("fileId").get<std::string>());
        rnode.filePath = j.at("filePath").get<std::string>();
        rnode.n = j.at("n").get<uint32_t>();
        rnode.k = j.at("k").get<uint32_t>();
        rnode.blockCount = j.at("blockCount").get<uint32_t>();
        for (const auto& [key, value] : j.at("fragLocation").items()) {
            const auto colon = key.find(':');
            if (colon == std::string::npos) raise(Errc::MalformedMetadata, "bad fragLocation key '" + key + "'");
            uint32_t block = 0;
            uint32_t frag = 0;
            auto r1 = std::from_chars(key.data(), key.data() + colon, block);
            auto r2 = std::from_chars(key.data() + colon + 1, key.data() + key.size(), frag);
            if (r1.ec != std::errc() || r2.ec != std::errc()) {
                raise(Errc::MalformedMetadata, "bad fragLocation key '" + key + "'");
            }
            rnode.fragLocation[{block, frag}] = Guid(value.get<std::string>());
        }
        rnode.fileList = j.at("fileList").get<std::vector<std::string>>();
        rnode.folderList = j.at("folderList").get<std::vector<std::string>>();
        rnode.permission = aclFromJson(j.at("permission"));
        rnode.timeStamp = j.at("timeStamp").get<uint64_t>();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(Errc::MalformedMetadata, std::string("missing or mistyped field: ") + e.what());
    }
    rnode.validate();
    return rnode;
}

// --- Fragment binary format --------------------------------------------------

size_t fragmentHeaderBytes(const Fragment& fragment) {
    return 16 + 4 + 2 + 2 + 2 + 8 + 2 + fragment.keyShard.size();
}

Bytes encodeFragment(const Fragment& fragment) {
    if (fragment.fragmentIndex > 0xFFFF || fragment.n > 0xFFFF || fragment.k > 0xFFFF) {
        raise(Errc::InvalidParameters, "fragment header field out of range");
    }
    if (fragment.keyShard.size() > 0xFFFF) raise(Errc::InvalidParameters, "key shard too large");
    Bytes out;
    out.reserve(fragmentHeaderBytes(fragment) + fragment.payload.size());
    out.insert(out.end(), fragment.fileId.begin(), fragment.fileId.end());
    putU32(out, fragment.blockIndex);
    putU16(out, static_cast<uint16_t>(fragment.fragmentIndex));
    putU16(out, static_cast<uint16_t>(fragment.n));
    putU16(out, static_cast<uint16_t>(fragment.k));
    putU64(out, fragment.timeStamp);
    putU16(out, static_cast<uint16_t>(fragment.keyShard.size()));
    out.insert(out.end(), fragment.keyShard.begin(), fragment.keyShard.end());
    out.insert(out.end(), fragment.payload.begin(), fragment.payload.end());
    return out;
}

Fragment decodeFragment(std::span<const uint8_t> bytes) {
    constexpr size_t kFixed = 16 + 4 + 2 + 2 + 2 + 8 + 2;
    if (bytes.size() < kFixed) raise(Errc::InvalidParameters, "fragment shorter than header");
    Fragment fragment;
    std::copy(bytes.begin(), bytes.begin() + 16, fragment.fileId.begin());
    fragment.blockIndex = static_cast<uint32_t>(getBe(bytes, 16, 4));
    fragment.fragmentIndex = static_cast<uint32_t>(getBe(bytes, 20, 2));
    fragment.n = static_cast<uint32_t>(getBe(bytes, 22, 2));
    fragment.k = static_cast<uint32_t>(getBe(bytes, 24, 2));
    fragment.timeStamp = getBe(bytes, 26, 8);
    const size_t shardLen = getBe(bytes, 34, 2);
    if (bytes.size() < kFixed + shardLen) raise(Errc::InvalidParameters, "fragment key shard truncated");
    fragment.keyShard.assign(bytes.begin() + kFixed, bytes.begin() + kFixed + shardLen);
    fragment.payload.assign(bytes.begin() + kFixed + shardLen, bytes.end());
    return fragment;
}

// --- Identifiers and paths ---------------------------------------------------

FileId randomFileId(Rng& rng) {
    FileId id{};
    rng.fillBytes(id);
    return id;
}

std::string fileIdHex(const FileId& id) { return bytesToHex(id); }

void validatePath(const std::string& path) {
    if (path.empty() || path.front() != '/') {
        raise(Errc::InvalidParameters, "path must be absolute: '" + path + "'");
    }
    if (path == "/") return;
    if (path.back() == '/') raise(Errc::InvalidParameters, "path must not end with '/': '" + path + "'");
    size_t start = 1;
    for (size_t i = 1; i <= path.size(); ++i) {
        if (i == path.size() || path[i] == '/') {
            if (i == start) raise(Errc::InvalidParameters, "path has empty segment: '" + path + "'");
            start = i + 1;
        }
    }
}

std::vector<std::string> splitPath(const std::string& path) {
    validatePath(path);
    std::vector<std::string> segments;
    if (path == "/") return segments;
    size_t start = 1;
    for (size_t i = 1; i <= path.size(); ++i) {
        if (i == path.size() || path[i] == '/') {
            segments.push_back(path.substr(start, i - start));
            start = i + 1;
        }
    }
    return segments;
}

std::string parentPath(const std::string& path) {
    validatePath(path);
    if (path == "/") raise(Errc::InvalidParameters, "root has no parent");
    const auto pos = path.find_last_of('/');
    return pos == 0 ? "/" : path.substr(0, pos);
}

std::string baseName(const std::string& path) {
    validatePath(path);
    if (path == "/") return "";
    return path.substr(path.find_last_of('/') + 1);
}

}  // namespace rdrive
