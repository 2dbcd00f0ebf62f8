#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rdrive/crypto.hpp"
#include "rdrive/metadata.hpp"
#include "rdrive/network.hpp"
#include "rdrive/planner.hpp"
#include "rdrive/types.hpp"

namespace rdrive {

struct EngineConfig {
    uint64_t blockSizeBytes = 4ull << 20;  // 4 MiB
    double defaultAvailabilityWeight = 0.5;
    double defaultRequiredLifetimeMin = 300.0;
    uint64_t fragmentRequestTtlSeconds = 60;
    uint64_t fragmentPushTtlSeconds = net::kInfiniteTtl;
    int getTickBudget = 1 << 20;  // safety stop for retrieval loops
};

struct PutRequest {
    Bytes localBytes;
    std::string rdrivePath;
    AccessControlList acl;
    double availabilityWeight = 0.5;
    double requiredLifetimeMin = 300.0;
    uint64_t blockSizeBytes = 0;  // 0 = engine default
    // Explicit (k, n), bypassing the cost search the way a manually
    // parameterized experiment does; device selection still applies.
    std::optional<std::pair<int, int>> planOverride;
};

// End-to-end storage orchestration: split -> encrypt -> key-shard -> encode
// -> plan -> commit metadata -> dispatch fragments, and the reverse with
// TTL-governed fragment requests.
class StorageEngine {
public:
    struct GetStats {
        std::vector<int> requestsPerBlock;
        int resends = 0;
        int staleRepliesDropped = 0;
        int ticksAdvanced = 0;
    };

    StorageEngine(MetadataCluster& metadata, net::Simulator& network,
                  std::vector<DeviceProfile> devices, EngineConfig config, uint64_t seed);

    StorageEngine(const StorageEngine&) = delete;
    StorageEngine& operator=(const StorageEngine&) = delete;

    // Commits the rnode before any fragment leaves the device; a metadata
    // failure therefore leaves no fragment anywhere.
    Rnode put(const PutRequest& request, const Guid& caller);

    Bytes get(const std::string& rdrivePath, const Guid& caller);

    Rnode mkdir(const std::string& path, AccessControlList acl, const Guid& caller);
    std::vector<std::string> ls(const std::string& path, const Guid& caller) const;
    void rm(const std::string& path, const Guid& caller);

    // Whole-payload transfer with no erasure coding, one logical message.
    net::DeliveryHandle shareUnicast(Bytes localBytes, const Guid& dest, uint64_t ttlSeconds,
                                     const Guid& caller);

    // Accepts a fragment into a device store, honoring version timestamps
    // ("same or higher" wins) and the storage budget.
    void handleFragmentArrival(const Fragment& fragment, const Guid& device);

    void setDeviceAlive(const Guid& device, bool alive);
    bool deviceAlive(const Guid& device) const;
    DeviceProfile deviceProfile(const Guid& device) const;
    std::vector<Guid> deviceGuids() const;

    // Drives the network until no message is in flight (or the budget runs
    // out); returns ticks advanced.
    int settle(int maxTicks = 1 << 20);

    const GetStats& lastGetStats() const { return lastGetStats_; }

    // Holder-side orphan collection against the committed namespace.
    size_t collectGarbage(const Guid& device);

    std::vector<Fragment> deviceFragments(const Guid& device) const;
    std::optional<Fragment> storedFragment(const Guid& device, const FileId& fileId,
                                           uint32_t blockIndex, uint32_t fragmentIndex) const;
    // Fault injection: flips one payload bit of a stored fragment.
    void corruptStoredFragment(const Guid& device, const FileId& fileId, uint32_t blockIndex,
                               uint32_t fragmentIndex, size_t bitIndex);

    std::vector<Bytes> unicastInbox(const Guid& device) const;

    // One directory per device, one .frag file per fragment (fixed binary
    // header + payload).
    void persistDeviceStores(const std::filesystem::path& root) const;
    void loadDeviceStores(const std::filesystem::path& root);

private:
    struct DeviceState {
        DeviceProfile profile;
        bool alive = true;
        std::map<std::tuple<FileId, uint32_t, uint32_t>, Fragment> store;
        std::vector<Bytes> unicastInbox;
        std::vector<std::pair<Guid, Bytes>> pendingReplies;  // (holder, fragment bytes)
    };

    DeviceState& device(const Guid& guid);
    const DeviceState& device(const Guid& guid) const;
    void onMessage(const Guid& device, const Guid& source, const Bytes& payload);
    void acceptFragment(const Fragment& fragment, DeviceState& state);
    uint64_t nextTimestampMs();
    CodingPlan resolvePlan(const PutRequest& request, double fileSizeMb);
    std::vector<DeviceProfile> aliveProfiles() const;

    MetadataCluster& metadata_;
    net::Simulator& network_;
    EngineConfig config_;
    Rng rng_;
    std::map<Guid, DeviceState> devices_;
    std::vector<Guid> deviceOrder_;
    uint64_t lastTimestampMs_ = 0;
    GetStats lastGetStats_;
    mutable std::recursive_mutex mutex_;
};

}  // namespace rdrive
