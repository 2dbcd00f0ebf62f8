#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rdrive/engine.hpp"
#include "rdrive/metadata.hpp"
#include "rdrive/network.hpp"
#include "rdrive/types.hpp"

namespace rdrive {

// One simulated deployment: devices, network, metadata ensemble and engine,
// built from a config document (or the generated default world).
struct WorldConfig {
    uint64_t seed = 1;
    int metadataReplicas = 3;
    Guid caller;
    std::vector<DeviceProfile> devices;
    std::vector<Guid> extraNodes;  // network-only nodes (mules, pure clients)
    net::NetworkConfig network;    // node list is filled from devices + extraNodes
    std::optional<net::LinkModel> defaultLink;  // full mesh among devices when set
    EngineConfig engine;

    static WorldConfig fromJson(const std::string& text);
    static WorldConfig generated(int deviceCount, uint64_t seed);
};

class World {
public:
    explicit World(WorldConfig config);

    StorageEngine& engine() { return *engine_; }
    MetadataCluster& metadata() { return *metadata_; }
    net::Simulator& network() { return *network_; }
    const WorldConfig& config() const { return config_; }
    const Guid& defaultCaller() const { return config_.caller; }

private:
    WorldConfig config_;
    std::unique_ptr<net::Simulator> network_;
    std::unique_ptr<MetadataCluster> metadata_;
    std::unique_ptr<StorageEngine> engine_;
};

}  // namespace rdrive
