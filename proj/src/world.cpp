#include "rdrive/world.hpp"

#include <algorithm>

#include "json.hpp"

namespace rdrive {

namespace {

using nlohmann::json;

net::LinkModel linkModelFromJson(const json& j) {
    net::LinkModel model;
    if (j.contains("availability")) {
        model.mode = net::LinkModel::Mode::Probabilistic;
        model.availability = j.at("availability").get<double>();
    }
    if (j.contains("latencyTicks")) model.latencyTicks = j.at("latencyTicks").get<net::Tick>();
    if (j.contains("bandwidthBytesPerTick")) {
        model.bandwidthBytesPerTick = j.at("bandwidthBytesPerTick").get<uint64_t>();
    }
    return model;
}

}  // namespace

WorldConfig WorldConfig::fromJson(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::InvalidParameters, std::string("invalid world config JSON: ") + e.what());
    }
    WorldConfig config;
    if (j.contains("seed")) config.seed = j.at("seed").get<uint64_t>();
    if (j.contains("metadataReplicas")) config.metadataReplicas = j.at("metadataReplicas").get<int>();
    for (const auto& d : j.at("devices")) {
        config.devices.emplace_back(Guid(d.at("guid").get<std::string>()),
                                    d.at("storageMb").get<double>(),
                                    d.at("remainingTimeMinutes").get<double>());
    }
    if (j.contains("caller")) {
        config.caller = Guid(j.at("caller").get<std::string>());
    } else if (!config.devices.empty()) {
        config.caller = config.devices.front().guid;
    }
    if (j.contains("extraNodes")) {
        for (const auto& node : j.at("extraNodes")) config.extraNodes.push_back(Guid(node.get<std::string>()));
    }
    if (j.contains("defaults")) {
        const auto& d = j.at("defaults");
        if (d.contains("availabilityWeight")) {
            config.engine.defaultAvailabilityWeight = d.at("availabilityWeight").get<double>();
        }
        if (d.contains("requiredLifetimeMinutes")) {
            config.engine.defaultRequiredLifetimeMin = d.at("requiredLifetimeMinutes").get<double>();
        }
        if (d.contains("blockSizeBytes")) config.engine.blockSizeBytes = d.at("blockSizeBytes").get<uint64_t>();
        if (d.contains("requestTtlSeconds")) {
            config.engine.fragmentRequestTtlSeconds = d.at("requestTtlSeconds").get<uint64_t>();
        }
    }
    if (j.contains("network")) {
        const auto& n = j.at("network");
        if (n.contains("tickLengthSeconds")) {
            config.network.tickLengthSeconds = n.at("tickLengthSeconds").get<double>();
        }
        if (n.contains("copyBudget")) config.network.copyBudget = n.at("copyBudget").get<int>();
        if (n.contains("packetBytes")) config.network.packetBytes = n.at("packetBytes").get<uint64_t>();
        if (n.contains("defaultLink")) config.defaultLink = linkModelFromJson(n.at("defaultLink"));
        if (n.contains("links")) {
            for (const auto& l : n.at("links")) {
                config.network.addLink(Guid(l.at("a").get<std::string>()),
                                       Guid(l.at("b").get<std::string>()), linkModelFromJson(l));
            }
        }
    } else {
        config.defaultLink = net::LinkModel{};
    }
    return config;
}

WorldConfig WorldConfig::generated(int deviceCount, uint64_t seed) {
    if (deviceCount < 1) raise(Errc::InvalidParameters, "world needs at least one device");
    WorldConfig config;
    config.seed = seed;
    config.metadataReplicas = std::min(3, deviceCount - (deviceCount + 1) % 2);
    if (config.metadataReplicas < 1) config.metadataReplicas = 1;
    for (int i = 0; i < deviceCount; ++i) {
        config.devices.emplace_back(Guid::synthetic("node", static_cast<uint64_t>(i)), 1000.0, 400.0);
    }
    config.caller = config.devices.front().guid;
    net::LinkModel link;
    link.availability = 1.0;
    link.latencyTicks = 1;
    link.bandwidthBytesPerTick = 8ull << 20;
    config.defaultLink = link;
    return config;
}

World::World(WorldConfig config) : config_(std::move(config)) {
    if (config_.devices.empty()) raise(Errc::InvalidParameters, "world has no devices");
    if (config_.caller.empty()) config_.caller = config_.devices.front().guid;

    net::NetworkConfig networkConfig = config_.network;
    networkConfig.seed = config_.seed;
    networkConfig.nodes.clear();
    for (const auto& device : config_.devices) networkConfig.nodes.push_back(device.guid);
    for (const auto& node : config_.extraNodes) networkConfig.nodes.push_back(node);
    const bool callerIsNode =
        std::find(networkConfig.nodes.begin(), networkConfig.nodes.end(), config_.caller) !=
        networkConfig.nodes.end();
    if (!callerIsNode) networkConfig.nodes.push_back(config_.caller);
    if (config_.defaultLink) {
        // Full mesh among storage devices; the caller joins it so CLI
        // sessions can reach every device.
        std::vector<Guid> meshed = networkConfig.nodes;
        for (size_t i = 0; i < meshed.size(); ++i) {
            for (size_t j = i + 1; j < meshed.size(); ++j) {
                const auto key = meshed[i] < meshed[j] ? std::make_pair(meshed[i], meshed[j])
                                                       : std::make_pair(meshed[j], meshed[i]);
                if (!networkConfig.links.count(key)) networkConfig.links[key] = *config_.defaultLink;
            }
        }
    }
    network_ = std::make_unique<net::Simulator>(std::move(networkConfig));

    if (config_.metadataReplicas < 1 ||
        config_.metadataReplicas > static_cast<int>(config_.devices.size())) {
        raise(Errc::InvalidParameters, "metadata replica count must fit the device list");
    }
    std::vector<Guid> replicas;
    for (int i = 0; i < config_.metadataReplicas; ++i) replicas.push_back(config_.devices[static_cast<size_t>(i)].guid);
    metadata_ = std::make_unique<MetadataCluster>(std::move(replicas), config_.caller, 0);

    engine_ = std::make_unique<StorageEngine>(*metadata_, *network_, config_.devices, config_.engine,
                                              config_.seed ^ 0x52447256ull);
}

}  // namespace rdrive
