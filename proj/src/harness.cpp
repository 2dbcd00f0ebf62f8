#include "rdrive/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rdrive/engine.hpp"
#include "rdrive/metadata.hpp"
#include "rdrive/planner.hpp"
#include "rdrive/world.hpp"

namespace rdrive::harness {

namespace {

std::string formatDouble(double value) {
    char buffer[48];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

uint64_t cellSeed(uint64_t seed, int networkSize, int run) {
    uint64_t x = seed;
    x ^= static_cast<uint64_t>(networkSize) * 0x9E3779B97F4A7C15ull;
    x ^= static_cast<uint64_t>(run) * 0xC2B2AE3D27D4EB4Full;
    return x;
}

Bytes randomBytes(Rng& rng, size_t count) {
    Bytes bytes(count);
    rng.fillBytes(bytes);
    return bytes;
}

}  // namespace

double sampleTruncatedNormal(Rng& rng, double mean, double spread, bool spreadIsVariance) {
    const double sigma = spreadIsVariance ? std::sqrt(spread) : spread;
    for (;;) {
        const double value = mean + sigma * rng.nextGaussian();
        if (value >= 0.0) return value;
    }
}

std::vector<DeviceProfile> sampleDevices(const ScenarioSpec& spec, int networkSize, int run) {
    Rng rng(cellSeed(spec.seed, networkSize, run));
    std::vector<DeviceProfile> devices;
    devices.reserve(static_cast<size_t>(networkSize));
    for (int i = 0; i < networkSize; ++i) {
        const double storage =
            sampleTruncatedNormal(rng, spec.storageMean, spec.storageSpread, spec.spreadIsVariance);
        const double time =
            sampleTruncatedNormal(rng, spec.timeMean, spec.timeSpread, spec.spreadIsVariance);
        devices.emplace_back(Guid::synthetic("dev", static_cast<uint64_t>(i)), storage, time);
    }
    return devices;
}

std::vector<AchievedCostRow> runAchievedCost(const ScenarioSpec& spec) {
    std::vector<AchievedCostRow> rows;
    for (const double wa : spec.waSweep) {
        for (const int networkSize : spec.networkSizes) {
            AchievedCostRow row;
            row.wa = wa;
            row.networkSize = networkSize;
            int feasible = 0;
            for (int run = 0; run < spec.runs; ++run) {
                planner::PlannerInputs inputs;
                inputs.fileSizeMb = spec.fileSizeMb;
                inputs.requiredLifetimeMin = spec.requiredLifetimeMin;
                inputs.availabilityWeight = wa;
                inputs.devices = sampleDevices(spec, networkSize, run);
                try {
                    const CodingPlan plan = planner::plan(inputs);
                    row.meanCost += plan.cost;
                    row.meanK += plan.k;
                    row.meanN += plan.n;
                    ++feasible;
                } catch (const Error& e) {
                    if (e.code() != Errc::NoFeasiblePlan) throw;
                    ++row.infeasibleRuns;
                }
            }
            if (feasible > 0) {
                row.meanCost /= feasible;
                row.meanK /= feasible;
                row.meanN /= feasible;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::string achievedCostCsv(const std::vector<AchievedCostRow>& rows) {
    std::ostringstream out;
    out << "wa,networkSize,meanCost,meanK,meanN,infeasibleRuns\n";
    for (const auto& row : rows) {
        out << formatDouble(row.wa) << ',' << row.networkSize << ',' << formatDouble(row.meanCost)
            << ',' << formatDouble(row.meanK) << ',' << formatDouble(row.meanN) << ','
            << row.infeasibleRuns << '\n';
    }
    return out.str();
}

std::vector<CodeRateRow> runCodeRateSweep(const ScenarioSpec& spec) {
    std::vector<CodeRateRow> rows;
    for (const double wa : spec.waSweep) {
        for (const int networkSize : spec.networkSizes) {
            CodeRateRow row;
            row.wa = wa;
            row.networkSize = networkSize;
            int feasible = 0;
            for (int run = 0; run < spec.runs; ++run) {
                planner::PlannerInputs inputs;
                inputs.fileSizeMb = spec.fileSizeMb;
                inputs.requiredLifetimeMin = spec.requiredLifetimeMin;
                inputs.availabilityWeight = wa;
                inputs.devices = sampleDevices(spec, networkSize, run);
                try {
                    const CodingPlan plan = planner::plan(inputs);
                    row.meanCodeRate += plan.codeRate;
                    row.meanEncodedMb += plan.encodedSizeMb;
                    ++feasible;
                } catch (const Error& e) {
                    if (e.code() != Errc::NoFeasiblePlan) throw;
                    ++row.infeasibleRuns;
                }
            }
            if (feasible > 0) {
                row.meanCodeRate /= feasible;
                row.meanEncodedMb /= feasible;
            }
            rows.push_back(row);
        }
    }
    // Feasibility does not depend on the weight, so per network size the
    // chosen rate must be non-increasing in w_a for a fixed seed.
    for (const auto& a : rows) {
        for (const auto& b : rows) {
            if (a.networkSize != b.networkSize || a.wa <= b.wa) continue;
            if (a.infeasibleRuns != a.networkSize && a.meanCodeRate > b.meanCodeRate + 1e-9) {
                raise(Errc::InvalidParameters,
                      "code rate increased with w_a at NS=" + std::to_string(a.networkSize));
            }
        }
    }
    return rows;
}

std::string codeRateCsv(const std::vector<CodeRateRow>& rows) {
    std::ostringstream out;
    out << "wa,networkSize,meanCodeRate,meanEncodedMb,infeasibleRuns\n";
    for (const auto& row : rows) {
        out << formatDouble(row.wa) << ',' << row.networkSize << ',' << formatDouble(row.meanCodeRate)
            << ',' << formatDouble(row.meanEncodedMb) << ',' << row.infeasibleRuns << '\n';
    }
    return out.str();
}

InterEdgeResult runInterEdge(const InterEdgeSpec& spec) {
    // Edge 1 holds the file owner and the four longest-lived devices; edge 2
    // devices are short-lived, so fragment order matches device order.
    std::vector<DeviceProfile> devices;
    for (int i = 0; i < 4; ++i) {
        devices.emplace_back(Guid::synthetic("p1x", static_cast<uint64_t>(i)), 30.0,
                             400.0 - 10.0 * i);
    }
    for (int i = 0; i < 4; ++i) {
        devices.emplace_back(Guid::synthetic("p2x", static_cast<uint64_t>(i)), 30.0,
                             150.0 - 10.0 * i);
    }
    const Guid mule = Guid::synthetic("mule", 0);
    const Guid owner = devices[0].guid;   // P1
    const Guid reader = devices[4].guid;  // first edge-2 device

    net::NetworkConfig networkConfig;
    for (const auto& device : devices) networkConfig.nodes.push_back(device.guid);
    networkConfig.nodes.push_back(mule);
    networkConfig.seed = spec.seed;
    networkConfig.packetBytes = 1'000'000;
    networkConfig.copyBudget = 4;
    const auto mesh = net::LinkModel::probabilistic(1.0, 1, 5'000'000);
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            networkConfig.addLink(devices[static_cast<size_t>(i)].guid,
                                  devices[static_cast<size_t>(j)].guid, mesh);
            networkConfig.addLink(devices[static_cast<size_t>(4 + i)].guid,
                                  devices[static_cast<size_t>(4 + j)].guid, mesh);
        }
    }
    net::Simulator network(networkConfig);

    // The mule shuttles between the file owner and the whole far edge: a slow
    // pickup link in the first half-period, faster drop-off links in the
    // second.
    net::LinkModel pickup = net::LinkModel::probabilistic(1.0, 1, 1'000'000);
    net::LinkModel dropoff = net::LinkModel::probabilistic(1.0, 1, 5'000'000);
    const std::set<Guid> edge2 = {devices[4].guid, devices[5].guid, devices[6].guid, devices[7].guid};
    network.setMuleSchedule(mule, {owner}, {}, spec.periodTicks, spec.dwellTicks, pickup);
    network.setMuleSchedule(mule, {}, edge2, spec.periodTicks, spec.dwellTicks, dropoff);

    MetadataCluster metadata({devices[0].guid, devices[1].guid, devices[2].guid}, owner, 0);

    EngineConfig engineConfig;
    engineConfig.blockSizeBytes = 128ull << 20;  // single block, eight 25 MB fragments
    engineConfig.fragmentRequestTtlSeconds = spec.requestTtlSeconds;
    StorageEngine engine(metadata, network, devices, engineConfig, spec.seed);

    Rng dataRng(spec.seed ^ 0xDA7Aull);
    const Bytes original = randomBytes(dataRng, spec.fileBytes);

    PutRequest request;
    request.localBytes = original;
    request.rdrivePath = "/shared.bin";
    request.acl = AccessControlList::world(owner);
    request.availabilityWeight = 0.8;
    request.requiredLifetimeMin = 300.0;
    const Rnode rnode = engine.put(request, owner);

    InterEdgeResult result;
    result.firstMuleWindowTick = spec.periodTicks / 2;

    // Remote fragment pushes are the only traffic so far: sends happen in
    // fragment order, f1 stays on the owner.
    std::vector<uint64_t> pushMessageIds;
    for (const auto& event : network.trace()) {
        if (event.event == net::NetEvent::Send) pushMessageIds.push_back(event.messageId);
    }
    engine.settle(spec.advanceBudget);

    result.deliveries.push_back({0, owner, 0, false});
    for (size_t i = 0; i < pushMessageIds.size(); ++i) {
        for (const auto& event : network.trace()) {
            if (event.event == net::NetEvent::Deliver && event.messageId == pushMessageIds[i]) {
                const uint32_t fragmentIndex = static_cast<uint32_t>(i + 1);
                result.deliveries.push_back({fragmentIndex, event.to, event.tick,
                                             event.tick >= result.firstMuleWindowTick});
            }
        }
    }
    std::sort(result.deliveries.begin(), result.deliveries.end(),
              [](const auto& a, const auto& b) { return a.fragmentIndex < b.fragmentIndex; });

    try {
        result.edge2GetMatches = engine.get(rnode.filePath, reader) == original;
    } catch (const Error& e) {
        if (e.code() != Errc::IrrecoverableBlock) throw;
        result.edge2GetMatches = false;  // expected when the mule never dwells
    }
    result.trace = network.trace();
    return result;
}

std::string interEdgeCsv(const InterEdgeResult& result) {
    std::ostringstream out;
    out << "fragment,holder,deliveryTick,viaMule\n";
    for (const auto& delivery : result.deliveries) {
        out << "f" << delivery.fragmentIndex + 1 << ',' << delivery.holder.value() << ','
            << delivery.deliveryTick << ',' << (delivery.viaMule ? 1 : 0) << '\n';
    }
    return out.str();
}

std::vector<ResilienceRow> runResilienceSweep(const ResilienceSpec& spec) {
    std::vector<ResilienceRow> rows;
    for (const auto& [k, n] : spec.codings) {
        // Fresh world per coding: one client plus n holder devices.
        std::vector<DeviceProfile> devices;
        devices.emplace_back(Guid::synthetic("client", 0), 0.0, 500.0);
        for (int i = 0; i < n; ++i) {
            devices.emplace_back(Guid::synthetic("holder", static_cast<uint64_t>(i)), 1000.0,
                                 400.0 - i);
        }
        const Guid client = devices[0].guid;

        WorldConfig worldConfig;
        worldConfig.seed = spec.seed;
        worldConfig.metadataReplicas = 1;
        worldConfig.caller = client;
        worldConfig.devices = devices;
        worldConfig.defaultLink = net::LinkModel::probabilistic(1.0, 1, 64ull << 20);
        World world(std::move(worldConfig));

        Rng dataRng(spec.seed ^ (static_cast<uint64_t>(k) << 16) ^ static_cast<uint64_t>(n));
        const Bytes original = randomBytes(dataRng, spec.fileBytes);

        PutRequest request;
        request.localBytes = original;
        request.rdrivePath = "/f" + std::to_string(k) + "x" + std::to_string(n) + ".bin";
        request.acl = AccessControlList::world(client);
        request.availabilityWeight = 0.5;
        request.requiredLifetimeMin = 300.0;
        request.planOverride = std::make_pair(k, n);
        const Rnode rnode = world.engine().put(request, client);
        world.engine().settle();

        std::vector<Guid> holders(static_cast<size_t>(n));
        for (uint32_t j = 0; j < static_cast<uint32_t>(n); ++j) {
            holders[j] = rnode.fragLocation.at({0, j});
        }

        auto attempt = [&](uint64_t mask, int killed) {
            for (const auto& holder : holders) world.engine().setDeviceAlive(holder, true);
            for (int j = 0; j < n; ++j) {
                if (mask & (1ull << j)) world.engine().setDeviceAlive(holders[static_cast<size_t>(j)], false);
            }
            ResilienceRow row;
            row.k = k;
            row.n = n;
            row.killed = killed;
            row.killMask = mask;
            try {
                row.success = world.engine().get(rnode.filePath, client) == original;
            } catch (const Error& e) {
                if (e.code() != Errc::IrrecoverableBlock) throw;
                row.success = false;
            }
            rows.push_back(row);
        };

        for (int killed = 0; killed <= n - k + 1; ++killed) {
            if (spec.exhaustive) {
                // All C(n, killed) masks, ascending.
                for (uint64_t mask = 0; mask < (1ull << n); ++mask) {
                    if (std::popcount(mask) == killed) attempt(mask, killed);
                }
            } else {
                attempt((1ull << killed) - 1, killed);
            }
        }
        for (const auto& holder : holders) world.engine().setDeviceAlive(holder, true);
    }
    return rows;
}

std::string resilienceCsv(const std::vector<ResilienceRow>& rows) {
    std::ostringstream out;
    out << "k,n,killed,killMask,getSucceeded\n";
    for (const auto& row : rows) {
        out << row.k << ',' << row.n << ',' << row.killed << ',' << row.killMask << ','
            << (row.success ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace rdrive::harness
