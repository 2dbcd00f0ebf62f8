#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rdrive/network.hpp"
#include "rdrive/rng.hpp"
#include "rdrive/types.hpp"

// Scripted scenarios over the planner, engine and simulator; every run is
// fully determined by its spec and seed, and every table has a CSV form.
namespace rdrive::harness {

struct ScenarioSpec {
    std::vector<int> networkSizes = {30, 20, 10};
    double fileSizeMb = 500.0;
    double requiredLifetimeMin = 300.0;
    std::vector<double> waSweep = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
    double storageMean = 100.0;
    double storageSpread = 20.0;
    double timeMean = 300.0;
    double timeSpread = 80.0;
    // "(100, 20)" is read as (mean, standard deviation) by default; set this
    // to treat the second number as a variance instead.
    bool spreadIsVariance = false;
    int runs = 30;
    uint64_t seed = 1;
};

// Normal draw truncated at 0 by rejection.
double sampleTruncatedNormal(Rng& rng, double mean, double spread, bool spreadIsVariance);

// The device pool for one (networkSize, run) cell; identical across scenario
// functions so sweeps see the same worlds.
std::vector<DeviceProfile> sampleDevices(const ScenarioSpec& spec, int networkSize, int run);

struct AchievedCostRow {
    double wa = 0.0;
    int networkSize = 0;
    double meanCost = 0.0;
    double meanK = 0.0;
    double meanN = 0.0;
    int infeasibleRuns = 0;
};

std::vector<AchievedCostRow> runAchievedCost(const ScenarioSpec& spec);
std::string achievedCostCsv(const std::vector<AchievedCostRow>& rows);

struct CodeRateRow {
    double wa = 0.0;
    int networkSize = 0;
    double meanCodeRate = 0.0;
    double meanEncodedMb = 0.0;  // F' = F * n / k
    int infeasibleRuns = 0;
};

std::vector<CodeRateRow> runCodeRateSweep(const ScenarioSpec& spec);
std::string codeRateCsv(const std::vector<CodeRateRow>& rows);

// Two 4-device edges bridged by a single data mule; an edge-1 device stores
// one (8, 4)-coded file across all eight devices and an edge-2 device
// retrieves it once the mule has ferried the far half of the fragments.
struct InterEdgeSpec {
    uint64_t seed = 7;
    uint64_t fileBytes = 100'000'000;
    net::Tick dwellTicks = 30;
    net::Tick periodTicks = 120;
    uint64_t requestTtlSeconds = 60;
    int advanceBudget = 5000;
};

struct FragmentDelivery {
    uint32_t fragmentIndex = 0;  // 0-based
    Guid holder;
    net::Tick deliveryTick = 0;
    bool viaMule = false;
};

struct InterEdgeResult {
    std::vector<FragmentDelivery> deliveries;  // one per fragment, index order
    net::Tick firstMuleWindowTick = 0;         // first mule->edge-2 contact
    bool edge2GetMatches = false;
    std::vector<net::TraceEvent> trace;
};

InterEdgeResult runInterEdge(const InterEdgeSpec& spec);
std::string interEdgeCsv(const InterEdgeResult& result);

// Kills every holder subset up to n-k (plus the n-k+1 boundary) and records
// whether retrieval survives.
struct ResilienceSpec {
    std::vector<std::pair<int, int>> codings = {{1, 2}, {2, 3}, {2, 4}, {3, 5}, {4, 6}};
    uint64_t fileBytes = 65536;
    uint64_t seed = 11;
    bool exhaustive = true;  // false: one kill set per size
};

struct ResilienceRow {
    int k = 0;
    int n = 0;
    int killed = 0;
    uint64_t killMask = 0;
    bool success = false;
};

std::vector<ResilienceRow> runResilienceSweep(const ResilienceSpec& spec);
std::string resilienceCsv(const std::vector<ResilienceRow>& rows);

}  // namespace rdrive::harness
