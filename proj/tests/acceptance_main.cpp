// Acceptance suite: every criterion prints one PASS/FAIL line with its
// runtime; the process exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "rdrive/command.hpp"
#include "rdrive/crypto.hpp"
#include "rdrive/harness.hpp"
#include "rdrive/metadata.hpp"
#include "rdrive/planner.hpp"
#include "rdrive/reed_solomon.hpp"
#include "rdrive/world.hpp"
#include "support/oracles.hpp"

using namespace rdrive;

namespace {

struct Checker {
    bool ok = true;
    std::string detail;

    void require(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

Bytes randomBytes(Rng& rng, size_t size) {
    Bytes bytes(size);
    rng.fillBytes(bytes);
    return bytes;
}

double seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- 1. Cost lower bounds (Table values) -------------------------------------

void criterionCostLowerBounds(Checker& c) {
    struct Row {
        double wa;
        double cost;
        double rate;
    };
    const std::vector<Row> rows = {
        {0.9, 0.6, 0.35}, {0.8, 0.8, 0.5}, {0.7, 0.91, 0.65}, {0.6, 0.98, 0.8}, {0.5, 1.0, 1.0}};
    for (const auto& row : rows) {
        const auto bound = planner::costLowerBound(row.wa, 30);
        c.require(std::abs(bound.cost - row.cost) <= 0.01,
                  "cost at wa=" + std::to_string(row.wa) + " is " + std::to_string(bound.cost));
        c.require(std::abs(bound.codeRate - row.rate) <= 0.02,
                  "rate at wa=" + std::to_string(row.wa) + " is " + std::to_string(bound.codeRate));
    }
}

// --- 2. Achieved cost table ---------------------------------------------------

void criterionAchievedCost(Checker& c) {
    harness::ScenarioSpec spec;  // 500 MB, T=300, (100,20)/(300,80), 30 runs
    spec.seed = 20260808;
    const auto rows = harness::runAchievedCost(spec);
    const auto find = [&](double wa, int ns) -> const harness::AchievedCostRow* {
        for (const auto& row : rows) {
            if (std::abs(row.wa - wa) < 1e-9 && row.networkSize == ns) return &row;
        }
        return nullptr;
    };

    const std::vector<std::pair<double, double>> ns30 = {
        {0.9, 0.6}, {0.8, 0.8}, {0.7, 0.9165}, {0.6, 0.9797}, {0.5, 1.0}};
    for (const auto& [wa, expected] : ns30) {
        const auto* row = find(wa, 30);
        c.require(row != nullptr, "missing row");
        if (row) {
            c.require(std::abs(row->meanCost - expected) <= 0.02,
                      "NS=30 wa=" + std::to_string(wa) + " meanCost=" + std::to_string(row->meanCost));
        }
    }

    const std::vector<std::pair<int, double>> fullWeight = {{30, 0.2402}, {20, 0.3613}, {10, 0.66}};
    double previous = 0.0;
    for (const auto& [ns, expected] : fullWeight) {
        const auto* row = find(1.0, ns);
        c.require(row != nullptr, "missing wa=1.0 row");
        if (!row) continue;
        c.require(std::abs(row->meanCost - expected) <= 0.1,
                  "wa=1.0 NS=" + std::to_string(ns) + " meanCost=" + std::to_string(row->meanCost));
        c.require(row->meanCost >= previous, "wa=1.0 cost must decrease with NS");
        previous = row->meanCost;
    }
}

// --- 3. Planner runtime bound -------------------------------------------------

void criterionPlannerRuntime(Checker& c) {
    harness::ScenarioSpec spec;
    spec.seed = 99;
    const auto time = [&](int networkSize) {
        planner::PlannerInputs inputs;
        inputs.fileSizeMb = 500;
        inputs.requiredLifetimeMin = 300;
        inputs.availabilityWeight = 0.9;
        inputs.devices = harness::sampleDevices(spec, networkSize, 0);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < 10; ++i) {
            try {
                (void)planner::plan(inputs);
            } catch (const Error&) {
            }
        }
        return seconds(start) / 10;
    };
    const double at30 = time(30);
    const double at10 = time(10);
    c.require(at30 < 1.0, "plan() at N=30 took " + std::to_string(at30) + " s");
    c.require(at10 < 0.05, "plan() at N=10 took " + std::to_string(at10) + " s");
}

// --- 4. Round-trip integrity --------------------------------------------------

void criterionRoundTrip(Checker& c) {
    WorldConfig config;
    config.seed = 1000;
    config.metadataReplicas = 3;
    for (int i = 0; i < 8; ++i) {
        config.devices.emplace_back(Guid::synthetic("rt", static_cast<uint64_t>(i)), 1e6, 400.0 - i);
    }
    config.caller = config.devices[0].guid;
    config.defaultLink = net::LinkModel::probabilistic(1.0, 1, 64ull << 20);
    World world(std::move(config));
    const Guid caller = world.defaultCaller();

    Rng rng(4242);
    const std::vector<uint64_t> blockSizes = {64ull << 10, 1ull << 20, 4ull << 20};
    for (int cycle = 0; cycle < 200; ++cycle) {
        // Log-uniform size in [1 B, 32 MiB]; resample the block size until the
        // (B,B) key split fits its 255-shard bound.
        const double exponent = rng.nextDouble() * 25.0;
        const size_t size = static_cast<size_t>(std::pow(2.0, exponent));
        uint64_t blockSize = blockSizes[rng.nextBounded(blockSizes.size())];
        while ((size + blockSize - 1) / blockSize > 255) {
            blockSize = blockSizes[rng.nextBounded(blockSizes.size())];
        }
        const Bytes data = randomBytes(rng, std::max<size_t>(1, size));

        PutRequest request;
        request.localBytes = data;
        request.rdrivePath = "/cycle.bin";
        request.acl.mode = AclMode::WORLD;
        request.availabilityWeight = static_cast<double>(rng.nextBounded(11)) / 10.0;
        request.requiredLifetimeMin = 300.0;
        request.blockSizeBytes = blockSize;
        world.engine().put(request, caller);
        world.engine().settle();
        const Bytes back = world.engine().get("/cycle.bin", caller);
        c.require(back == data, "cycle " + std::to_string(cycle) + " mismatched");
        world.engine().rm("/cycle.bin", caller);
        world.engine().settle();
        if (!c.ok) return;
    }
}

// --- 5. Fault-tolerance boundary ----------------------------------------------

void criterionFaultTolerance(Checker& c) {
    harness::ResilienceSpec spec;
    spec.seed = 2026;
    spec.exhaustive = true;
    const auto rows = harness::runResilienceSweep(spec);
    std::set<std::pair<int, int>> sawBoundaryFailure;
    for (const auto& row : rows) {
        if (row.killed <= row.n - row.k) {
            c.require(row.success, "killed=" + std::to_string(row.killed) + " of (" +
                                       std::to_string(row.k) + "," + std::to_string(row.n) +
                                       ") mask=" + std::to_string(row.killMask) + " failed");
        } else if (!row.success) {
            sawBoundaryFailure.insert({row.k, row.n});
        }
    }
    for (const auto& [k, n] : spec.codings) {
        c.require(sawBoundaryFailure.count({k, n}) == 1,
                  "(" + std::to_string(k) + "," + std::to_string(n) +
                      ") never failed at n-k+1 kills");
    }
}

// --- 6. Any-k decodability ------------------------------------------------------

void criterionAnyK(Checker& c) {
    Rng rng(6);
    for (int n = 1; n <= 8 && c.ok; ++n) {
        for (int k = 1; k <= n && c.ok; ++k) {
            const Bytes block = randomBytes(rng, 50 + rng.nextBounded(30));
            const auto shards = rs::encode(block, k, n);
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                std::vector<int> keep;
                for (int i = 0; i < n; ++i) {
                    if (mask & (1u << i)) keep.push_back(i);
                }
                if (keep.size() != static_cast<size_t>(k)) continue;
                rs::ShardSet subset = shards;
                for (int i = 0; i < n; ++i) {
                    if (std::find(keep.begin(), keep.end(), i) == keep.end()) {
                        subset.shards[static_cast<size_t>(i)].reset();
                    }
                }
                const Bytes decoded = rs::decode(subset);
                const auto reference = oracle::rsDecode(shards, keep);
                c.require(decoded == block, "decode mismatch");
                c.require(reference.has_value() && *reference == block, "oracle mismatch");
                if (!c.ok) return;
            }
        }
    }
}

// --- 7. Key-shard threshold -----------------------------------------------------

void criterionKeyShardThreshold(Checker& c) {
    Rng rng(7);
    for (int b = 1; b <= 32; ++b) {
        for (int trial = 0; trial < 100; ++trial) {
            const crypto::FileKey key = crypto::FileKey::random(rng);
            const auto shards = crypto::splitKey(key, b, rng);
            const crypto::FileKey joined = crypto::joinKey(shards, b);
            c.require(joined == key, "join with all B shards failed at B=" + std::to_string(b));
            if (b > 1) {
                std::vector<crypto::KeyShard> partial(shards.begin(), shards.end() - 1);
                bool threw = false;
                try {
                    (void)crypto::joinKey(partial, b);
                } catch (const Error& e) {
                    threw = e.code() == Errc::InsufficientShards;
                }
                c.require(threw, "B-1 shards did not raise InsufficientShards");
            }
            if (!c.ok) return;
        }
    }
}

// --- 8. Tamper detection ---------------------------------------------------------

void criterionTamperDetection(Checker& c) {
    WorldConfig config;
    config.seed = 8;
    config.metadataReplicas = 1;
    config.devices.emplace_back(Guid::synthetic("client", 0), 0.0, 500.0);
    for (int i = 0; i < 4; ++i) {
        config.devices.emplace_back(Guid::synthetic("h", static_cast<uint64_t>(i)), 2000.0,
                                    400.0 - i);
    }
    config.caller = config.devices[0].guid;
    config.defaultLink = net::LinkModel::probabilistic(1.0, 1, 16ull << 20);
    World world(std::move(config));
    const Guid caller = world.defaultCaller();

    Rng rng(88);
    const Bytes data = randomBytes(rng, 256 << 10);
    PutRequest request;
    request.localBytes = data;
    request.rdrivePath = "/tamper.bin";
    request.acl.mode = AclMode::WORLD;
    request.availabilityWeight = 0.5;
    request.requiredLifetimeMin = 300.0;
    request.planOverride = {2, 4};
    request.blockSizeBytes = 128 << 10;
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();

    // Holders ranked by energy hold fragments 0..n-1 in order; retrieval uses
    // the top two unless one is dead, in which case a parity holder steps in.
    for (int sample = 0; sample < 500; ++sample) {
        const uint32_t block = static_cast<uint32_t>(rng.nextBounded(rnode.blockCount));
        const bool exerciseParity = sample % 3 == 2;
        uint32_t fragment = static_cast<uint32_t>(rng.nextBounded(2));
        if (exerciseParity) {
            world.engine().setDeviceAlive(rnode.fragLocation.at({block, 0}), false);
            fragment = 2;  // with holder 0 dead, holders 1 and 2 serve the block
        }
        const Guid holder = rnode.fragLocation.at({block, fragment});
        const auto stored = world.engine().storedFragment(holder, rnode.fileId, block, fragment);
        if (!stored) {
            c.require(false, "fragment missing before corruption");
            return;
        }
        const size_t bit = rng.nextBounded(stored->payload.size() * 8);
        world.engine().corruptStoredFragment(holder, rnode.fileId, block, fragment, bit);
        bool authFailure = false;
        try {
            (void)world.engine().get("/tamper.bin", caller);
        } catch (const Error& e) {
            authFailure = e.code() == Errc::AuthenticationFailure;
        }
        // Undo the corruption and any holder kill.
        world.engine().corruptStoredFragment(holder, rnode.fileId, block, fragment, bit);
        if (exerciseParity) {
            world.engine().setDeviceAlive(rnode.fragLocation.at({block, 0}), true);
        }
        c.require(authFailure, "sample " + std::to_string(sample) + " was not detected");
        if (!c.ok) return;
    }
    c.require(world.engine().get("/tamper.bin", caller) == data, "restored file no longer intact");
}

// --- 9. Quorum survivability -----------------------------------------------------

void criterionQuorum(Checker& c) {
    for (const int r : {3, 5}) {
        std::vector<Guid> replicas;
        for (int i = 0; i < r; ++i) replicas.push_back(Guid::synthetic("q", static_cast<uint64_t>(i)));
        const Guid owner = Guid::synthetic("owner", 0);
        MetadataCluster cluster(replicas, owner, 0);

        Rnode dir;
        dir.rnodeType = RnodeType::DIRECTORY;
        dir.filePath = "/a";
        dir.fileName = "a";
        dir.permission = AccessControlList::world(owner);
        cluster.createRnode("/a", dir, owner);

        for (int i = 0; i < r / 2; ++i) cluster.setReplicaAlive(replicas[static_cast<size_t>(i)], false);
        try {
            Rnode sub = dir;
            sub.filePath = "/a/b";
            sub.fileName = "b";
            cluster.createRnode("/a/b", sub, owner);
            (void)cluster.getRnode("/a/b", owner);
            cluster.setAcl("/a/b", AccessControlList::ownerOnly(owner), owner);
            (void)cluster.getAcl("/a/b", owner);
            cluster.deleteRnode("/a/b", owner);
        } catch (const Error& e) {
            c.require(false, std::string("ops failed with floor(r/2) kills: ") + e.what());
        }

        cluster.setReplicaAlive(replicas[static_cast<size_t>(r / 2)], false);
        bool quorumError = false;
        try {
            Rnode sub = dir;
            sub.filePath = "/a/c";
            sub.fileName = "c";
            cluster.createRnode("/a/c", sub, owner);
        } catch (const Error& e) {
            quorumError = e.code() == Errc::QuorumUnavailable;
        }
        c.require(quorumError, "write succeeded without a majority at r=" + std::to_string(r));

        // Revive one replica to regain a majority, then reform to full size.
        cluster.setReplicaAlive(replicas[0], true);
        std::set<Guid> failed;
        std::vector<Guid> promoted;
        for (int i = 1; i <= r / 2; ++i) {
            failed.insert(replicas[static_cast<size_t>(i)]);
            promoted.push_back(Guid::synthetic("new", static_cast<uint64_t>(i)));
        }
        cluster.reformEnsemble(failed, promoted);
        c.require(cluster.replicaCount() == r, "reform changed the replica count");
        c.require(cluster.aliveCount() == r, "reform left dead members");

        const auto views = cluster.replicaViews();
        for (const auto& view : views) {
            c.require(view.store == views.front().store, "replica stores diverge after reform");
            c.require(view.store.count("/a") == 1, "committed write lost after reform");
        }
    }
}

// --- 10. Inter-edge data mule ------------------------------------------------------

void criterionInterEdge(Checker& c) {
    harness::InterEdgeSpec spec;
    const auto first = harness::runInterEdge(spec);
    c.require(first.deliveries.size() == 8, "expected eight fragment deliveries");
    if (!c.ok) return;

    for (const auto& delivery : first.deliveries) {
        if (delivery.fragmentIndex <= 3) {
            c.require(delivery.deliveryTick < first.firstMuleWindowTick,
                      "f" + std::to_string(delivery.fragmentIndex + 1) + " was not intra-edge");
            c.require(!delivery.viaMule, "near fragment flagged as mule traffic");
        } else {
            c.require(delivery.deliveryTick >= first.firstMuleWindowTick,
                      "f" + std::to_string(delivery.fragmentIndex + 1) + " skipped the mule");
            c.require(delivery.viaMule, "far fragment not flagged as mule traffic");
        }
    }
    for (size_t i = 5; i < 8; ++i) {
        c.require(first.deliveries[i].deliveryTick >= first.deliveries[i - 1].deliveryTick,
                  "mule deliveries out of order");
    }
    c.require(first.edge2GetMatches, "edge-2 retrieval mismatched the original bytes");

    const auto second = harness::runInterEdge(spec);
    c.require(harness::interEdgeCsv(first) == harness::interEdgeCsv(second),
              "inter-edge deliveries differ across identical runs");
    std::ostringstream t1;
    std::ostringstream t2;
    net::Simulator::writeTraceCsv(t1, first.trace);
    net::Simulator::writeTraceCsv(t2, second.trace);
    c.require(t1.str() == t2.str(), "inter-edge traces differ across identical runs");
}

// --- 11. Version monotonicity --------------------------------------------------------

void criterionVersionMonotonicity(Checker& c) {
    WorldConfig config;
    config.seed = 11;
    config.metadataReplicas = 1;
    config.devices.emplace_back(Guid::synthetic("dev", 0), 100.0, 300.0);
    config.caller = config.devices[0].guid;
    config.defaultLink = net::LinkModel{};
    World world(std::move(config));
    const Guid device = Guid::synthetic("dev", 0);

    Rng rng(111);
    for (int i = 0; i < 2000; ++i) {
        Fragment fragment;
        fragment.fileId = {static_cast<uint8_t>(rng.nextBounded(2))};
        fragment.blockIndex = static_cast<uint32_t>(rng.nextBounded(3));
        fragment.fragmentIndex = static_cast<uint32_t>(rng.nextBounded(3));
        fragment.n = 3;
        fragment.k = 1;
        fragment.timeStamp = rng.nextBounded(10000);
        fragment.payload = randomBytes(rng, 8);
        const auto before = world.engine().storedFragment(device, fragment.fileId,
                                                          fragment.blockIndex, fragment.fragmentIndex);
        world.engine().handleFragmentArrival(fragment, device);
        const auto after = world.engine().storedFragment(device, fragment.fileId,
                                                         fragment.blockIndex, fragment.fragmentIndex);
        if (before && after) {
            c.require(after->timeStamp >= before->timeStamp, "stored timestamp decreased");
        }
        if (!c.ok) return;
    }
}

// --- 12. Grammar suite ------------------------------------------------------------------

void criterionGrammar(Checker& c) {
    Rng rng(12);
    int accepted = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        cmd::CommandAst ast;
        ast.option = static_cast<cmd::CommandOption>(rng.nextBounded(7));
        ast.rdrivePath = "/p" + std::to_string(rng.nextBounded(500));
        if (ast.option == cmd::CommandOption::PUT || ast.option == cmd::CommandOption::GET) {
            ast.localPath = "/l" + std::to_string(rng.nextBounded(500));
        }
        const bool wantsPermission = ast.option == cmd::CommandOption::SETFACL ||
                                     ((ast.option == cmd::CommandOption::PUT ||
                                       ast.option == cmd::CommandOption::MKDIR) &&
                                      rng.nextDouble() < 0.5);
        if (wantsPermission) {
            cmd::PermissionSpec spec;
            const double roll = rng.nextDouble();
            if (roll < 0.3) {
                spec.mode = AclMode::OWNER;
            } else if (roll < 0.6) {
                spec.mode = AclMode::WORLD;
            } else {
                spec.mode = AclMode::USERS;
                const int users = 1 + static_cast<int>(rng.nextBounded(4));
                for (int i = 0; i < users; ++i) {
                    spec.users.push_back(Guid::synthetic("g", rng.nextBounded(100)));
                }
            }
            ast.permission = spec;
        }
        const std::string text = cmd::render(ast);
        try {
            const cmd::CommandAst parsed = cmd::parseCommand(text);
            c.require(parsed == ast, "pretty-print round trip broke: " + text);
            ++accepted;
        } catch (const Error& e) {
            c.require(false, std::string("derivation rejected: ") + text + " (" + e.what() + ")");
        }
        if (!c.ok) return;
    }
    c.require(accepted == 10000, "not all derivations parsed");

    for (int trial = 0; trial < 10000; ++trial) {
        std::string text;
        switch (rng.nextBounded(5)) {
            case 0: text = "dfs -get /only-one-path"; break;
            case 1: text = "dfs -setfacl /p " + std::string(39, 'a'); break;
            case 2: text = "dfs -wat /p"; break;
            case 3: text = "dfs -ls /p trailing"; break;
            case 4: text = "dfs -put relative /p"; break;
        }
        bool rejectedWithPosition = false;
        try {
            (void)cmd::parseCommand(text);
        } catch (const Error& e) {
            const std::string what = e.what();
            rejectedWithPosition = what.find("offset") != std::string::npos ||
                                   what.find("end of input") != std::string::npos;
        }
        c.require(rejectedWithPosition, "malformed command accepted or unpositioned: " + text);
        if (!c.ok) return;
    }
}

// --- 13. Determinism of harness CSVs --------------------------------------------------

void criterionDeterminism(Checker& c) {
    harness::ScenarioSpec spec;
    spec.runs = 10;
    spec.seed = 13;
    c.require(harness::achievedCostCsv(harness::runAchievedCost(spec)) ==
                  harness::achievedCostCsv(harness::runAchievedCost(spec)),
              "achieved-cost CSV differs");
    c.require(harness::codeRateCsv(harness::runCodeRateSweep(spec)) ==
                  harness::codeRateCsv(harness::runCodeRateSweep(spec)),
              "code-rate CSV differs");
    harness::ResilienceSpec resilience;
    resilience.codings = {{2, 3}, {2, 4}};
    c.require(harness::resilienceCsv(harness::runResilienceSweep(resilience)) ==
                  harness::resilienceCsv(harness::runResilienceSweep(resilience)),
              "resilience CSV differs");
}

struct Criterion {
    int id;
    const char* name;
    std::function<void(Checker&)> run;
    double budgetSeconds;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "cost-lower-bounds", criterionCostLowerBounds, 1.0},
        {2, "achieved-cost-table", criterionAchievedCost, 60.0},
        {3, "planner-runtime", criterionPlannerRuntime, 10.0},
        {4, "round-trip-integrity", criterionRoundTrip, 120.0},
        {5, "fault-tolerance-boundary", criterionFaultTolerance, 300.0},
        {6, "any-k-decodability", criterionAnyK, 60.0},
        {7, "key-shard-threshold", criterionKeyShardThreshold, 60.0},
        {8, "tamper-detection", criterionTamperDetection, 120.0},
        {9, "quorum-survivability", criterionQuorum, 30.0},
        {10, "inter-edge-data-mule", criterionInterEdge, 30.0},
        {11, "version-monotonicity", criterionVersionMonotonicity, 30.0},
        {12, "grammar-suite", criterionGrammar, 60.0},
        {13, "harness-determinism", criterionDeterminism, 120.0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(checker);
        } catch (const std::exception& e) {
            checker.require(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds(start);
        checker.require(elapsed < criterion.budgetSeconds,
                        "runtime " + std::to_string(elapsed) + " s exceeded budget");
        std::printf("%s  %2d. %-26s (%.2f s)%s%s\n", checker.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, elapsed, checker.ok ? "" : " - ",
                    checker.ok ? "" : checker.detail.c_str());
        std::fflush(stdout);
        if (!checker.ok) ++failures;
    }
    if (failures == 0) {
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    } else {
        std::printf("acceptance: %d criteria FAILED\n", failures);
    }
    return failures;
}
