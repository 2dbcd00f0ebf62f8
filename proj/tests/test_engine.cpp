#include <atomic>
#include <thread>

#include "doctest.h"

#include "rdrive/command.hpp"
#include "rdrive/world.hpp"

using namespace rdrive;

namespace {

Bytes randomBytes(Rng& rng, size_t size) {
    Bytes bytes(size);
    rng.fillBytes(bytes);
    return bytes;
}

WorldConfig holderWorld(int holderCount, uint64_t seed) {
    WorldConfig config;
    config.seed = seed;
    config.metadataReplicas = 1;
    std::vector<DeviceProfile> devices;
    devices.emplace_back(Guid::synthetic("client", 0), 0.0, 500.0);
    for (int i = 0; i < holderCount; ++i) {
        devices.emplace_back(Guid::synthetic("holder", static_cast<uint64_t>(i)), 2000.0,
                             400.0 - i);
    }
    config.devices = devices;
    config.caller = devices[0].guid;
    config.defaultLink = net::LinkModel::probabilistic(1.0, 1, 16ull << 20);
    return config;
}

PutRequest simplePut(Bytes bytes, const std::string& path) {
    PutRequest request;
    request.localBytes = std::move(bytes);
    request.rdrivePath = path;
    request.acl.mode = AclMode::WORLD;
    request.availabilityWeight = 0.5;
    request.requiredLifetimeMin = 300.0;
    return request;
}

}  // namespace

TEST_CASE("put splits by ceiling arithmetic and get round-trips") {
    World world(WorldConfig::generated(6, 42));
    const Guid caller = world.defaultCaller();
    Rng rng(1);
    const Bytes data = randomBytes(rng, 10 << 20);

    PutRequest request = simplePut(data, "/big.bin");
    request.blockSizeBytes = 4 << 20;
    const Rnode rnode = world.engine().put(request, caller);
    CHECK(rnode.blockCount == 3);
    CHECK(rnode.fileSize == data.size());
    CHECK(rnode.fragLocation.size() == 3u * rnode.n);
    world.engine().settle();
    CHECK(world.engine().get("/big.bin", caller) == data);
}

TEST_CASE("empty files are rejected") {
    World world(WorldConfig::generated(4, 43));
    PutRequest request = simplePut({}, "/empty");
    try {
        world.engine().put(request, world.defaultCaller());
        FAIL("expected InvalidParameters");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidParameters);
    }
}

TEST_CASE("plan override (4,8) dispatches eight fragments per block") {
    World world(holderWorld(8, 44));
    const Guid caller = world.defaultCaller();
    Rng rng(2);
    const Bytes data = randomBytes(rng, 1 << 20);
    PutRequest request = simplePut(data, "/f.bin");
    request.planOverride = {4, 8};
    const Rnode rnode = world.engine().put(request, caller);
    CHECK(rnode.k == 4);
    CHECK(rnode.n == 8);
    CHECK(rnode.blockCount == 1);
    CHECK(rnode.fragLocation.size() == 8);

    int sends = 0;
    for (const auto& event : world.network().trace()) {
        if (event.event == net::NetEvent::Send) ++sends;
    }
    CHECK(sends == 8);  // the caller is not a holder, so all 8 go remote
    world.engine().settle();
    for (uint32_t j = 0; j < 8; ++j) {
        const Guid holder = rnode.fragLocation.at({0, j});
        CHECK(world.engine().storedFragment(holder, rnode.fileId, 0, j).has_value());
    }
    CHECK(world.engine().get("/f.bin", caller) == data);
}

TEST_CASE("metadata commit failure means zero fragments anywhere") {
    World world(holderWorld(5, 45));
    const Guid caller = world.defaultCaller();
    Rng rng(3);

    SUBCASE("missing parent") {
        try {
            world.engine().put(simplePut(randomBytes(rng, 1000), "/nodir/f.bin"), caller);
            FAIL("expected ParentNotFound");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::ParentNotFound);
        }
    }
    SUBCASE("quorum lost") {
        world.metadata().setReplicaAlive(Guid::synthetic("client", 0), false);
        try {
            world.engine().put(simplePut(randomBytes(rng, 1000), "/f.bin"), caller);
            FAIL("expected QuorumUnavailable");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::QuorumUnavailable);
        }
    }
    for (const auto& guid : world.engine().deviceGuids()) {
        CHECK(world.engine().deviceFragments(guid).empty());
    }
    for (const auto& event : world.network().trace()) {
        CHECK(event.event != net::NetEvent::Send);
    }
}

TEST_CASE("acl enforcement on get") {
    World world(WorldConfig::generated(5, 46));
    const Guid owner = world.defaultCaller();
    const Guid other = world.engine().deviceGuids()[1];
    Rng rng(4);
    PutRequest request = simplePut(randomBytes(rng, 2048), "/private.bin");
    request.acl.mode = AclMode::OWNER;
    world.engine().put(request, owner);
    world.engine().settle();
    CHECK_NOTHROW(world.engine().get("/private.bin", owner));
    try {
        world.engine().get("/private.bin", other);
        FAIL("expected PermissionDenied");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PermissionDenied);
    }
}

TEST_CASE("tolerates up to n-k holder failures, then fails irrecoverably") {
    World world(holderWorld(5, 47));
    const Guid caller = world.defaultCaller();
    Rng rng(5);
    const Bytes data = randomBytes(rng, 64 << 10);
    PutRequest request = simplePut(data, "/r.bin");
    request.planOverride = {2, 5};
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();

    std::vector<Guid> holders;
    for (uint32_t j = 0; j < 5; ++j) holders.push_back(rnode.fragLocation.at({0, j}));

    // n-k = 3 failures: still recoverable.
    for (int i = 0; i < 3; ++i) world.engine().setDeviceAlive(holders[static_cast<size_t>(i)], false);
    CHECK(world.engine().get("/r.bin", caller) == data);
    const auto& stats = world.engine().lastGetStats();
    REQUIRE(stats.requestsPerBlock.size() == 1);
    CHECK(stats.requestsPerBlock[0] <= 5);
    CHECK(stats.resends >= 1);

    // One more failure crosses the boundary.
    world.engine().setDeviceAlive(holders[3], false);
    try {
        world.engine().get("/r.bin", caller);
        FAIL("expected IrrecoverableBlock");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IrrecoverableBlock);
    }
    CHECK(world.engine().lastGetStats().requestsPerBlock[0] <= 5);
}

TEST_CASE("fragment arrival honors version timestamps") {
    World world(holderWorld(2, 48));
    const Guid holder = Guid::synthetic("holder", 0);
    Fragment fragment;
    fragment.fileId = {1, 2, 3};
    fragment.blockIndex = 0;
    fragment.fragmentIndex = 0;
    fragment.n = 2;
    fragment.k = 1;
    fragment.timeStamp = 100;
    fragment.keyShard = {1};
    fragment.payload = {10, 20, 30};
    world.engine().handleFragmentArrival(fragment, holder);

    Fragment newer = fragment;
    newer.timeStamp = 200;
    newer.payload = {40, 50, 60};
    world.engine().handleFragmentArrival(newer, holder);
    CHECK(world.engine().storedFragment(holder, fragment.fileId, 0, 0)->payload == Bytes{40, 50, 60});

    Fragment older = fragment;
    older.timeStamp = 50;
    older.payload = {70};
    world.engine().handleFragmentArrival(older, holder);
    CHECK(world.engine().storedFragment(holder, fragment.fileId, 0, 0)->payload == Bytes{40, 50, 60});

    Fragment equal = fragment;
    equal.timeStamp = 200;
    equal.payload = {80, 81, 82};
    world.engine().handleFragmentArrival(equal, holder);
    CHECK(world.engine().storedFragment(holder, fragment.fileId, 0, 0)->payload == Bytes{80, 81, 82});
}

TEST_CASE("version monotonicity under shuffled arrival fuzz") {
    World world(holderWorld(3, 49));
    const Guid holder = Guid::synthetic("holder", 1);
    Rng rng(6);
    uint64_t highWater = 0;
    for (int i = 0; i < 500; ++i) {
        Fragment fragment;
        fragment.fileId = {9};
        fragment.blockIndex = static_cast<uint32_t>(rng.nextBounded(2));
        fragment.fragmentIndex = static_cast<uint32_t>(rng.nextBounded(2));
        fragment.n = 2;
        fragment.k = 1;
        fragment.timeStamp = rng.nextBounded(1000);
        fragment.payload = randomBytes(rng, 16);
        const auto before = world.engine().storedFragment(holder, fragment.fileId,
                                                          fragment.blockIndex, fragment.fragmentIndex);
        world.engine().handleFragmentArrival(fragment, holder);
        const auto after = world.engine().storedFragment(holder, fragment.fileId,
                                                         fragment.blockIndex, fragment.fragmentIndex);
        REQUIRE(after.has_value());
        if (before) CHECK(after->timeStamp >= before->timeStamp);
        CHECK(after->timeStamp >= std::max(before ? before->timeStamp : 0, uint64_t{0}));
        highWater = std::max(highWater, after->timeStamp);
    }
}

TEST_CASE("storage accounting and exhaustion") {
    WorldConfig config;
    config.seed = 50;
    config.metadataReplicas = 1;
    config.devices = {DeviceProfile(Guid::synthetic("tiny", 0), 0.001, 400.0)};  // 1000 bytes
    config.caller = config.devices[0].guid;
    config.defaultLink = net::LinkModel{};
    World world(std::move(config));
    const Guid tiny = Guid::synthetic("tiny", 0);

    Fragment fragment;
    fragment.fileId = {5};
    fragment.n = 1;
    fragment.k = 1;
    fragment.timeStamp = 1;
    fragment.payload = Bytes(500, 1);
    world.engine().handleFragmentArrival(fragment, tiny);
    CHECK(world.engine().deviceProfile(tiny).storageAvailableMb < 0.001);

    Fragment second = fragment;
    second.fragmentIndex = 1;
    try {
        world.engine().handleFragmentArrival(second, tiny);
        FAIL("expected StorageExhausted");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::StorageExhausted);
    }
    CHECK(world.engine().deviceFragments(tiny).size() == 1);
}

TEST_CASE("rm removes metadata authoritatively and reclaims fragments") {
    World world(holderWorld(4, 51));
    const Guid caller = world.defaultCaller();
    Rng rng(7);
    const Bytes data = randomBytes(rng, 32 << 10);
    PutRequest request = simplePut(data, "/doomed.bin");
    request.planOverride = {2, 4};
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();

    const Guid deadHolder = rnode.fragLocation.at({0, 0});
    world.engine().setDeviceAlive(deadHolder, false);

    world.engine().rm("/doomed.bin", caller);
    world.engine().settle();
    try {
        world.engine().get("/doomed.bin", caller);
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotFound);
    }
    for (uint32_t j = 1; j < 4; ++j) {
        const Guid holder = rnode.fragLocation.at({0, j});
        if (holder == deadHolder) continue;
        CHECK(world.engine().deviceFragments(holder).empty());
    }

    // The dead holder kept an orphan; garbage collection clears it later.
    world.engine().setDeviceAlive(deadHolder, true);
    CHECK_FALSE(world.engine().deviceFragments(deadHolder).empty());
    CHECK(world.engine().collectGarbage(deadHolder) >= 1);
    CHECK(world.engine().deviceFragments(deadHolder).empty());
}

TEST_CASE("a stale orphan on a revived holder cannot shadow a re-stored path") {
    World world(holderWorld(3, 61));
    const Guid caller = world.defaultCaller();
    Rng rng(15);
    const Bytes first = randomBytes(rng, 20 << 10);
    const Bytes second = randomBytes(rng, 24 << 10);

    PutRequest request = simplePut(first, "/x.bin");
    request.planOverride = {1, 3};
    const Rnode oldRnode = world.engine().put(request, caller);
    world.engine().settle();

    // One holder misses the deletion notice and keeps an orphan fragment;
    // settle() outlives the notice's ttl, so reviving later changes nothing.
    const Guid sleeper = oldRnode.fragLocation.at({0, 0});
    world.engine().setDeviceAlive(sleeper, false);
    world.engine().rm("/x.bin", caller);
    world.engine().settle();
    world.engine().setDeviceAlive(sleeper, true);

    PutRequest replay = simplePut(second, "/x.bin");
    replay.planOverride = {1, 3};
    world.engine().put(replay, caller);
    world.engine().settle();
    // The orphan carries the old fileId, so retrieval can never confuse it
    // with the re-stored file.
    CHECK(world.engine().get("/x.bin", caller) == second);
    bool orphanPresent = false;
    for (const auto& fragment : world.engine().deviceFragments(sleeper)) {
        if (fragment.fileId == oldRnode.fileId) orphanPresent = true;
    }
    CHECK(orphanPresent);
    CHECK(world.engine().collectGarbage(sleeper) >= 1);
    CHECK(world.engine().get("/x.bin", caller) == second);
}

TEST_CASE("mkdir, ls ordering and error paths") {
    World world(WorldConfig::generated(4, 52));
    const Guid caller = world.defaultCaller();
    world.engine().mkdir("/a", AccessControlList::world(caller), caller);
    CHECK(world.engine().ls("/", caller) == std::vector<std::string>{"a"});
    world.engine().mkdir("/b", AccessControlList::world(caller), caller);
    Rng rng(8);
    world.engine().put(simplePut(randomBytes(rng, 100), "/z.bin"), caller);
    CHECK(world.engine().ls("/", caller) == std::vector<std::string>{"a", "b", "z.bin"});
    try {
        world.engine().ls("/z.bin", caller);
        FAIL("expected NotADirectory");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotADirectory);
    }
    try {
        world.engine().get("/a", caller);
        FAIL("expected NotAFile");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotAFile);
    }
}

TEST_CASE("unicast delivers whole payloads and expires when contacts are late") {
    SUBCASE("connected link delivers to the inbox") {
        World world(WorldConfig::generated(3, 53));
        const Guid caller = world.defaultCaller();
        const Guid dest = world.engine().deviceGuids()[2];
        Rng rng(9);
        const Bytes payload = randomBytes(rng, 5000);
        const auto handle = world.engine().shareUnicast(payload, dest, 60, caller);
        world.engine().settle();
        REQUIRE(handle->state == net::DeliveryState::Delivered);
        const auto inbox = world.engine().unicastInbox(dest);
        REQUIRE(inbox.size() == 1);
        CHECK(inbox[0] == payload);
    }
    SUBCASE("first contact after the ttl expires the transfer") {
        WorldConfig config;
        config.seed = 54;
        config.metadataReplicas = 1;
        config.devices = {DeviceProfile(Guid::synthetic("a", 0), 100, 400),
                          DeviceProfile(Guid::synthetic("b", 0), 100, 400)};
        config.caller = config.devices[0].guid;
        config.network.addLink(config.devices[0].guid, config.devices[1].guid,
                               net::LinkModel::scheduled({{100, 120}}, 1, 1 << 20));
        World world(std::move(config));
        const auto handle = world.engine().shareUnicast(Bytes(100, 1), Guid::synthetic("b", 0), 10,
                                                        Guid::synthetic("a", 0));
        world.network().advance(150);
        CHECK(handle->state == net::DeliveryState::Expired);
        CHECK(world.engine().unicastInbox(Guid::synthetic("b", 0)).empty());
    }
    SUBCASE("unknown destination") {
        World world(WorldConfig::generated(2, 55));
        CHECK_THROWS_AS(
            world.engine().shareUnicast(Bytes(4, 0), Guid::synthetic("ghost", 0), 10,
                                        world.defaultCaller()),
            Error);
    }
    SUBCASE("a data mule carries the whole payload across partitioned edges") {
        WorldConfig config;
        config.seed = 58;
        config.metadataReplicas = 1;
        config.devices = {DeviceProfile(Guid::synthetic("a", 0), 100, 400),
                          DeviceProfile(Guid::synthetic("b", 0), 100, 400)};
        config.caller = config.devices[0].guid;
        config.extraNodes = {Guid::synthetic("mule", 0)};
        World world(std::move(config));  // no defaultLink: a and b are partitioned
        world.network().setMuleSchedule(Guid::synthetic("mule", 0), {Guid::synthetic("a", 0)},
                                        {Guid::synthetic("b", 0)}, 20, 5,
                                        net::LinkModel::probabilistic(1.0, 1, 1 << 16));
        Rng rng(12);
        const Bytes payload = randomBytes(rng, 20000);
        const auto handle = world.engine().shareUnicast(payload, Guid::synthetic("b", 0),
                                                        net::kInfiniteTtl, Guid::synthetic("a", 0));
        world.engine().settle();
        REQUIRE(handle->state == net::DeliveryState::Delivered);
        CHECK(handle->tick >= 10);  // no earlier than the first mule-edgeB window
        const auto inbox = world.engine().unicastInbox(Guid::synthetic("b", 0));
        REQUIRE(inbox.size() == 1);
        CHECK(inbox[0] == payload);
    }
}

TEST_CASE("resends wait out the request ttl") {
    World world(holderWorld(4, 59));
    const Guid caller = world.defaultCaller();
    Rng rng(13);
    const Bytes data = randomBytes(rng, 16 << 10);
    PutRequest request = simplePut(data, "/slow.bin");
    request.planOverride = {2, 4};
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();

    // Kill the top-energy holder so the first wave must partially time out.
    world.engine().setDeviceAlive(rnode.fragLocation.at({0, 0}), false);
    const size_t traceStart = world.network().trace().size();
    CHECK(world.engine().get("/slow.bin", caller) == data);

    const uint64_t ttlTicks = world.config().engine.fragmentRequestTtlSeconds;
    std::vector<net::Tick> requestTicks;
    for (size_t i = traceStart; i < world.network().trace().size(); ++i) {
        const auto& event = world.network().trace()[i];
        if (event.event == net::NetEvent::Send && event.from == caller) {
            requestTicks.push_back(event.tick);
        }
    }
    REQUIRE(requestTicks.size() >= 3);
    const net::Tick firstWave = requestTicks.front();
    for (const net::Tick tick : requestTicks) {
        // Either part of the initial wave or issued after a full ttl expired.
        const bool initial = tick == firstWave;
        const bool afterExpiry = tick > firstWave + static_cast<net::Tick>(ttlTicks);
        CHECK((initial || afterExpiry));
    }
    CHECK(world.engine().lastGetStats().resends >= 1);
    CHECK(world.engine().lastGetStats().requestsPerBlock[0] <= 4);
}

TEST_CASE("device stores persist to the documented layout and reload") {
    World world(holderWorld(3, 56));
    const Guid caller = world.defaultCaller();
    Rng rng(10);
    const Bytes data = randomBytes(rng, 10000);
    PutRequest request = simplePut(data, "/persist.bin");
    request.planOverride = {2, 3};
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();

    const auto dir = std::filesystem::temp_directory_path() / "rdrive_store_test";
    std::filesystem::remove_all(dir);
    world.engine().persistDeviceStores(dir);

    const Guid holder = rnode.fragLocation.at({0, 0});
    const auto expected = dir / holder.value() /
                          (fileIdHex(rnode.fileId) + ".0.0.frag");
    CHECK(std::filesystem::exists(expected));

    // A fresh world with the same devices can reload every fragment.
    World fresh(holderWorld(3, 56));
    fresh.engine().loadDeviceStores(dir);
    for (uint32_t j = 0; j < 3; ++j) {
        const Guid h = rnode.fragLocation.at({0, j});
        CHECK(fresh.engine().storedFragment(h, rnode.fileId, 0, j).has_value());
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("world config parses from JSON") {
    const std::string g0 = Guid::synthetic("cfg", 0).value();
    const std::string g1 = Guid::synthetic("cfg", 1).value();
    const std::string g2 = Guid::synthetic("cfg", 2).value();
    const std::string json = R"({
        "seed": 77,
        "metadataReplicas": 1,
        "caller": ")" + g0 + R"(",
        "devices": [
            {"guid": ")" + g0 + R"(", "storageMb": 500, "remainingTimeMinutes": 400},
            {"guid": ")" + g1 + R"(", "storageMb": 400, "remainingTimeMinutes": 350},
            {"guid": ")" + g2 + R"(", "storageMb": 300, "remainingTimeMinutes": 300}
        ],
        "defaults": {"availabilityWeight": 0.8, "blockSizeBytes": 65536, "requestTtlSeconds": 30},
        "network": {
            "tickLengthSeconds": 0.5,
            "defaultLink": {"availability": 1.0, "latencyTicks": 1, "bandwidthBytesPerTick": 1048576},
            "links": [{"a": ")" + g0 + R"(", "b": ")" + g1 + R"(", "availability": 0.5}]
        }
    })";
    WorldConfig config = WorldConfig::fromJson(json);
    CHECK(config.seed == 77);
    CHECK(config.metadataReplicas == 1);
    CHECK(config.devices.size() == 3);
    CHECK(config.engine.defaultAvailabilityWeight == doctest::Approx(0.8));
    CHECK(config.engine.blockSizeBytes == 65536);
    CHECK(config.engine.fragmentRequestTtlSeconds == 30);
    CHECK(config.network.tickLengthSeconds == doctest::Approx(0.5));

    World world(std::move(config));
    CHECK(world.defaultCaller().value() == g0);
    Rng rng(14);
    const Bytes data = randomBytes(rng, 200000);
    PutRequest request = simplePut(data, "/cfg.bin");
    request.availabilityWeight = 0.8;
    const Rnode rnode = world.engine().put(request, world.defaultCaller());
    CHECK(rnode.blockCount == 4);  // 200000 / 65536 rounded up
    world.engine().settle();
    CHECK(world.engine().get("/cfg.bin", world.defaultCaller()) == data);
}

TEST_CASE("engine and metadata survive concurrent callers") {
    World world(WorldConfig::generated(5, 60));
    const Guid caller = world.defaultCaller();
    std::vector<std::thread> threads;
    std::atomic<int> failures{0};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            try {
                for (int i = 0; i < 25; ++i) {
                    world.engine().mkdir("/t" + std::to_string(t) + "n" + std::to_string(i),
                                         AccessControlList::world(caller), caller);
                    (void)world.engine().ls("/", caller);
                }
            } catch (...) {
                failures.fetch_add(1);
            }
        });
    }
    for (auto& thread : threads) thread.join();
    CHECK(failures.load() == 0);
    CHECK(world.engine().ls("/", caller).size() == 100);
}

TEST_CASE("per-device load stays within the F/k budget") {
    World world(holderWorld(6, 57));
    const Guid caller = world.defaultCaller();
    Rng rng(11);
    const size_t fileBytes = 3 << 20;
    PutRequest request = simplePut(randomBytes(rng, fileBytes), "/load.bin");
    request.planOverride = {3, 6};
    request.blockSizeBytes = 1 << 20;
    const Rnode rnode = world.engine().put(request, caller);
    world.engine().settle();
    std::map<Guid, uint64_t> loads;
    for (const auto& guid : world.engine().deviceGuids()) {
        for (const auto& fragment : world.engine().deviceFragments(guid)) {
            if (fragment.fileId == rnode.fileId) {
                loads[guid] += fragment.payload.size() + fragmentHeaderBytes(fragment);
            }
        }
    }
    // fileSize/k plus per-block overheads (padding, length prefix, AEAD
    // expansion, header, key shard).
    const uint64_t budget = fileBytes / 3 + rnode.blockCount * 256;
    for (const auto& [guid, load] : loads) CHECK(load <= budget);
}
