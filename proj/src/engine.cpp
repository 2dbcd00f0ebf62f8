#include "rdrive/engine.hpp"

#include <algorithm>
#include <fstream>

#include "rdrive/reed_solomon.hpp"

namespace rdrive {

namespace {

// Engine wire protocol over the simulator: one type byte, then the body.
enum WireType : uint8_t {
    kWireFragmentPush = 0x01,
    kWireFragmentRequest = 0x02,
    kWireFragmentReply = 0x03,
    kWireFragmentDelete = 0x04,
    kWireUnicast = 0x05,
};

constexpr size_t kGuidBytes = 40;

Bytes frame(WireType type, std::span<const uint8_t> body) {
    Bytes out;
    out.reserve(1 + body.size());
    out.push_back(static_cast<uint8_t>(type));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

struct FragmentRequestWire {
    FileId fileId{};
    uint32_t blockIndex = 0;
    uint32_t fragmentIndex = 0;
    uint64_t ttlSeconds = 0;
    Guid requester;
};

Bytes encodeRequest(const FragmentRequestWire& request) {
    Bytes out;
    out.insert(out.end(), request.fileId.begin(), request.fileId.end());
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<uint8_t>(request.blockIndex >> shift));
    }
    out.push_back(static_cast<uint8_t>(request.fragmentIndex >> 8));
    out.push_back(static_cast<uint8_t>(request.fragmentIndex));
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<uint8_t>(request.ttlSeconds >> shift));
    }
    const std::string& guid = request.requester.value();
    out.insert(out.end(), guid.begin(), guid.end());
    return out;
}

FragmentRequestWire decodeRequest(std::span<const uint8_t> body) {
    if (body.size() != 16 + 4 + 2 + 8 + kGuidBytes) {
        raise(Errc::InvalidParameters, "malformed fragment request");
    }
    FragmentRequestWire request;
    std::copy(body.begin(), body.begin() + 16, request.fileId.begin());
    request.blockIndex = (static_cast<uint32_t>(body[16]) << 24) | (static_cast<uint32_t>(body[17]) << 16) |
                         (static_cast<uint32_t>(body[18]) << 8) | body[19];
    request.fragmentIndex = (static_cast<uint32_t>(body[20]) << 8) | body[21];
    request.ttlSeconds = 0;
    for (int i = 0; i < 8; ++i) request.ttlSeconds = (request.ttlSeconds << 8) | body[22 + i];
    request.requester = Guid(std::string(body.begin() + 30, body.begin() + 30 + kGuidBytes));
    return request;
}

uint64_t fragmentStoredBytes(const Fragment& fragment) {
    return fragmentHeaderBytes(fragment) + fragment.payload.size();
}

}  // namespace

StorageEngine::StorageEngine(MetadataCluster& metadata, net::Simulator& network,
                             std::vector<DeviceProfile> devices, EngineConfig config, uint64_t seed)
    : metadata_(metadata), network_(network), config_(std::move(config)), rng_(seed) {
    for (auto& profile : devices) {
        const Guid guid = profile.guid;
        if (devices_.count(guid)) {
            raise(Errc::InvalidParameters, "duplicate device '" + guid.value() + "'");
        }
        DeviceState state;
        state.profile = std::move(profile);
        devices_.emplace(guid, std::move(state));
        deviceOrder_.push_back(guid);
        network_.registerHandler(guid, [this, guid](const Guid& source, const Bytes& payload) {
            onMessage(guid, source, payload);
        });
    }
}

StorageEngine::DeviceState& StorageEngine::device(const Guid& guid) {
    const auto it = devices_.find(guid);
    if (it == devices_.end()) raise(Errc::UnknownDestination, "'" + guid.value() + "' is not a device");
    return it->second;
}

const StorageEngine::DeviceState& StorageEngine::device(const Guid& guid) const {
    const auto it = devices_.find(guid);
    if (it == devices_.end()) raise(Errc::UnknownDestination, "'" + guid.value() + "' is not a device");
    return it->second;
}

uint64_t StorageEngine::nextTimestampMs() {
    const uint64_t simMs = static_cast<uint64_t>(
        static_cast<double>(network_.now()) * network_.tickLengthSeconds() * 1000.0);
    lastTimestampMs_ = std::max(lastTimestampMs_ + 1, simMs);
    return lastTimestampMs_;
}

std::vector<DeviceProfile> StorageEngine::aliveProfiles() const {
    std::vector<DeviceProfile> profiles;
    for (const auto& guid : deviceOrder_) {
        const auto& state = devices_.at(guid);
        if (state.alive) profiles.push_back(state.profile);
    }
    return profiles;
}

CodingPlan StorageEngine::resolvePlan(const PutRequest& request, double fileSizeMb) {
    planner::PlannerInputs inputs;
    inputs.fileSizeMb = fileSizeMb;
    inputs.requiredLifetimeMin = request.requiredLifetimeMin;
    inputs.availabilityWeight = request.availabilityWeight;
    inputs.devices = aliveProfiles();

    if (!request.planOverride) return planner::plan(inputs);

    const auto [k, n] = *request.planOverride;
    if (k < 1 || k > n) raise(Errc::InvalidParameters, "plan override requires 1 <= k <= n");
    if (n > static_cast<int>(inputs.devices.size())) {
        raise(Errc::NoFeasiblePlan, "plan override needs " + std::to_string(n) + " devices, have " +
                                        std::to_string(inputs.devices.size()));
    }
    const double loadMb = fileSizeMb / k;
    std::vector<size_t> candidates;
    for (size_t i = 0; i < inputs.devices.size(); ++i) {
        if (inputs.devices[i].storageAvailableMb > loadMb) candidates.push_back(i);
    }
    if (candidates.size() < static_cast<size_t>(n)) {
        for (size_t i = 0; i < inputs.devices.size(); ++i) {
            if (inputs.devices[i].storageAvailableMb == loadMb) candidates.push_back(i);
        }
    }
    if (candidates.size() < static_cast<size_t>(n)) {
        raise(Errc::NoFeasiblePlan, "plan override: fewer than n devices can hold F/k");
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
        return inputs.devices[a].remainingTimeMin > inputs.devices[b].remainingTimeMin;
    });
    CodingPlan plan;
    plan.k = k;
    plan.n = n;
    plan.cost = planner::cost(k, n, request.availabilityWeight);
    plan.codeRate = static_cast<double>(k) / n;
    plan.encodedSizeMb = fileSizeMb * n / k;
    for (int i = 0; i < n; ++i) {
        plan.devices.push_back(inputs.devices[candidates[static_cast<size_t>(i)]].guid);
    }
    return plan;
}

Rnode StorageEngine::put(const PutRequest& request, const Guid& caller) {
    std::lock_guard lock(mutex_);
    if (request.localBytes.empty()) {
        raise(Errc::InvalidParameters, "empty files cannot be stored (no block to shard the key over)");
    }
    validatePath(request.rdrivePath);
    AccessControlList acl = request.acl;
    acl.owner = caller;  // the creator owns the rnode
    acl.validate();

    const uint64_t blockSize = request.blockSizeBytes ? request.blockSizeBytes : config_.blockSizeBytes;
    if (blockSize == 0) raise(Errc::InvalidParameters, "block size must be positive");
    const uint64_t totalBytes = request.localBytes.size();
    const uint32_t blockCount = static_cast<uint32_t>((totalBytes + blockSize - 1) / blockSize);
    if (blockCount > 255) {
        raise(Errc::InvalidParameters, "file needs " + std::to_string(blockCount) +
                                           " blocks; the (B,B) key split supports at most 255");
    }

    const CodingPlan plan = resolvePlan(request, static_cast<double>(totalBytes) / 1e6);

    const crypto::FileKey key = crypto::FileKey::random(rng_);
    const auto keyShards = crypto::splitKey(key, static_cast<int>(blockCount), rng_);
    const uint64_t timeStamp = nextTimestampMs();

    Rnode rnode;
    rnode.rnodeType = RnodeType::FILE;
    rnode.rnodeId = randomFileId(rng_);
    rnode.fileId = randomFileId(rng_);
    rnode.fileName = baseName(request.rdrivePath);
    rnode.fileSize = totalBytes;
    rnode.filePath = request.rdrivePath;
    rnode.n = static_cast<uint32_t>(plan.n);
    rnode.k = static_cast<uint32_t>(plan.k);
    rnode.blockCount = blockCount;
    rnode.permission = acl;
    rnode.timeStamp = timeStamp;

    std::vector<Fragment> fragments;
    fragments.reserve(static_cast<size_t>(blockCount) * static_cast<size_t>(plan.n));
    for (uint32_t block = 0; block < blockCount; ++block) {
        const uint64_t begin = static_cast<uint64_t>(block) * blockSize;
        const uint64_t end = std::min(totalBytes, begin + blockSize);
        const auto plain = std::span<const uint8_t>(request.localBytes).subspan(begin, end - begin);
        const Bytes cipher = crypto::encryptBlock(plain, key, rnode.fileId, block);
        const rs::ShardSet shards = rs::encode(cipher, plan.k, plan.n);
        const Bytes shardWire = crypto::encodeKeyShard(keyShards[block]);
        for (int j = 0; j < plan.n; ++j) {
            Fragment fragment;
            fragment.fileId = rnode.fileId;
            fragment.blockIndex = block;
            fragment.fragmentIndex = static_cast<uint32_t>(j);
            fragment.n = static_cast<uint32_t>(plan.n);
            fragment.k = static_cast<uint32_t>(plan.k);
            fragment.timeStamp = timeStamp;
            fragment.keyShard = shardWire;
            fragment.payload = *shards.shards[static_cast<size_t>(j)];
            rnode.fragLocation[{block, static_cast<uint32_t>(j)}] = plan.devices[static_cast<size_t>(j)];
            fragments.push_back(std::move(fragment));
        }
    }

    // Metadata first: if this throws, no fragment has been dispatched.
    metadata_.createRnode(request.rdrivePath, rnode, caller);

    for (const Fragment& fragment : fragments) {
        const Guid& dest = rnode.fragLocation.at({fragment.blockIndex, fragment.fragmentIndex});
        if (dest == caller && devices_.count(dest)) {
            acceptFragment(fragment, device(dest));
            continue;
        }
        net::Envelope envelope;
        envelope.source = caller;
        envelope.dest = dest;
        envelope.payload = frame(kWireFragmentPush, encodeFragment(fragment));
        envelope.ttlSeconds = config_.fragmentPushTtlSeconds;
        network_.send(std::move(envelope));
    }
    return rnode;
}

void StorageEngine::acceptFragment(const Fragment& fragment, DeviceState& state) {
    const auto slot = std::make_tuple(fragment.fileId, fragment.blockIndex, fragment.fragmentIndex);
    const uint64_t newBytes = fragmentStoredBytes(fragment);
    const auto existing = state.store.find(slot);
    if (existing != state.store.end()) {
        // Versioned overwrite: only same or higher timestamps are accepted.
        if (fragment.timeStamp < existing->second.timeStamp) return;
        const uint64_t oldBytes = fragmentStoredBytes(existing->second);
        const double deltaMb = (static_cast<double>(newBytes) - static_cast<double>(oldBytes)) / 1e6;
        if (state.profile.storageAvailableMb < deltaMb) {
            raise(Errc::StorageExhausted, "device '" + state.profile.guid.value() + "' is out of storage");
        }
        state.profile.storageAvailableMb -= deltaMb;
        existing->second = fragment;
        return;
    }
    const double neededMb = static_cast<double>(newBytes) / 1e6;
    if (state.profile.storageAvailableMb < neededMb) {
        raise(Errc::StorageExhausted, "device '" + state.profile.guid.value() + "' is out of storage");
    }
    state.profile.storageAvailableMb -= neededMb;
    state.store.emplace(slot, fragment);
}

void StorageEngine::handleFragmentArrival(const Fragment& fragment, const Guid& deviceGuid) {
    std::lock_guard lock(mutex_);
    acceptFragment(fragment, device(deviceGuid));
}

void StorageEngine::onMessage(const Guid& deviceGuid, const Guid& source, const Bytes& payload) {
    if (payload.empty()) return;
    auto& state = devices_.at(deviceGuid);
    if (!state.alive) return;
    const auto body = std::span<const uint8_t>(payload).subspan(1);
    switch (payload[0]) {
        case kWireFragmentPush: {
            try {
                acceptFragment(decodeFragment(body), state);
            } catch (const Error&) {
                // Storage exhaustion or a malformed push drops the fragment.
            }
            break;
        }
        case kWireFragmentRequest: {
            FragmentRequestWire request;
            try {
                request = decodeRequest(body);
            } catch (const Error&) {
                break;
            }
            const auto slot = std::make_tuple(request.fileId, request.blockIndex, request.fragmentIndex);
            const auto it = state.store.find(slot);
            if (it == state.store.end()) break;  // nothing to resolve; requester times out
            net::Envelope reply;
            reply.source = deviceGuid;
            reply.dest = source;
            reply.payload = frame(kWireFragmentReply, encodeFragment(it->second));
            reply.ttlSeconds = request.ttlSeconds;
            network_.send(std::move(reply));
            break;
        }
        case kWireFragmentReply: {
            state.pendingReplies.emplace_back(source, Bytes(body.begin(), body.end()));
            break;
        }
        case kWireFragmentDelete: {
            if (body.size() != 16) break;
            FileId fileId{};
            std::copy(body.begin(), body.end(), fileId.begin());
            for (auto it = state.store.begin(); it != state.store.end();) {
                if (it->second.fileId == fileId) {
                    state.profile.storageAvailableMb +=
                        static_cast<double>(fragmentStoredBytes(it->second)) / 1e6;
                    it = state.store.erase(it);
                } else {
                    ++it;
                }
            }
            break;
        }
        case kWireUnicast: {
            state.unicastInbox.emplace_back(body.begin(), body.end());
            break;
        }
        default:
            break;
    }
}

Bytes StorageEngine::get(const std::string& rdrivePath, const Guid& caller) {
    std::lock_guard lock(mutex_);
    const Rnode rnode = metadata_.getRnode(rdrivePath, caller);
    if (rnode.rnodeType != RnodeType::FILE) {
        raise(Errc::NotAFile, "'" + rdrivePath + "' is a directory");
    }
    const int k = static_cast<int>(rnode.k);
    const uint32_t blockCount = rnode.blockCount;
    const net::Tick ttlTicks = static_cast<net::Tick>(
        static_cast<double>(config_.fragmentRequestTtlSeconds) / network_.tickLengthSeconds());

    struct Outstanding {
        uint32_t fragmentIndex = 0;
        net::Tick deadline = 0;
    };
    struct BlockState {
        std::vector<std::pair<Guid, uint32_t>> holders;  // ranked by energy
        size_t nextHolder = 0;
        std::vector<Outstanding> outstanding;
        rs::ShardSet shards;
        int have = 0;
        Bytes keyShard;
        std::optional<Bytes> cipher;
    };

    lastGetStats_ = GetStats{};
    lastGetStats_.requestsPerBlock.assign(blockCount, 0);

    std::vector<BlockState> blocks(blockCount);
    for (uint32_t b = 0; b < blockCount; ++b) {
        BlockState& block = blocks[b];
        block.shards.k = k;
        block.shards.n = static_cast<int>(rnode.n);
        block.shards.shards.resize(rnode.n);
        for (uint32_t j = 0; j < rnode.n; ++j) {
            block.holders.emplace_back(rnode.fragLocation.at({b, j}), j);
        }
        // Devices with the most remaining energy first, GUID on ties.
        std::sort(block.holders.begin(), block.holders.end(), [&](const auto& x, const auto& y) {
            const auto ix = devices_.find(x.first);
            const auto iy = devices_.find(y.first);
            const double ex = ix == devices_.end() ? -1.0 : ix->second.profile.energyRank;
            const double ey = iy == devices_.end() ? -1.0 : iy->second.profile.energyRank;
            if (ex != ey) return ex > ey;
            return x.first < y.first;
        });
    }

    auto ingestFragment = [&](const Fragment& fragment) {
        if (fragment.fileId != rnode.fileId) return;
        if (fragment.blockIndex >= blockCount) return;
        if (fragment.timeStamp < rnode.timeStamp) {
            ++lastGetStats_.staleRepliesDropped;
            return;
        }
        BlockState& block = blocks[fragment.blockIndex];
        if (block.cipher) return;
        if (fragment.fragmentIndex >= rnode.n) return;
        auto& slot = block.shards.shards[fragment.fragmentIndex];
        if (slot) return;
        slot = fragment.payload;
        if (block.shards.shardLength == 0) block.shards.shardLength = fragment.payload.size();
        block.have += 1;
        if (block.keyShard.empty()) block.keyShard = fragment.keyShard;
        std::erase_if(block.outstanding, [&](const Outstanding& o) {
            return o.fragmentIndex == fragment.fragmentIndex;
        });
        if (block.have >= k) {
            try {
                block.cipher = rs::decode(block.shards);
            } catch (const Error& e) {
                if (e.code() == Errc::InconsistentShards) {
                    // Structurally corrupt reconstruction is tampering.
                    raise(Errc::AuthenticationFailure, e.what());
                }
                throw;
            }
            block.outstanding.clear();
        }
    };

    // Local fragments short-circuit the network entirely.
    const auto localDevice = devices_.find(caller);
    if (localDevice != devices_.end()) {
        for (uint32_t b = 0; b < blockCount; ++b) {
            for (const auto& [holder, fragIndex] : blocks[b].holders) {
                if (holder != caller) continue;
                const auto it =
                    localDevice->second.store.find(std::make_tuple(rnode.fileId, b, fragIndex));
                if (it != localDevice->second.store.end()) ingestFragment(it->second);
            }
        }
    }

    auto issueRequests = [&](uint32_t blockIndex) {
        BlockState& block = blocks[blockIndex];
        while (!block.cipher && block.have + static_cast<int>(block.outstanding.size()) < k &&
               block.nextHolder < block.holders.size()) {
            const auto [holder, fragIndex] = block.holders[block.nextHolder];
            block.nextHolder += 1;
            if (holder == caller) continue;  // local copies were consumed above
            FragmentRequestWire request;
            request.fileId = rnode.fileId;
            request.blockIndex = blockIndex;
            request.fragmentIndex = fragIndex;
            request.ttlSeconds = config_.fragmentRequestTtlSeconds;
            request.requester = caller;
            net::Envelope envelope;
            envelope.source = caller;
            envelope.dest = holder;
            envelope.payload = frame(kWireFragmentRequest, encodeRequest(request));
            envelope.ttlSeconds = config_.fragmentRequestTtlSeconds;
            try {
                network_.send(std::move(envelope));
            } catch (const Error& e) {
                if (e.code() == Errc::UnknownDestination) continue;  // holder left the network
                throw;
            }
            block.outstanding.push_back({fragIndex, network_.now() + ttlTicks});
            lastGetStats_.requestsPerBlock[blockIndex] += 1;
        }
    };

    int ticksUsed = 0;
    for (;;) {
        for (uint32_t b = 0; b < blockCount; ++b) issueRequests(b);

        bool allDone = true;
        for (uint32_t b = 0; b < blockCount; ++b) {
            BlockState& block = blocks[b];
            if (block.cipher) continue;
            allDone = false;
            if (block.outstanding.empty() && block.nextHolder >= block.holders.size()) {
                raise(Errc::IrrecoverableBlock,
                      "block " + std::to_string(b) + " has " + std::to_string(block.have) + " of " +
                          std::to_string(k) + " fragments after exhausting all " +
                          std::to_string(rnode.n) + " holders");
            }
        }
        if (allDone) break;
        if (ticksUsed >= config_.getTickBudget) {
            raise(Errc::IrrecoverableBlock, "retrieval exceeded its tick budget");
        }

        network_.advance(1);
        ++ticksUsed;

        if (localDevice != devices_.end()) {
            auto replies = std::move(localDevice->second.pendingReplies);
            localDevice->second.pendingReplies.clear();
            for (const auto& [holder, bytes] : replies) {
                try {
                    ingestFragment(decodeFragment(bytes));
                } catch (const Error& e) {
                    if (e.code() == Errc::AuthenticationFailure) throw;
                    // Malformed replies are ignored; the TTL discipline recovers.
                }
            }
        }

        // A request with no reply by its deadline has failed; the next-ranked
        // untried holder is asked on the following loop pass.
        const net::Tick now = network_.now();
        for (auto& block : blocks) {
            const size_t before = block.outstanding.size();
            std::erase_if(block.outstanding, [&](const Outstanding& o) { return now > o.deadline; });
            lastGetStats_.resends += static_cast<int>(before - block.outstanding.size());
        }
    }
    lastGetStats_.ticksAdvanced = ticksUsed;

    // All blocks decoded; recover the key from the per-block shards.
    std::vector<crypto::KeyShard> keyShards;
    keyShards.reserve(blockCount);
    for (uint32_t b = 0; b < blockCount; ++b) {
        try {
            keyShards.push_back(crypto::decodeKeyShard(blocks[b].keyShard));
        } catch (const Error&) {
            raise(Errc::AuthenticationFailure, "block " + std::to_string(b) + " carries a corrupt key shard");
        }
    }
    const crypto::FileKey key = crypto::joinKey(keyShards, static_cast<int>(blockCount));

    Bytes result;
    result.reserve(rnode.fileSize);
    for (uint32_t b = 0; b < blockCount; ++b) {
        const Bytes plain = crypto::decryptBlock(*blocks[b].cipher, key, rnode.fileId, b);
        result.insert(result.end(), plain.begin(), plain.end());
    }
    if (result.size() != rnode.fileSize) {
        raise(Errc::AuthenticationFailure, "reconstructed size does not match the stored file size");
    }
    return result;
}

Rnode StorageEngine::mkdir(const std::string& path, AccessControlList acl, const Guid& caller) {
    std::lock_guard lock(mutex_);
    validatePath(path);
    acl.owner = caller;
    acl.validate();
    Rnode rnode;
    rnode.rnodeType = RnodeType::DIRECTORY;
    rnode.rnodeId = randomFileId(rng_);
    rnode.fileName = baseName(path);
    rnode.filePath = path;
    rnode.permission = acl;
    rnode.timeStamp = nextTimestampMs();
    metadata_.createRnode(path, rnode, caller);
    return rnode;
}

std::vector<std::string> StorageEngine::ls(const std::string& path, const Guid& caller) const {
    std::lock_guard lock(mutex_);
    const Rnode rnode = metadata_.getRnode(path, caller);
    if (rnode.rnodeType != RnodeType::DIRECTORY) {
        raise(Errc::NotADirectory, "'" + path + "' is a file");
    }
    std::vector<std::string> names = rnode.folderList;
    std::sort(names.begin(), names.end());
    std::vector<std::string> files = rnode.fileList;
    std::sort(files.begin(), files.end());
    names.insert(names.end(), files.begin(), files.end());
    return names;
}

void StorageEngine::rm(const std::string& path, const Guid& caller) {
    std::lock_guard lock(mutex_);
    const Rnode rnode = metadata_.getRnode(path, caller);
    metadata_.deleteRnode(path, caller);  // the authoritative removal
    if (rnode.rnodeType != RnodeType::FILE) return;

    // Best-effort deletion notices; unreachable holders keep orphans until
    // their next garbage-collection pass.
    std::set<Guid> holders;
    for (const auto& [slot, holder] : rnode.fragLocation) holders.insert(holder);
    for (const auto& holder : holders) {
        if (holder == caller && devices_.count(holder)) {
            auto& state = devices_.at(holder);
            for (auto it = state.store.begin(); it != state.store.end();) {
                if (it->second.fileId == rnode.fileId) {
                    state.profile.storageAvailableMb +=
                        static_cast<double>(fragmentStoredBytes(it->second)) / 1e6;
                    it = state.store.erase(it);
                } else {
                    ++it;
                }
            }
            continue;
        }
        net::Envelope envelope;
        envelope.source = caller;
        envelope.dest = holder;
        envelope.payload = frame(kWireFragmentDelete, rnode.fileId);
        envelope.ttlSeconds = config_.fragmentRequestTtlSeconds;
        network_.send(std::move(envelope));
    }
}

net::DeliveryHandle StorageEngine::shareUnicast(Bytes localBytes, const Guid& dest,
                                                uint64_t ttlSeconds, const Guid& caller) {
    std::lock_guard lock(mutex_);
    net::Envelope envelope;
    envelope.source = caller;
    envelope.dest = dest;
    envelope.payload = frame(kWireUnicast, localBytes);
    envelope.ttlSeconds = ttlSeconds;
    return network_.send(std::move(envelope));
}

void StorageEngine::setDeviceAlive(const Guid& deviceGuid, bool alive) {
    std::lock_guard lock(mutex_);
    device(deviceGuid).alive = alive;
    network_.setNodeAlive(deviceGuid, alive);
}

bool StorageEngine::deviceAlive(const Guid& deviceGuid) const {
    std::lock_guard lock(mutex_);
    return device(deviceGuid).alive;
}

DeviceProfile StorageEngine::deviceProfile(const Guid& deviceGuid) const {
    std::lock_guard lock(mutex_);
    return device(deviceGuid).profile;
}

std::vector<Guid> StorageEngine::deviceGuids() const {
    std::lock_guard lock(mutex_);
    return deviceOrder_;
}

int StorageEngine::settle(int maxTicks) {
    std::lock_guard lock(mutex_);
    return network_.settle(maxTicks);
}

size_t StorageEngine::collectGarbage(const Guid& deviceGuid) {
    std::lock_guard lock(mutex_);
    std::set<FileId> live;
    for (const auto& rnode : metadata_.listAll()) {
        if (rnode.rnodeType == RnodeType::FILE) live.insert(rnode.fileId);
    }
    auto& state = device(deviceGuid);
    size_t collected = 0;
    for (auto it = state.store.begin(); it != state.store.end();) {
        if (!live.count(it->second.fileId)) {
            state.profile.storageAvailableMb +=
                static_cast<double>(fragmentStoredBytes(it->second)) / 1e6;
            it = state.store.erase(it);
            ++collected;
        } else {
            ++it;
        }
    }
    return collected;
}

std::vector<Fragment> StorageEngine::deviceFragments(const Guid& deviceGuid) const {
    std::lock_guard lock(mutex_);
    std::vector<Fragment> fragments;
    for (const auto& [slot, fragment] : device(deviceGuid).store) fragments.push_back(fragment);
    return fragments;
}

std::optional<Fragment> StorageEngine::storedFragment(const Guid& deviceGuid, const FileId& fileId,
                                                      uint32_t blockIndex,
                                                      uint32_t fragmentIndex) const {
    std::lock_guard lock(mutex_);
    const auto& store = device(deviceGuid).store;
    const auto it = store.find(std::make_tuple(fileId, blockIndex, fragmentIndex));
    if (it == store.end()) return std::nullopt;
    return it->second;
}

void StorageEngine::corruptStoredFragment(const Guid& deviceGuid, const FileId& fileId,
                                          uint32_t blockIndex, uint32_t fragmentIndex,
                                          size_t bitIndex) {
    std::lock_guard lock(mutex_);
    auto& store = device(deviceGuid).store;
    const auto it = store.find(std::make_tuple(fileId, blockIndex, fragmentIndex));
    if (it == store.end()) raise(Errc::NotFound, "no such fragment on device");
    Bytes& payload = it->second.payload;
    if (payload.empty()) raise(Errc::InvalidParameters, "fragment has no payload");
    payload[(bitIndex / 8) % payload.size()] ^= static_cast<uint8_t>(1u << (bitIndex % 8));
}

std::vector<Bytes> StorageEngine::unicastInbox(const Guid& deviceGuid) const {
    std::lock_guard lock(mutex_);
    return device(deviceGuid).unicastInbox;
}

void StorageEngine::persistDeviceStores(const std::filesystem::path& root) const {
    std::lock_guard lock(mutex_);
    for (const auto& guid : deviceOrder_) {
        const auto dir = root / guid.value();
        std::filesystem::create_directories(dir);
        for (const auto& [slot, fragment] : devices_.at(guid).store) {
            const auto name = fileIdHex(fragment.fileId) + "." + std::to_string(fragment.blockIndex) +
                              "." + std::to_string(fragment.fragmentIndex) + ".frag";
            const Bytes bytes = encodeFragment(fragment);
            std::ofstream out(dir / name, std::ios::binary);
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
        }
    }
}

void StorageEngine::loadDeviceStores(const std::filesystem::path& root) {
    std::lock_guard lock(mutex_);
    for (const auto& guid : deviceOrder_) {
        const auto dir = root / guid.value();
        if (!std::filesystem::exists(dir)) continue;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".frag") continue;
            std::ifstream in(entry.path(), std::ios::binary);
            Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            acceptFragment(decodeFragment(bytes), device(guid));
        }
    }
}

}  // namespace rdrive
