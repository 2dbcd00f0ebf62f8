#include "rdrive/metadata.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace rdrive {

namespace {

constexpr size_t kMaxRnodeBytes = 1 << 20;  // ZooKeeper-like 1 MB znode cap

Rnode makeRoot(const Guid& owner, uint64_t timestampMs) {
    Rnode root;
    root.rnodeType = RnodeType::DIRECTORY;
    root.fileName = "";
    root.filePath = "/";
    root.permission = AccessControlList::world(owner);
    root.timeStamp = timestampMs;
    return root;
}

}  // namespace

MetadataCluster::MetadataCluster(std::vector<Guid> replicaGuids, const Guid& rootOwner,
                                 uint64_t rootTimestampMs) {
    if (replicaGuids.empty() || replicaGuids.size() % 2 == 0) {
        raise(Errc::InvalidParameters, "replica count must be odd and positive");
    }
    std::set<Guid> unique(replicaGuids.begin(), replicaGuids.end());
    if (unique.size() != replicaGuids.size()) {
        raise(Errc::InvalidParameters, "duplicate replica GUIDs");
    }
    for (auto& guid : replicaGuids) {
        Replica replica;
        replica.guid = std::move(guid);
        replicas_.push_back(std::move(replica));
    }
    commit({LogOp{"/", serializeRnode(makeRoot(rootOwner, rootTimestampMs))}});
}

int MetadataCluster::replicaCount() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(replicas_.size());
}

int MetadataCluster::aliveCount() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>(std::count_if(replicas_.begin(), replicas_.end(),
                                          [](const Replica& r) { return r.alive; }));
}

int MetadataCluster::quorum() const {
    std::lock_guard lock(mutex_);
    return static_cast<int>((replicas_.size() + 1) / 2);
}

int64_t MetadataCluster::epoch() const {
    std::lock_guard lock(mutex_);
    return epoch_;
}

Guid MetadataCluster::primary() const {
    std::lock_guard lock(mutex_);
    return replicas_[primaryIndex()].guid;
}

std::vector<MetadataCluster::ReplicaView> MetadataCluster::replicaViews() const {
    std::lock_guard lock(mutex_);
    std::vector<ReplicaView> views;
    views.reserve(replicas_.size());
    for (const auto& replica : replicas_) {
        views.push_back({replica.guid, replica.alive, replica.appliedIndex, replica.store});
    }
    return views;
}

void MetadataCluster::applyEntry(Replica& replica, const std::vector<LogOp>& ops) const {
    for (const auto& op : ops) {
        if (op.rnodeJson) {
            replica.store[op.path] = *op.rnodeJson;
        } else {
            replica.store.erase(op.path);
        }
    }
    ++replica.appliedIndex;
}

void MetadataCluster::catchUp(Replica& replica) {
    while (replica.appliedIndex < static_cast<int64_t>(log_.size())) {
        applyEntry(replica, log_[static_cast<size_t>(replica.appliedIndex)]);
    }
}

size_t MetadataCluster::primaryIndex() const {
    if (replicas_[primary_].alive) return primary_;
    // Primary handoff: the live replica with the highest applied index takes
    // over (lowest slot on ties).
    size_t best = replicas_.size();
    for (size_t i = 0; i < replicas_.size(); ++i) {
        if (!replicas_[i].alive) continue;
        if (best == replicas_.size() || replicas_[i].appliedIndex > replicas_[best].appliedIndex) {
            best = i;
        }
    }
    if (best == replicas_.size()) raise(Errc::QuorumUnavailable, "no live replica");
    primary_ = best;
    epoch_ += 1;
    return best;
}

void MetadataCluster::commit(std::vector<LogOp> ops) {
    const int alive = static_cast<int>(
        std::count_if(replicas_.begin(), replicas_.end(), [](const Replica& r) { return r.alive; }));
    const int needed = static_cast<int>((replicas_.size() + 1) / 2);
    if (alive < needed) {
        raise(Errc::QuorumUnavailable, "only " + std::to_string(alive) + " of " +
                                           std::to_string(replicas_.size()) + " replicas alive, need " +
                                           std::to_string(needed));
    }
    primaryIndex();  // elects a live primary before the write is acknowledged
    log_.push_back(std::move(ops));
    for (auto& replica : replicas_) {
        if (replica.alive) catchUp(replica);
    }
}

const MetadataCluster::Replica& MetadataCluster::readReplica() const {
    if (replicas_[primary_].alive) return replicas_[primary_];
    for (const auto& replica : replicas_) {
        if (replica.alive) return replica;
    }
    raise(Errc::QuorumUnavailable, "no live replica to serve reads");
}

std::optional<Rnode> MetadataCluster::lookupLocked(const std::string& path) const {
    const auto& store = readReplica().store;
    const auto it = store.find(path);
    if (it == store.end()) return std::nullopt;
    return deserializeRnode(it->second);
}

void MetadataCluster::checkSize(const std::string& serialized) {
    if (serialized.size() > kMaxRnodeBytes) {
        raise(Errc::MetadataTooLarge, "serialized rnode is " + std::to_string(serialized.size()) +
                                          " bytes, cap is " + std::to_string(kMaxRnodeBytes));
    }
}

void MetadataCluster::createRnode(const std::string& path, Rnode rnode, const Guid& caller) {
    std::lock_guard lock(mutex_);
    validatePath(path);
    if (path == "/") raise(Errc::AlreadyExists, "root always exists");
    rnode.validate();
    if (rnode.filePath != path) {
        raise(Errc::InvalidParameters, "rnode filePath does not match target path");
    }

    auto parent = lookupLocked(parentPath(path));
    if (!parent || parent->rnodeType != RnodeType::DIRECTORY) {
        raise(Errc::ParentNotFound, "no parent directory for '" + path + "'");
    }
    if (!parent->permission.allows(caller)) {
        raise(Errc::PermissionDenied, "caller may not write to '" + parent->filePath + "'");
    }
    if (lookupLocked(path)) raise(Errc::AlreadyExists, "'" + path + "' already exists");

    const std::string name = baseName(path);
    auto& siblings = rnode.rnodeType == RnodeType::FILE ? parent->fileList : parent->folderList;
    siblings.push_back(name);

    const std::string parentJson = serializeRnode(*parent);
    const std::string childJson = serializeRnode(rnode);
    checkSize(parentJson);
    checkSize(childJson);
    commit({LogOp{parent->filePath, parentJson}, LogOp{path, childJson}});
}

Rnode MetadataCluster::getRnode(const std::string& path, const Guid& caller) const {
    std::lock_guard lock(mutex_);
    validatePath(path);
    auto rnode = lookupLocked(path);
    if (!rnode) raise(Errc::NotFound, "'" + path + "' does not exist");
    if (!rnode->permission.allows(caller)) {
        raise(Errc::PermissionDenied, "caller may not read '" + path + "'");
    }
    return *rnode;
}

void MetadataCluster::deleteRnode(const std::string& path, const Guid& caller) {
    std::lock_guard lock(mutex_);
    validatePath(path);
    if (path == "/") raise(Errc::InvalidParameters, "cannot remove the root directory");
    auto rnode = lookupLocked(path);
    if (!rnode) raise(Errc::NotFound, "'" + path + "' does not exist");
    if (!rnode->permission.allows(caller)) {
        raise(Errc::PermissionDenied, "caller may not remove '" + path + "'");
    }
    if (rnode->rnodeType == RnodeType::DIRECTORY &&
        (!rnode->fileList.empty() || !rnode->folderList.empty())) {
        raise(Errc::DirectoryNotEmpty, "'" + path + "' is not empty");
    }

    auto parent = lookupLocked(parentPath(path));
    if (!parent) raise(Errc::ParentNotFound, "parent of '" + path + "' missing");
    const std::string name = baseName(path);
    auto& siblings = rnode->rnodeType == RnodeType::FILE ? parent->fileList : parent->folderList;
    siblings.erase(std::remove(siblings.begin(), siblings.end(), name), siblings.end());

    commit({LogOp{parent->filePath, serializeRnode(*parent)}, LogOp{path, std::nullopt}});
}

void MetadataCluster::setAcl(const std::string& path, const AccessControlList& acl, const Guid& caller) {
    std::lock_guard lock(mutex_);
    validatePath(path);
    auto rnode = lookupLocked(path);
    if (!rnode) raise(Errc::NotFound, "'" + path + "' does not exist");
    if (caller != rnode->permission.owner) {
        raise(Errc::PermissionDenied, "only the owner may change the ACL of '" + path + "'");
    }
    acl.validate();
    rnode->permission = acl;
    const std::string json = serializeRnode(*rnode);
    checkSize(json);
    commit({LogOp{path, json}});
}

AccessControlList MetadataCluster::getAcl(const std::string& path, const Guid&) const {
    std::lock_guard lock(mutex_);
    validatePath(path);
    auto rnode = lookupLocked(path);
    if (!rnode) raise(Errc::NotFound, "'" + path + "' does not exist");
    return rnode->permission;
}

void MetadataCluster::reformEnsemble(const std::set<Guid>& failedReplicas,
                                     const std::vector<Guid>& newCandidates) {
    std::lock_guard lock(mutex_);
    const int alive = static_cast<int>(
        std::count_if(replicas_.begin(), replicas_.end(), [](const Replica& r) { return r.alive; }));
    const int needed = static_cast<int>((replicas_.size() + 1) / 2);
    if (alive < needed) {
        raise(Errc::QuorumUnavailable,
              "reform refused: only " + std::to_string(alive) + " live replicas, need " +
                  std::to_string(needed) + " to preserve committed data");
    }
    for (const auto& failed : failedReplicas) {
        if (std::none_of(replicas_.begin(), replicas_.end(),
                         [&](const Replica& r) { return r.guid == failed; })) {
            raise(Errc::InvalidParameters, "failed replica '" + failed.value() + "' is not a member");
        }
    }
    for (const auto& candidate : newCandidates) {
        if (std::any_of(replicas_.begin(), replicas_.end(),
                        [&](const Replica& r) { return r.guid == candidate; })) {
            raise(Errc::InvalidParameters, "candidate '" + candidate.value() + "' is already a member");
        }
    }
    const size_t newCount = replicas_.size() - failedReplicas.size() + newCandidates.size();
    if (newCount == 0 || newCount % 2 == 0) {
        raise(Errc::InvalidParameters, "reformed ensemble must have odd positive size");
    }

    std::vector<Replica> survivors;
    for (auto& replica : replicas_) {
        if (!failedReplicas.count(replica.guid)) survivors.push_back(std::move(replica));
    }
    replicas_ = std::move(survivors);
    primary_ = 0;
    primaryIndex();
    catchUp(replicas_[primary_]);

    for (const auto& candidate : newCandidates) {
        Replica replica;
        replica.guid = candidate;
        catchUp(replica);  // full store replication onto the newcomer
        replicas_.push_back(std::move(replica));
    }
    epoch_ += 1;
}

void MetadataCluster::setReplicaAlive(const Guid& guid, bool alive) {
    std::lock_guard lock(mutex_);
    for (auto& replica : replicas_) {
        if (replica.guid != guid) continue;
        if (!replica.alive && alive) catchUp(replica);
        replica.alive = alive;
        return;
    }
    raise(Errc::InvalidParameters, "'" + guid.value() + "' is not a replica");
}

std::optional<Rnode> MetadataCluster::peek(const std::string& path) const {
    std::lock_guard lock(mutex_);
    return lookupLocked(path);
}

std::vector<Rnode> MetadataCluster::listAll() const {
    std::lock_guard lock(mutex_);
    std::vector<Rnode> all;
    for (const auto& [path, json] : readReplica().store) {
        all.push_back(deserializeRnode(json));
    }
    return all;
}

void MetadataCluster::snapshotStores(const std::filesystem::path& directory) const {
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(directory);
    for (const auto& replica : replicas_) {
        nlohmann::json j;
        j["guid"] = replica.guid.value();
        j["alive"] = replica.alive;
        j["appliedIndex"] = replica.appliedIndex;
        nlohmann::json store = nlohmann::json::object();
        for (const auto& [path, rnodeJson] : replica.store) {
            store[path] = nlohmann::json::parse(rnodeJson);
        }
        j["store"] = std::move(store);
        std::ofstream out(directory / (replica.guid.value() + ".json"));
        out << j.dump(2) << '\n';
    }
}

}  // namespace rdrive
