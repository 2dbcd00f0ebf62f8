#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rdrive/types.hpp"

namespace rdrive {

// Quorum-replicated hierarchical namespace with ACL enforcement. Writes
// funnel through the primary and commit only when a majority of replicas is
// alive; reads are served from any live replica's committed state. Replica
// liveness is a separate failure domain from storage-device liveness.
class MetadataCluster {
public:
    struct ReplicaView {
        Guid guid;
        bool alive = false;
        int64_t appliedIndex = 0;
        std::map<std::string, std::string> store;  // path -> serialized rnode
    };

    // Replica count must be odd so that the ceil(r/2) commit threshold is a
    // strict majority. Seeds the namespace with a WORLD-readable root.
    MetadataCluster(std::vector<Guid> replicaGuids, const Guid& rootOwner, uint64_t rootTimestampMs);

    // Commits the new rnode and the updated parent listing as one entry.
    void createRnode(const std::string& path, Rnode rnode, const Guid& caller);
    Rnode getRnode(const std::string& path, const Guid& caller) const;
    void deleteRnode(const std::string& path, const Guid& caller);
    void setAcl(const std::string& path, const AccessControlList& acl, const Guid& caller);
    AccessControlList getAcl(const std::string& path, const Guid& caller) const;

    // Replaces failed members with promoted candidates, copying the full
    // committed store onto the newcomers. Requires a live majority of the
    // current ensemble; the resulting ensemble must again be odd-sized.
    void reformEnsemble(const std::set<Guid>& failedReplicas, const std::vector<Guid>& newCandidates);

    // A revived replica replays the committed log it missed.
    void setReplicaAlive(const Guid& guid, bool alive);

    int replicaCount() const;
    int aliveCount() const;
    int quorum() const;
    int64_t epoch() const;
    Guid primary() const;
    std::vector<ReplicaView> replicaViews() const;

    // Store access without ACL checks, for holder-side garbage collection
    // and harness inspection.
    std::optional<Rnode> peek(const std::string& path) const;
    std::vector<Rnode> listAll() const;

    // One JSON file per replica for offline inspection.
    void snapshotStores(const std::filesystem::path& directory) const;

private:
    struct Replica {
        Guid guid;
        bool alive = true;
        int64_t appliedIndex = 0;
        std::map<std::string, std::string> store;
    };

    struct LogOp {
        std::string path;
        std::optional<std::string> rnodeJson;  // nullopt = delete
    };

    void commit(std::vector<LogOp> ops);  // throws QuorumUnavailable
    void applyEntry(Replica& replica, const std::vector<LogOp>& ops) const;
    void catchUp(Replica& replica);
    const Replica& readReplica() const;  // any live replica, primary preferred
    size_t primaryIndex() const;         // elects on primary failure
    std::optional<Rnode> lookupLocked(const std::string& path) const;
    static void checkSize(const std::string& serialized);

    mutable std::mutex mutex_;
    std::vector<Replica> replicas_;
    std::vector<std::vector<LogOp>> log_;
    // Handoff can be triggered lazily from read paths, hence mutable.
    mutable int64_t epoch_ = 0;
    mutable size_t primary_ = 0;
};

}  // namespace rdrive
