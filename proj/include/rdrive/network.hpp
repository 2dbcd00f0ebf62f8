#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rdrive/rng.hpp"
#include "rdrive/types.hpp"

// Deterministic discrete-event simulator of GUID-addressed, disruption-
// tolerant transport: per-tick link availability, TTL-bounded messages split
// into sequenced packets, store-and-forward epidemic relaying with a copy
// budget, and periodic data-mule contact schedules.
namespace rdrive::net {

using Tick = int64_t;

inline constexpr uint64_t kInfiniteTtl = UINT64_MAX;

struct LinkModel {
    enum class Mode { Probabilistic, Windows, Periodic };

    Mode mode = Mode::Probabilistic;
    double availability = 1.0;                   // per-tick Bernoulli (Probabilistic)
    std::vector<std::pair<Tick, Tick>> windows;  // [start, end) contact windows (Windows)
    Tick periodOffset = 0;                       // Periodic: up while ((t-offset) mod period) < dwell
    Tick period = 0;
    Tick dwell = 0;
    Tick latencyTicks = 1;
    uint64_t bandwidthBytesPerTick = 1 << 20;

    static LinkModel probabilistic(double availability, Tick latency, uint64_t bandwidth);
    static LinkModel scheduled(std::vector<std::pair<Tick, Tick>> windows, Tick latency, uint64_t bandwidth);
};

struct NetworkConfig {
    std::vector<Guid> nodes;
    std::map<std::pair<Guid, Guid>, LinkModel> links;  // key is the sorted guid pair
    uint64_t seed = 0;
    double tickLengthSeconds = 1.0;
    int copyBudget = 4;              // relay copies per packet beyond the source
    uint64_t maxPayloadBytes = 1ull << 32;
    uint64_t packetBytes = 0;        // 0 = auto: the minimum link bandwidth

    void addLink(const Guid& a, const Guid& b, LinkModel model);

    static NetworkConfig fromJson(const std::string& text);
    std::string toJson() const;
};

enum class DeliveryState { Pending, Delivered, Expired };

struct DeliveryStatus {
    DeliveryState state = DeliveryState::Pending;
    Tick tick = -1;  // delivery or expiry tick
    uint64_t messageId = 0;
};

using DeliveryHandle = std::shared_ptr<const DeliveryStatus>;

struct Envelope {
    Guid source;
    Guid dest;
    Bytes payload;
    uint64_t ttlSeconds = kInfiniteTtl;
};

enum class NetEvent { Send, Hop, Deliver, Expire, DropDuplicate };

struct TraceEvent {
    Tick tick = 0;
    NetEvent event = NetEvent::Send;
    uint64_t messageId = 0;
    uint32_t packetSeq = 0;
    Guid from;
    Guid to;
    uint64_t bytes = 0;
};

const char* netEventName(NetEvent event);

using MessageHandler = std::function<void(const Guid& source, const Bytes& payload)>;

class Simulator {
public:
    explicit Simulator(NetworkConfig config);

    // Queues a message; packets start moving on the next advance() tick.
    DeliveryHandle send(Envelope envelope);

    // Steps the event loop, returning the events of exactly these ticks.
    std::vector<TraceEvent> advance(int ticks);

    // Installs periodic contact windows: mule <-> edgeA while
    // ((t mod period) < dwell), mule <-> edgeB in the opposite half-period.
    void setMuleSchedule(const Guid& mule, const std::set<Guid>& edgeA, const std::set<Guid>& edgeB,
                         Tick period, Tick dwell, const LinkModel& linkBase = LinkModel{});

    // Reassembled payloads for this destination, in delivery order (ties by
    // message id). At most one handler per node.
    void registerHandler(const Guid& node, MessageHandler handler);

    // A dead node neither relays nor receives; its stored packets freeze.
    void setNodeAlive(const Guid& node, bool alive);

    Tick now() const { return now_; }
    double tickLengthSeconds() const { return config_.tickLengthSeconds; }
    size_t activeMessageCount() const;
    const std::vector<TraceEvent>& trace() const { return trace_; }

    // Runs until no undelivered, unexpired message remains or the budget is
    // exhausted; returns the number of ticks advanced.
    int settle(int maxTicks);

    static void writeTraceCsv(std::ostream& out, const std::vector<TraceEvent>& events);

private:
    struct Link {
        int a = 0;
        int b = 0;
        LinkModel model;
    };

    struct Message {
        uint64_t id = 0;
        int source = 0;
        int dest = 0;
        Bytes payload;
        uint32_t packetCount = 0;
        Tick bornTick = 0;
        Tick ttlTicks = -1;  // -1 = never expires
        std::vector<bool> destReceived;
        uint32_t destReceivedCount = 0;
        std::vector<uint8_t> relayCopies;  // per packet, excludes the source copy
        bool active = true;
        std::shared_ptr<DeliveryStatus> status;
    };

    struct Transit {
        uint32_t message = 0;
        uint32_t seq = 0;
        int from = 0;
        int to = 0;
        uint64_t bytes = 0;
    };

    using PacketKey = std::pair<uint32_t, uint32_t>;  // (message index, seq)

    int nodeIndex(const Guid& guid) const;
    uint64_t packetSize(const Message& message, uint32_t seq) const;
    bool linkUp(size_t linkIndex, Tick tick) const;
    void expireMessages(Tick tick);
    void movePackets(Tick tick);
    void processArrivals(Tick tick);
    void purgeMessagePackets(uint32_t messageIndex);
    void pushEvent(Tick tick, NetEvent event, const Message& message, uint32_t seq, int from, int to,
                   uint64_t bytes);

    NetworkConfig config_;
    Rng rng_;
    Tick now_ = 0;
    uint64_t packetBytes_ = 1;
    std::map<Guid, int> nodeIndex_;
    std::vector<Guid> nodeGuids_;
    std::vector<bool> nodeAlive_;
    std::vector<Link> links_;
    std::vector<bool> linkUpNow_;
    std::vector<Message> messages_;
    std::vector<std::set<PacketKey>> held_;  // forwardable copies per node
    std::vector<std::set<PacketKey>> seen_;  // duplicate suppression per node
    std::map<Tick, std::vector<Transit>> transits_;
    std::vector<MessageHandler> handlers_;
    std::vector<std::pair<uint32_t, Tick>> pendingDeliveryCallbacks_;  // (message, tick)
    std::vector<TraceEvent> trace_;
};

}  // namespace rdrive::net
