#include "rdrive/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "json.hpp"

namespace rdrive::net {

namespace {

std::pair<Guid, Guid> canonicalPair(const Guid& a, const Guid& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

LinkModel LinkModel::probabilistic(double availability, Tick latency, uint64_t bandwidth) {
    LinkModel model;
    model.mode = Mode::Probabilistic;
    model.availability = availability;
    model.latencyTicks = latency;
    model.bandwidthBytesPerTick = bandwidth;
    return model;
}

LinkModel LinkModel::scheduled(std::vector<std::pair<Tick, Tick>> windows, Tick latency,
                               uint64_t bandwidth) {
    LinkModel model;
    model.mode = Mode::Windows;
    model.windows = std::move(windows);
    model.latencyTicks = latency;
    model.bandwidthBytesPerTick = bandwidth;
    return model;
}

void NetworkConfig::addLink(const Guid& a, const Guid& b, LinkModel model) {
    if (a == b) raise(Errc::InvalidParameters, "self links are not allowed");
    links[canonicalPair(a, b)] = std::move(model);
}

const char* netEventName(NetEvent event) {
    switch (event) {
        case NetEvent::Send: return "SEND";
        case NetEvent::Hop: return "HOP";
        case NetEvent::Deliver: return "DELIVER";
        case NetEvent::Expire: return "EXPIRE";
        case NetEvent::DropDuplicate: return "DROP_DUP";
    }
    return "UNKNOWN";
}

// --- JSON config ------------------------------------------------------------

namespace {

using nlohmann::json;

json linkToJson(const LinkModel& model) {
    json j;
    j["latencyTicks"] = model.latencyTicks;
    j["bandwidthBytesPerTick"] = model.bandwidthBytesPerTick;
    switch (model.mode) {
        case LinkModel::Mode::Probabilistic:
            j["availability"] = model.availability;
            break;
        case LinkModel::Mode::Windows: {
            json windows = json::array();
            for (const auto& [start, end] : model.windows) windows.push_back({start, end});
            j["windows"] = std::move(windows);
            break;
        }
        case LinkModel::Mode::Periodic:
            j["periodic"] = {{"offset", model.periodOffset}, {"period", model.period}, {"dwell", model.dwell}};
            break;
    }
    return j;
}

LinkModel linkFromJson(const json& j) {
    LinkModel model;
    if (j.contains("latencyTicks")) model.latencyTicks = j.at("latencyTicks").get<Tick>();
    if (j.contains("bandwidthBytesPerTick")) {
        model.bandwidthBytesPerTick = j.at("bandwidthBytesPerTick").get<uint64_t>();
    }
    const int modes = static_cast<int>(j.contains("availability")) +
                      static_cast<int>(j.contains("windows")) + static_cast<int>(j.contains("periodic"));
    if (modes > 1) raise(Errc::InvalidParameters, "link must have exactly one availability mode");
    if (j.contains("availability")) {
        model.mode = LinkModel::Mode::Probabilistic;
        model.availability = j.at("availability").get<double>();
    } else if (j.contains("windows")) {
        model.mode = LinkModel::Mode::Windows;
        for (const auto& w : j.at("windows")) {
            model.windows.emplace_back(w.at(0).get<Tick>(), w.at(1).get<Tick>());
        }
    } else if (j.contains("periodic")) {
        model.mode = LinkModel::Mode::Periodic;
        const auto& p = j.at("periodic");
        model.periodOffset = p.at("offset").get<Tick>();
        model.period = p.at("period").get<Tick>();
        model.dwell = p.at("dwell").get<Tick>();
    }
    return model;
}

}  // namespace

NetworkConfig NetworkConfig::fromJson(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::InvalidParameters, std::string("invalid network config JSON: ") + e.what());
    }
    NetworkConfig config;
    for (const auto& node : j.at("nodes")) config.nodes.push_back(Guid(node.get<std::string>()));
    if (j.contains("links")) {
        for (const auto& link : j.at("links")) {
            config.addLink(Guid(link.at("a").get<std::string>()), Guid(link.at("b").get<std::string>()),
                           linkFromJson(link));
        }
    }
    if (j.contains("seed")) config.seed = j.at("seed").get<uint64_t>();
    if (j.contains("tickLengthSeconds")) config.tickLengthSeconds = j.at("tickLengthSeconds").get<double>();
    if (j.contains("copyBudget")) config.copyBudget = j.at("copyBudget").get<int>();
    if (j.contains("maxPayloadBytes")) config.maxPayloadBytes = j.at("maxPayloadBytes").get<uint64_t>();
    if (j.contains("packetBytes")) config.packetBytes = j.at("packetBytes").get<uint64_t>();
    return config;
}

std::string NetworkConfig::toJson() const {
    json j;
    json nodesJson = json::array();
    for (const auto& node : nodes) nodesJson.push_back(node.value());
    j["nodes"] = std::move(nodesJson);
    json linksJson = json::array();
    for (const auto& [key, model] : links) {
        json link = linkToJson(model);
        link["a"] = key.first.value();
        link["b"] = key.second.value();
        linksJson.push_back(std::move(link));
    }
    j["links"] = std::move(linksJson);
    j["seed"] = seed;
    j["tickLengthSeconds"] = tickLengthSeconds;
    j["copyBudget"] = copyBudget;
    j["maxPayloadBytes"] = maxPayloadBytes;
    j["packetBytes"] = packetBytes;
    return j.dump(2);
}

// --- Simulator ----------------------------------------------------------------

Simulator::Simulator(NetworkConfig config) : config_(std::move(config)), rng_(config_.seed) {
    if (config_.nodes.empty()) raise(Errc::InvalidParameters, "network has no nodes");
    if (config_.copyBudget < 0) raise(Errc::InvalidParameters, "copy budget must be non-negative");
    if (config_.tickLengthSeconds <= 0) raise(Errc::InvalidParameters, "tick length must be positive");

    for (const auto& guid : config_.nodes) {
        if (nodeIndex_.count(guid)) raise(Errc::InvalidParameters, "duplicate node '" + guid.value() + "'");
        nodeIndex_[guid] = static_cast<int>(nodeGuids_.size());
        nodeGuids_.push_back(guid);
    }
    nodeAlive_.assign(nodeGuids_.size(), true);
    held_.resize(nodeGuids_.size());
    seen_.resize(nodeGuids_.size());
    handlers_.resize(nodeGuids_.size());

    uint64_t minBandwidth = UINT64_MAX;
    for (const auto& [key, model] : config_.links) {
        if (model.bandwidthBytesPerTick < 1) raise(Errc::InvalidParameters, "link bandwidth must be >= 1");
        if (model.latencyTicks < 1) raise(Errc::InvalidParameters, "link latency must be >= 1 tick");
        Link link;
        link.a = nodeIndex(key.first);
        link.b = nodeIndex(key.second);
        link.model = model;
        links_.push_back(std::move(link));
        minBandwidth = std::min(minBandwidth, model.bandwidthBytesPerTick);
    }
    linkUpNow_.assign(links_.size(), false);

    packetBytes_ = config_.packetBytes;
    if (packetBytes_ == 0) packetBytes_ = minBandwidth == UINT64_MAX ? 1 << 20 : minBandwidth;
}

int Simulator::nodeIndex(const Guid& guid) const {
    const auto it = nodeIndex_.find(guid);
    if (it == nodeIndex_.end()) {
        raise(Errc::UnknownDestination, "'" + guid.value() + "' is not a registered node");
    }
    return it->second;
}

uint64_t Simulator::packetSize(const Message& message, uint32_t seq) const {
    if (message.packetCount == 1) return message.payload.size();
    if (seq + 1 < message.packetCount) return packetBytes_;
    return message.payload.size() - static_cast<uint64_t>(message.packetCount - 1) * packetBytes_;
}

DeliveryHandle Simulator::send(Envelope envelope) {
    const int source = nodeIndex(envelope.source);
    const int dest = nodeIndex(envelope.dest);
    if (envelope.payload.size() > config_.maxPayloadBytes) {
        raise(Errc::PayloadTooLarge, "payload of " + std::to_string(envelope.payload.size()) +
                                         " bytes exceeds the configured maximum");
    }

    Message message;
    message.id = messages_.size();
    message.source = source;
    message.dest = dest;
    message.payload = std::move(envelope.payload);
    message.packetCount = message.payload.empty()
                              ? 1
                              : static_cast<uint32_t>((message.payload.size() + packetBytes_ - 1) / packetBytes_);
    message.bornTick = now_;
    if (envelope.ttlSeconds != kInfiniteTtl) {
        message.ttlTicks = static_cast<Tick>(static_cast<double>(envelope.ttlSeconds) / config_.tickLengthSeconds);
    }
    message.destReceived.assign(message.packetCount, false);
    message.relayCopies.assign(message.packetCount, 0);
    message.status = std::make_shared<DeliveryStatus>();
    message.status->messageId = message.id;

    const uint32_t index = static_cast<uint32_t>(messages_.size());
    pushEvent(now_, NetEvent::Send, message, 0, source, dest, message.payload.size());

    if (source == dest) {
        // Local delivery: resolved immediately, callback on the next tick.
        message.active = false;
        message.status->state = DeliveryState::Delivered;
        message.status->tick = now_;
        pushEvent(now_, NetEvent::Deliver, message, 0, source, dest, message.payload.size());
        pendingDeliveryCallbacks_.emplace_back(index, now_);
        messages_.push_back(std::move(message));
        return messages_.back().status;
    }

    for (uint32_t seq = 0; seq < message.packetCount; ++seq) {
        held_[static_cast<size_t>(source)].insert({index, seq});
        seen_[static_cast<size_t>(source)].insert({index, seq});
    }
    messages_.push_back(std::move(message));
    return messages_.back().status;
}

bool Simulator::linkUp(size_t linkIndex, Tick tick) const {
    const Link& link = links_[linkIndex];
    if (!nodeAlive_[static_cast<size_t>(link.a)] || !nodeAlive_[static_cast<size_t>(link.b)]) return false;
    switch (link.model.mode) {
        case LinkModel::Mode::Probabilistic:
            return linkUpNow_[linkIndex];
        case LinkModel::Mode::Windows:
            return std::any_of(link.model.windows.begin(), link.model.windows.end(),
                               [&](const auto& w) { return tick >= w.first && tick < w.second; });
        case LinkModel::Mode::Periodic: {
            if (link.model.period <= 0 || link.model.dwell <= 0) return false;
            if (tick < link.model.periodOffset) return false;
            return (tick - link.model.periodOffset) % link.model.period < link.model.dwell;
        }
    }
    return false;
}

void Simulator::purgeMessagePackets(uint32_t messageIndex) {
    for (auto& store : held_) {
        auto it = store.lower_bound({messageIndex, 0});
        while (it != store.end() && it->first == messageIndex) it = store.erase(it);
    }
    for (auto& [tick, bucket] : transits_) {
        std::erase_if(bucket, [&](const Transit& t) { return t.message == messageIndex; });
    }
}

void Simulator::expireMessages(Tick tick) {
    for (uint32_t i = 0; i < messages_.size(); ++i) {
        Message& message = messages_[i];
        if (!message.active || message.ttlTicks < 0) continue;
        if (tick - message.bornTick <= message.ttlTicks) continue;
        message.active = false;
        message.status->state = DeliveryState::Expired;
        message.status->tick = tick;
        purgeMessagePackets(i);
        pushEvent(tick, NetEvent::Expire, message, 0, message.source, message.dest,
                  message.payload.size());
    }
}

void Simulator::movePackets(Tick tick) {
    // Probabilistic links are sampled once per tick in link order, keeping the
    // random stream independent of traffic.
    for (size_t i = 0; i < links_.size(); ++i) {
        if (links_[i].model.mode == LinkModel::Mode::Probabilistic) {
            linkUpNow_[i] = rng_.nextDouble() < links_[i].model.availability;
        }
    }

    for (size_t linkIndex = 0; linkIndex < links_.size(); ++linkIndex) {
        if (!linkUp(linkIndex, tick)) continue;
        const Link& link = links_[linkIndex];
        uint64_t budget = link.model.bandwidthBytesPerTick;
        const std::array<std::pair<int, int>, 2> directions = {
            std::pair{link.a, link.b}, std::pair{link.b, link.a}};
        for (const auto& [from, to] : directions) {
            if (budget == 0) break;
            auto& store = held_[static_cast<size_t>(from)];
            for (const auto& key : store) {
                Message& message = messages_[key.first];
                if (!message.active) continue;
                if (seen_[static_cast<size_t>(to)].count(key)) continue;
                const bool isDest = to == message.dest;
                if (!isDest && message.relayCopies[key.second] >= config_.copyBudget) continue;
                const uint64_t size = packetSize(message, key.second);
                if (size > budget) break;  // whole-packet transfers, in-order
                budget -= size;
                seen_[static_cast<size_t>(to)].insert(key);
                if (!isDest) ++message.relayCopies[key.second];
                transits_[tick + link.model.latencyTicks].push_back(
                    {key.first, key.second, from, to, size});
                if (budget == 0) break;
            }
            if (budget == 0) break;
        }
    }
}

void Simulator::processArrivals(Tick tick) {
    const auto it = transits_.find(tick);
    if (it == transits_.end()) return;
    const std::vector<Transit> arrivals = std::move(it->second);
    transits_.erase(it);

    for (const Transit& transit : arrivals) {
        Message& message = messages_[transit.message];
        if (!message.active) {
            pushEvent(tick, NetEvent::DropDuplicate, message, transit.seq, transit.from, transit.to,
                      transit.bytes);
            continue;
        }
        pushEvent(tick, NetEvent::Hop, message, transit.seq, transit.from, transit.to, transit.bytes);
        if (transit.to == message.dest) {
            if (!message.destReceived[transit.seq]) {
                message.destReceived[transit.seq] = true;
                ++message.destReceivedCount;
            }
            if (message.destReceivedCount == message.packetCount) {
                message.active = false;
                message.status->state = DeliveryState::Delivered;
                message.status->tick = tick;
                purgeMessagePackets(transit.message);
                pushEvent(tick, NetEvent::Deliver, message, 0, message.source, message.dest,
                          message.payload.size());
                pendingDeliveryCallbacks_.emplace_back(transit.message, tick);
            }
        } else {
            held_[static_cast<size_t>(transit.to)].insert({transit.message, transit.seq});
        }
    }
}

std::vector<TraceEvent> Simulator::advance(int ticks) {
    if (ticks < 0) raise(Errc::InvalidParameters, "cannot advance a negative tick count");
    const size_t traceStart = trace_.size();
    for (int step = 0; step < ticks; ++step) {
        now_ += 1;
        expireMessages(now_);
        movePackets(now_);
        processArrivals(now_);

        // Delivery callbacks fire in (tick, messageId) order; handlers may
        // send new messages, which join the loop next tick.
        auto callbacks = std::move(pendingDeliveryCallbacks_);
        pendingDeliveryCallbacks_.clear();
        std::sort(callbacks.begin(), callbacks.end(), [](const auto& x, const auto& y) {
            return x.second != y.second ? x.second < y.second : x.first < y.first;
        });
        for (const auto& [messageIndex, deliveredTick] : callbacks) {
            const Message& message = messages_[messageIndex];
            auto& handler = handlers_[static_cast<size_t>(message.dest)];
            if (handler && nodeAlive_[static_cast<size_t>(message.dest)]) {
                handler(nodeGuids_[static_cast<size_t>(message.source)], message.payload);
            }
        }
    }
    return {trace_.begin() + static_cast<long>(traceStart), trace_.end()};
}

void Simulator::setMuleSchedule(const Guid& mule, const std::set<Guid>& edgeA,
                                const std::set<Guid>& edgeB, Tick period, Tick dwell,
                                const LinkModel& linkBase) {
    nodeIndex(mule);
    for (const auto& guid : edgeA) {
        if (edgeB.count(guid)) {
            raise(Errc::OverlappingEdges, "'" + guid.value() + "' appears in both edges");
        }
    }
    if (edgeA.count(mule) || edgeB.count(mule)) {
        raise(Errc::OverlappingEdges, "mule cannot be part of an edge");
    }
    if (period < 2 || period % 2 != 0) raise(Errc::InvalidParameters, "period must be even and >= 2");
    if (dwell < 0 || dwell > period / 2) {
        raise(Errc::InvalidParameters, "dwell must be in [0, period/2]");
    }

    auto install = [&](const Guid& other, Tick offset) {
        LinkModel model = linkBase;
        model.mode = LinkModel::Mode::Periodic;
        model.periodOffset = offset;
        model.period = period;
        model.dwell = dwell;
        const int a = nodeIndex(mule);
        const int b = nodeIndex(other);
        // Replaces any existing mule link to this node.
        for (auto& link : links_) {
            if ((link.a == a && link.b == b) || (link.a == b && link.b == a)) {
                link.model = model;
                return;
            }
        }
        Link link;
        link.a = std::min(a, b);
        link.b = std::max(a, b);
        link.model = model;
        links_.push_back(std::move(link));
        linkUpNow_.push_back(false);
    };

    for (const auto& guid : edgeA) install(guid, 0);
    for (const auto& guid : edgeB) install(guid, period / 2);
}

void Simulator::registerHandler(const Guid& node, MessageHandler handler) {
    handlers_[static_cast<size_t>(nodeIndex(node))] = std::move(handler);
}

void Simulator::setNodeAlive(const Guid& node, bool alive) {
    nodeAlive_[static_cast<size_t>(nodeIndex(node))] = alive;
}

size_t Simulator::activeMessageCount() const {
    return static_cast<size_t>(std::count_if(messages_.begin(), messages_.end(),
                                             [](const Message& m) { return m.active; }));
}

int Simulator::settle(int maxTicks) {
    int advanced = 0;
    while (advanced < maxTicks && activeMessageCount() > 0) {
        advance(1);
        ++advanced;
    }
    return advanced;
}

void Simulator::pushEvent(Tick tick, NetEvent event, const Message& message, uint32_t seq, int from,
                          int to, uint64_t bytes) {
    trace_.push_back({tick, event, message.id, seq, nodeGuids_[static_cast<size_t>(from)],
                      nodeGuids_[static_cast<size_t>(to)], bytes});
}

void Simulator::writeTraceCsv(std::ostream& out, const std::vector<TraceEvent>& events) {
    out << "tick,event,messageId,packetSeq,fromGuid,toGuid,bytes\n";
    for (const auto& event : events) {
        out << event.tick << ',' << netEventName(event.event) << ',' << event.messageId << ','
            << event.packetSeq << ',' << event.from.value() << ',' << event.to.value() << ','
            << event.bytes << '\n';
    }
}

}  // namespace rdrive::net
