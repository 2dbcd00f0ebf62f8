// Python bindings for the main operations: planning, coding, key handling,
// command parsing and a whole simulated world.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rdrive/command.hpp"
#include "rdrive/crypto.hpp"
#include "rdrive/harness.hpp"
#include "rdrive/planner.hpp"
#include "rdrive/reed_solomon.hpp"
#include "rdrive/world.hpp"

namespace py = pybind11;
using namespace rdrive;

namespace {

Bytes toBytes(const py::bytes& data) {
    const std::string view = data;
    return Bytes(view.begin(), view.end());
}

py::bytes fromBytes(const Bytes& data) {
    return py::bytes(reinterpret_cast<const char*>(data.data()), data.size());
}

FileId toFileId(const py::bytes& data) {
    const std::string view = data;
    if (view.size() != 16) throw py::value_error("file id must be 16 bytes");
    FileId id{};
    std::copy(view.begin(), view.end(), id.begin());
    return id;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Resilient erasure-coded edge storage: planner, codecs and a simulated world";

    py::register_exception<Error>(m, "RdriveError");

    py::class_<DeviceProfile>(m, "DeviceProfile")
        .def(py::init([](const std::string& guid, double storageMb, double remainingMin) {
                 return DeviceProfile(Guid(guid), storageMb, remainingMin);
             }),
             py::arg("guid"), py::arg("storage_mb"), py::arg("remaining_time_min"))
        .def_property_readonly("guid", [](const DeviceProfile& d) { return d.guid.value(); })
        .def_readonly("storage_mb", &DeviceProfile::storageAvailableMb)
        .def_readonly("remaining_time_min", &DeviceProfile::remainingTimeMin);

    py::class_<CodingPlan>(m, "CodingPlan")
        .def_readonly("k", &CodingPlan::k)
        .def_readonly("n", &CodingPlan::n)
        .def_readonly("cost", &CodingPlan::cost)
        .def_readonly("code_rate", &CodingPlan::codeRate)
        .def_readonly("encoded_size_mb", &CodingPlan::encodedSizeMb)
        .def_property_readonly("devices", [](const CodingPlan& plan) {
            std::vector<std::string> guids;
            for (const auto& guid : plan.devices) guids.push_back(guid.value());
            return guids;
        });

    m.def("make_guid", [](const std::string& stem, uint64_t index) {
        return Guid::synthetic(stem, index).value();
    }, py::arg("stem"), py::arg("index"), "Deterministic 40-character test GUID");

    // Planner
    m.def("cost", &planner::cost, py::arg("k"), py::arg("n"), py::arg("wa"));
    m.def("system_availability", &planner::systemAvailability, py::arg("k"), py::arg("n"),
          py::arg("p"));
    m.def("device_availability", &planner::deviceAvailability, py::arg("remaining_time_min"),
          py::arg("required_lifetime_min"));
    m.def("cost_lower_bound", [](double wa, int deviceCount) {
        const auto bound = planner::costLowerBound(wa, deviceCount);
        return py::make_tuple(bound.cost, bound.codeRate);
    }, py::arg("wa"), py::arg("device_count"));
    m.def("plan",
          [](double fileSizeMb, double requiredLifetimeMin, double wa,
             const std::vector<DeviceProfile>& devices) {
              planner::PlannerInputs inputs{fileSizeMb, requiredLifetimeMin, wa, devices};
              return planner::plan(inputs);
          },
          py::arg("file_size_mb"), py::arg("required_lifetime_min"), py::arg("wa"),
          py::arg("devices"));

    // Erasure codec
    m.def("rs_encode", [](const py::bytes& block, int k, int n) {
        const auto shards = rs::encode(toBytes(block), k, n);
        py::list out;
        for (const auto& shard : shards.shards) out.append(fromBytes(*shard));
        return out;
    }, py::arg("block"), py::arg("k"), py::arg("n"));
    m.def("rs_decode", [](const std::vector<std::optional<py::bytes>>& shards, int k) {
        rs::ShardSet set;
        set.k = k;
        set.n = static_cast<int>(shards.size());
        for (const auto& shard : shards) {
            if (shard) {
                Bytes bytes = toBytes(*shard);
                if (set.shardLength == 0) set.shardLength = bytes.size();
                set.shards.emplace_back(std::move(bytes));
            } else {
                set.shards.emplace_back(std::nullopt);
            }
        }
        return fromBytes(rs::decode(set));
    }, py::arg("shards"), py::arg("k"));

    // Crypto pipeline
    m.def("encrypt_block", [](const py::bytes& plaintext, const py::bytes& key,
                              const py::bytes& fileId, uint32_t blockIndex) {
        const Bytes keyBytes = toBytes(key);
        if (keyBytes.size() != 32) throw py::value_error("key must be 32 bytes");
        crypto::FileKey fileKey;
        std::copy(keyBytes.begin(), keyBytes.end(), fileKey.bytes.begin());
        return fromBytes(crypto::encryptBlock(toBytes(plaintext), fileKey, toFileId(fileId), blockIndex));
    }, py::arg("plaintext"), py::arg("key"), py::arg("file_id"), py::arg("block_index"));
    m.def("decrypt_block", [](const py::bytes& ciphertext, const py::bytes& key,
                              const py::bytes& fileId, uint32_t blockIndex) {
        const Bytes keyBytes = toBytes(key);
        if (keyBytes.size() != 32) throw py::value_error("key must be 32 bytes");
        crypto::FileKey fileKey;
        std::copy(keyBytes.begin(), keyBytes.end(), fileKey.bytes.begin());
        return fromBytes(crypto::decryptBlock(toBytes(ciphertext), fileKey, toFileId(fileId), blockIndex));
    }, py::arg("ciphertext"), py::arg("key"), py::arg("file_id"), py::arg("block_index"));
    m.def("split_key", [](const py::bytes& key, int shardCount, uint64_t seed) {
        const Bytes keyBytes = toBytes(key);
        if (keyBytes.size() != 32) throw py::value_error("key must be 32 bytes");
        crypto::FileKey fileKey;
        std::copy(keyBytes.begin(), keyBytes.end(), fileKey.bytes.begin());
        Rng rng(seed);
        py::list out;
        for (const auto& shard : crypto::splitKey(fileKey, shardCount, rng)) {
            out.append(py::make_tuple(shard.index,
                                      py::bytes(reinterpret_cast<const char*>(shard.value.data()),
                                                shard.value.size())));
        }
        return out;
    }, py::arg("key"), py::arg("shard_count"), py::arg("seed"));
    m.def("join_key", [](const std::vector<std::pair<int, py::bytes>>& shards, int shardCount) {
        std::vector<crypto::KeyShard> parsed;
        for (const auto& [index, value] : shards) {
            const Bytes bytes = toBytes(value);
            if (bytes.size() != 32) throw py::value_error("shard value must be 32 bytes");
            crypto::KeyShard shard;
            shard.index = index;
            std::copy(bytes.begin(), bytes.end(), shard.value.begin());
            parsed.push_back(shard);
        }
        const crypto::FileKey key = crypto::joinKey(parsed, shardCount);
        return py::bytes(reinterpret_cast<const char*>(key.bytes.data()), key.bytes.size());
    }, py::arg("shards"), py::arg("shard_count"));

    // Command grammar
    m.def("parse_command", [](const std::string& text) {
        const cmd::CommandAst ast = cmd::parseCommand(text);
        py::dict out;
        out["option"] = std::string(cmd::optionName(ast.option));
        if (ast.localPath) out["local_path"] = *ast.localPath;
        if (ast.rdrivePath) out["rdrive_path"] = *ast.rdrivePath;
        if (ast.permission) {
            py::dict permission;
            switch (ast.permission->mode) {
                case AclMode::OWNER: permission["mode"] = "OWNER"; break;
                case AclMode::WORLD: permission["mode"] = "WORLD"; break;
                case AclMode::USERS: permission["mode"] = "USERS"; break;
            }
            std::vector<std::string> users;
            for (const auto& guid : ast.permission->users) users.push_back(guid.value());
            permission["users"] = users;
            out["permission"] = permission;
        }
        if (ast.availabilityWeight) out["wa"] = *ast.availabilityWeight;
        if (ast.ttlSeconds) out["ttl"] = *ast.ttlSeconds;
        if (ast.blockSizeBytes) out["block_size"] = *ast.blockSizeBytes;
        return out;
    }, py::arg("text"));
    m.def("render_command", [](const std::string& text) {
        return cmd::render(cmd::parseCommand(text));
    }, py::arg("text"), "Canonical form of a dfs command");

    // Simulated world
    py::class_<World>(m, "World")
        .def(py::init([](int deviceCount, uint64_t seed) {
                 return std::make_unique<World>(WorldConfig::generated(deviceCount, seed));
             }),
             py::arg("device_count") = 5, py::arg("seed") = 1)
        .def_static("from_config_json", [](const std::string& text) {
            return std::make_unique<World>(WorldConfig::fromJson(text));
        })
        .def_property_readonly("caller", [](const World& world) {
            return world.defaultCaller().value();
        })
        .def("device_guids", [](World& world) {
            std::vector<std::string> guids;
            for (const auto& guid : world.engine().deviceGuids()) guids.push_back(guid.value());
            return guids;
        })
        .def("mkdir", [](World& world, const std::string& path, const std::string& caller) {
            world.engine().mkdir(path, AccessControlList::world(Guid(caller)), Guid(caller));
        }, py::arg("path"), py::arg("caller"))
        .def("put", [](World& world, const std::string& path, const py::bytes& data,
                       const std::string& caller, double wa, uint64_t blockSize) {
            PutRequest request;
            request.localBytes = toBytes(data);
            request.rdrivePath = path;
            request.acl.mode = AclMode::WORLD;
            request.availabilityWeight = wa;
            request.requiredLifetimeMin = world.config().engine.defaultRequiredLifetimeMin;
            request.blockSizeBytes = blockSize;
            const Rnode rnode = world.engine().put(request, Guid(caller));
            world.engine().settle();
            return py::make_tuple(static_cast<int>(rnode.k), static_cast<int>(rnode.n),
                                  static_cast<int>(rnode.blockCount));
        }, py::arg("path"), py::arg("data"), py::arg("caller"), py::arg("wa") = 0.5,
           py::arg("block_size") = 0)
        .def("get", [](World& world, const std::string& path, const std::string& caller) {
            return fromBytes(world.engine().get(path, Guid(caller)));
        }, py::arg("path"), py::arg("caller"))
        .def("ls", [](World& world, const std::string& path, const std::string& caller) {
            return world.engine().ls(path, Guid(caller));
        }, py::arg("path"), py::arg("caller"))
        .def("rm", [](World& world, const std::string& path, const std::string& caller) {
            world.engine().rm(path, Guid(caller));
            world.engine().settle();
        }, py::arg("path"), py::arg("caller"))
        .def("set_device_alive", [](World& world, const std::string& guid, bool alive) {
            world.engine().setDeviceAlive(Guid(guid), alive);
        }, py::arg("guid"), py::arg("alive"))
        .def("execute", [](World& world, const std::string& line, const std::string& caller) {
            const cmd::ExecResult result = cmd::executeLine(line, world, Guid(caller));
            return py::make_tuple(result.exitCode, result.output, result.error);
        }, py::arg("line"), py::arg("caller"), "Run one dfs command; returns (code, out, err)");
}
