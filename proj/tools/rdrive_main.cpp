// `rdrive` - command-line front end for the simulated storage system.
//
// One process hosts one world (devices + network + metadata + engine) built
// from --config / RDRIVE_CONFIG or generated on the fly; commands are either
// a single -c string or lines read from stdin (REPL mode). The process exit
// status is the last command's exit code.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rdrive/command.hpp"
#include "rdrive/world.hpp"

namespace {

std::string readFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "rdrive: cannot open config '" << path << "'\n";
        std::exit(1);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rdrive - CLI for a simulated resilient edge storage deployment"};
    std::string configPath;
    std::string command;
    std::string callerText;
    int devices = 5;
    uint64_t seed = 1;
    app.add_option("--config", configPath, "World config JSON (default: $RDRIVE_CONFIG or generated)");
    app.add_option("-c,--command", command, "Execute one dfs command and exit");
    app.add_option("--caller", callerText, "Session caller GUID (default: config caller)");
    app.add_option("--devices", devices, "Device count for the generated world");
    app.add_option("--seed", seed, "Seed for the generated world");
    CLI11_PARSE(app, argc, argv);

    try {
        if (configPath.empty()) {
            if (const char* env = std::getenv("RDRIVE_CONFIG")) configPath = env;
        }
        rdrive::WorldConfig config = configPath.empty()
                                         ? rdrive::WorldConfig::generated(devices, seed)
                                         : rdrive::WorldConfig::fromJson(readFile(configPath));
        rdrive::World world(std::move(config));
        const rdrive::Guid caller =
            callerText.empty() ? world.defaultCaller() : rdrive::Guid(callerText);

        auto runLine = [&](const std::string& line) {
            const rdrive::cmd::ExecResult result = rdrive::cmd::executeLine(line, world, caller);
            if (!result.output.empty()) std::cout << result.output;
            if (!result.error.empty()) std::cerr << "rdrive: " << result.error << '\n';
            return result.exitCode;
        };

        if (!command.empty()) return runLine(command);

        int lastCode = 0;
        std::string line;
        while (std::getline(std::cin, line)) {
            const auto first = line.find_first_not_of(" \t\r\n");
            if (first == std::string::npos || line[first] == '#') continue;
            lastCode = runLine(line);
        }
        return lastCode;
    } catch (const rdrive::Error& e) {
        std::cerr << "rdrive: " << e.what() << '\n';
        return rdrive::cmd::exitCodeFor(e.code());
    } catch (const std::exception& e) {
        std::cerr << "rdrive: " << e.what() << '\n';
        return 1;
    }
}
