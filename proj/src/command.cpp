#include "rdrive/command.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rdrive::cmd {

namespace {

constexpr size_t kGuidLength = 40;

bool isSpace(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

struct OptionEntry {
    const char* name;
    CommandOption option;
};

constexpr std::array<OptionEntry, 7> kOptions = {{
    {"put", CommandOption::PUT},
    {"get", CommandOption::GET},
    {"mkdir", CommandOption::MKDIR},
    {"ls", CommandOption::LS},
    {"rm", CommandOption::RM},
    {"setfacl", CommandOption::SETFACL},
    {"getfacl", CommandOption::GETFACL},
}};

constexpr std::array<const char*, 3> kFlags = {"wa", "ttl", "block-size"};

bool guidShaped(const std::string& word) {
    return word.size() == kGuidLength && isPrintableAscii(word) && word.front() != '-';
}

}  // namespace

const char* optionName(CommandOption option) {
    for (const auto& entry : kOptions) {
        if (entry.option == option) return entry.name;
    }
    return "?";
}

std::vector<Token> tokenize(const std::string& input) {
    std::vector<Token> tokens;
    size_t i = 0;
    while (i < input.size()) {
        if (isSpace(input[i])) {
            ++i;
            continue;
        }
        const size_t start = i;
        while (i < input.size() && !isSpace(input[i])) {
            const unsigned char c = static_cast<unsigned char>(input[i]);
            if (c < 0x20 || c > 0x7E) {
                raise(Errc::LexError, "illegal character at offset " + std::to_string(i));
            }
            ++i;
        }
        const std::string word = input.substr(start, i - start);
        if (word == "dfs") {
            tokens.push_back({TokenKind::Dfs, word, start});
        } else if (word.rfind("--", 0) == 0) {
            const std::string name = word.substr(2);
            if (std::find(kFlags.begin(), kFlags.end(), name) == kFlags.end()) {
                raise(Errc::LexError, "unknown flag '" + word + "' at offset " + std::to_string(start));
            }
            tokens.push_back({TokenKind::Flag, name, start});
        } else if (word.size() > 1 && word.front() == '-') {
            const std::string name = word.substr(1);
            const bool known = std::any_of(kOptions.begin(), kOptions.end(),
                                           [&](const OptionEntry& e) { return name == e.name; });
            if (!known) {
                raise(Errc::LexError, "unknown option '" + word + "' at offset " + std::to_string(start));
            }
            tokens.push_back({TokenKind::Option, name, start});
        } else {
            tokens.push_back({TokenKind::Word, word, start});
        }
    }
    return tokens;
}

namespace {

class Parser {
public:
    explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

    CommandAst run() {
        expect(TokenKind::Dfs, "the keyword 'dfs'");
        const Token optionToken = expect(TokenKind::Option, "an OPTION (-put, -get, -mkdir, -ls, -rm, -setfacl, -getfacl)");
        CommandAst ast;
        for (const auto& entry : kOptions) {
            if (optionToken.text == entry.name) ast.option = entry.option;
        }
        switch (ast.option) {
            case CommandOption::PUT:
                ast.localPath = path("the local PATH");
                ast.rdrivePath = path("the rdrive PATH");
                maybePermission(ast);
                break;
            case CommandOption::GET:
                ast.rdrivePath = path("the rdrive PATH");
                ast.localPath = path("the local PATH");
                break;
            case CommandOption::MKDIR:
                ast.rdrivePath = path("the rdrive PATH");
                maybePermission(ast);
                break;
            case CommandOption::LS:
            case CommandOption::RM:
            case CommandOption::GETFACL:
                ast.rdrivePath = path("the rdrive PATH");
                break;
            case CommandOption::SETFACL:
                ast.rdrivePath = path("the rdrive PATH");
                ast.permission = permission();
                break;
        }
        flags(ast);
        if (pos_ < tokens_.size()) {
            fail("end of command", tokens_[pos_]);
        }
        return ast;
    }

private:
    [[noreturn]] void fail(const std::string& expected, const Token& found) {
        raise(Errc::ParseError, "expected " + expected + ", found '" + found.text + "' at offset " +
                                    std::to_string(found.offset));
    }

    [[noreturn]] void failEof(const std::string& expected) {
        raise(Errc::ParseError, "expected " + expected + ", found end of input");
    }

    const Token& peek() const { return tokens_[pos_]; }
    bool atEnd() const { return pos_ >= tokens_.size(); }

    Token expect(TokenKind kind, const std::string& what) {
        if (atEnd()) failEof(what);
        if (tokens_[pos_].kind != kind) fail(what, tokens_[pos_]);
        return tokens_[pos_++];
    }

    std::string path(const std::string& what) {
        if (atEnd()) failEof(what);
        const Token& token = peek();
        if (token.kind != TokenKind::Word || token.text.empty() || token.text.front() != '/') {
            fail(what + " (an absolute path)", token);
        }
        ++pos_;
        return token.text;
    }

    void maybePermission(CommandAst& ast) {
        if (atEnd() || peek().kind != TokenKind::Word) return;
        ast.permission = permission();
    }

    PermissionSpec permission() {
        if (atEnd()) failEof("a PERMISSION (OWNER, WORLD, or GUIDs)");
        const Token& token = peek();
        if (token.kind != TokenKind::Word) fail("a PERMISSION (OWNER, WORLD, or GUIDs)", token);
        PermissionSpec spec;
        if (token.text == "OWNER") {
            spec.mode = AclMode::OWNER;
            ++pos_;
            return spec;
        }
        if (token.text == "WORLD") {
            spec.mode = AclMode::WORLD;
            ++pos_;
            return spec;
        }
        spec.mode = AclMode::USERS;
        while (!atEnd() && peek().kind == TokenKind::Word) {
            if (!guidShaped(peek().text)) {
                fail("a GUID (exactly 40 printable ASCII characters)", peek());
            }
            spec.users.emplace_back(peek().text);
            ++pos_;
        }
        if (spec.users.empty()) fail("a GUID (exactly 40 printable ASCII characters)", token);
        return spec;
    }

    void flags(CommandAst& ast) {
        while (!atEnd()) {
            const Token flagToken = expect(TokenKind::Flag, "a flag (--wa, --ttl, --block-size)");
            const Token valueToken = expect(TokenKind::Word, "a value for --" + flagToken.text);
            if (flagToken.text == "wa") {
                try {
                    size_t end = 0;
                    const double value = std::stod(valueToken.text, &end);
                    if (end != valueToken.text.size()) throw std::invalid_argument("trailing junk");
                    ast.availabilityWeight = value;
                } catch (const std::exception&) {
                    fail("a real number for --wa", valueToken);
                }
            } else {
                uint64_t value = 0;
                const auto [ptr, ec] = std::from_chars(
                    valueToken.text.data(), valueToken.text.data() + valueToken.text.size(), value);
                if (ec != std::errc() || ptr != valueToken.text.data() + valueToken.text.size()) {
                    fail("an integer for --" + flagToken.text, valueToken);
                }
                if (flagToken.text == "ttl") {
                    ast.ttlSeconds = value;
                } else {
                    ast.blockSizeBytes = value;
                }
            }
        }
    }

    const std::vector<Token>& tokens_;
    size_t pos_ = 0;
};

}  // namespace

CommandAst parse(const std::vector<Token>& tokens) { return Parser(tokens).run(); }

CommandAst parseCommand(const std::string& input) { return parse(tokenize(input)); }

std::string render(const CommandAst& ast) {
    std::ostringstream out;
    out << "dfs -" << optionName(ast.option);
    switch (ast.option) {
        case CommandOption::PUT:
            out << ' ' << *ast.localPath << ' ' << *ast.rdrivePath;
            break;
        case CommandOption::GET:
            out << ' ' << *ast.rdrivePath << ' ' << *ast.localPath;
            break;
        default:
            out << ' ' << *ast.rdrivePath;
            break;
    }
    if (ast.permission) {
        switch (ast.permission->mode) {
            case AclMode::OWNER: out << " OWNER"; break;
            case AclMode::WORLD: out << " WORLD"; break;
            case AclMode::USERS:
                for (const auto& guid : ast.permission->users) out << ' ' << guid.value();
                break;
        }
    }
    if (ast.availabilityWeight) {
        char buffer[40];
        std::snprintf(buffer, sizeof(buffer), "%.17g", *ast.availabilityWeight);
        out << " --wa " << buffer;
    }
    if (ast.ttlSeconds) out << " --ttl " << *ast.ttlSeconds;
    if (ast.blockSizeBytes) out << " --block-size " << *ast.blockSizeBytes;
    return out.str();
}

int exitCodeFor(Errc code) {
    switch (code) {
        case Errc::LexError:
        case Errc::ParseError: return 2;
        case Errc::NotFound:
        case Errc::ParentNotFound: return 3;
        case Errc::PermissionDenied: return 4;
        case Errc::QuorumUnavailable: return 5;
        case Errc::IrrecoverableBlock: return 6;
        case Errc::NoFeasiblePlan: return 7;
        case Errc::InvalidParameters:
        case Errc::MalformedMetadata: return 8;
        case Errc::AlreadyExists: return 9;
        case Errc::DirectoryNotEmpty: return 10;
        case Errc::AuthenticationFailure: return 11;
        case Errc::InsufficientShards:
        case Errc::InconsistentShards:
        case Errc::DuplicateShardIndex: return 12;
        case Errc::NotADirectory:
        case Errc::NotAFile: return 13;
        case Errc::StorageExhausted: return 14;
        case Errc::UnknownDestination:
        case Errc::PayloadTooLarge:
        case Errc::OverlappingEdges:
        case Errc::Expired: return 15;
        case Errc::MetadataTooLarge: return 16;
    }
    return 1;
}

namespace {

AccessControlList aclFromSpec(const std::optional<PermissionSpec>& spec, const Guid& caller) {
    if (!spec) return AccessControlList::ownerOnly(caller);
    switch (spec->mode) {
        case AclMode::OWNER: return AccessControlList::ownerOnly(caller);
        case AclMode::WORLD: return AccessControlList::world(caller);
        case AclMode::USERS:
            return AccessControlList::users(caller, {spec->users.begin(), spec->users.end()});
    }
    return AccessControlList::ownerOnly(caller);
}

Bytes readLocalFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::NotFound, "cannot open local file '" + path + "'");
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void writeLocalFile(const std::string& path, const Bytes& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::InvalidParameters, "cannot write local file '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
}

const char* aclModeText(AclMode mode) {
    switch (mode) {
        case AclMode::OWNER: return "OWNER";
        case AclMode::WORLD: return "WORLD";
        case AclMode::USERS: return "USERS";
    }
    return "OWNER";
}

}  // namespace

ExecResult execute(const CommandAst& ast, World& world, const Guid& caller) {
    ExecResult result;
    try {
        StorageEngine& engine = world.engine();
        const EngineConfig& defaults = world.config().engine;
        switch (ast.option) {
            case CommandOption::PUT: {
                PutRequest request;
                request.localBytes = readLocalFile(*ast.localPath);
                request.rdrivePath = *ast.rdrivePath;
                request.acl = aclFromSpec(ast.permission, caller);
                request.availabilityWeight =
                    ast.availabilityWeight.value_or(defaults.defaultAvailabilityWeight);
                request.requiredLifetimeMin = defaults.defaultRequiredLifetimeMin;
                request.blockSizeBytes = ast.blockSizeBytes.value_or(0);
                engine.put(request, caller);
                // The CLI reports success once fragments are placed; waiting
                // is bounded so undeliverable pushes cannot wedge a session.
                engine.settle(1 << 16);
                break;
            }
            case CommandOption::GET: {
                const Bytes bytes = engine.get(*ast.rdrivePath, caller);
                writeLocalFile(*ast.localPath, bytes);
                break;
            }
            case CommandOption::MKDIR:
                engine.mkdir(*ast.rdrivePath, aclFromSpec(ast.permission, caller), caller);
                break;
            case CommandOption::LS: {
                std::ostringstream out;
                for (const auto& name : engine.ls(*ast.rdrivePath, caller)) out << name << '\n';
                result.output = out.str();
                break;
            }
            case CommandOption::RM:
                engine.rm(*ast.rdrivePath, caller);
                engine.settle(1 << 16);
                break;
            case CommandOption::SETFACL:
                world.metadata().setAcl(*ast.rdrivePath, aclFromSpec(ast.permission, caller), caller);
                break;
            case CommandOption::GETFACL: {
                const AccessControlList acl = world.metadata().getAcl(*ast.rdrivePath, caller);
                std::ostringstream out;
                out << "owner=" << acl.owner.value() << " mode=" << aclModeText(acl.mode);
                if (!acl.userList.empty()) {
                    out << " users=";
                    bool first = true;
                    for (const auto& guid : acl.userList) {
                        if (!first) out << ',';
                        out << guid.value();
                        first = false;
                    }
                }
                out << '\n';
                result.output = out.str();
                break;
            }
        }
    } catch (const Error& e) {
        result.exitCode = exitCodeFor(e.code());
        result.error = e.what();
    } catch (const std::exception& e) {
        result.exitCode = 1;
        result.error = e.what();
    }
    return result;
}

ExecResult executeLine(const std::string& line, World& world, const Guid& caller) {
    CommandAst ast;
    try {
        ast = parseCommand(line);
    } catch (const Error& e) {
        return {exitCodeFor(e.code()), "", e.what()};
    }
    return execute(ast, world, caller);
}

}  // namespace rdrive::cmd
