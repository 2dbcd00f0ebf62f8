#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdrive/types.hpp"
#include "rdrive/world.hpp"

// Hand-written lexer and recursive-descent parser for the `dfs` command
// grammar, plus the binding of parsed commands to engine operations.
//
//   COMMAND   ::= 'dfs' OPTION ARGUMENT
//   OPTION    ::= -put | -get | -mkdir | -ls | -rm | -setfacl | -getfacl
//   ARGUMENT  ::= PATH | PERMISSION | PATH PERMISSION
//   PATH      ::= <local_path> | <rdrive_path> | <local_path> <rdrive_path>
//   PERMISSION::= 'OWNER' | 'WORLD' | USERS
//   USERS     ::= GUID | USERS GUID
//   GUID      ::= <40 printable ASCII characters>
//
// `--wa <real>`, `--ttl <seconds>` and `--block-size <bytes>` are accepted
// after the argument as configuration overrides.
namespace rdrive::cmd {

enum class TokenKind { Dfs, Option, Flag, Word };

struct Token {
    TokenKind kind = TokenKind::Word;
    std::string text;   // option/flag names are stored without dashes
    size_t offset = 0;  // byte offset in the input

    bool operator==(const Token&) const = default;
};

std::vector<Token> tokenize(const std::string& input);  // throws LexError

enum class CommandOption { PUT, GET, MKDIR, LS, RM, SETFACL, GETFACL };

const char* optionName(CommandOption option);  // "-put", ...

struct PermissionSpec {
    AclMode mode = AclMode::OWNER;
    std::vector<Guid> users;  // nonempty iff mode == USERS

    bool operator==(const PermissionSpec&) const = default;
};

struct CommandAst {
    CommandOption option = CommandOption::LS;
    std::optional<std::string> localPath;
    std::optional<std::string> rdrivePath;
    std::optional<PermissionSpec> permission;
    std::optional<double> availabilityWeight;  // --wa
    std::optional<uint64_t> ttlSeconds;        // --ttl
    std::optional<uint64_t> blockSizeBytes;    // --block-size

    bool operator==(const CommandAst&) const = default;
};

CommandAst parse(const std::vector<Token>& tokens);    // throws ParseError
CommandAst parseCommand(const std::string& input);     // tokenize + parse

// Canonical text form; parse(render(ast)) == ast.
std::string render(const CommandAst& ast);

struct ExecResult {
    int exitCode = 0;
    std::string output;  // stdout payload (ls listing, ACL text)
    std::string error;   // diagnostic for the error stream
};

// Exit codes: 0 ok, 2 parse, 3 not-found, 4 permission, 5 quorum,
// 6 irrecoverable, 7 infeasible-plan; the remaining errors get distinct
// codes 8..16, and 1 is an internal/IO failure.
int exitCodeFor(Errc code);

ExecResult execute(const CommandAst& ast, World& world, const Guid& caller);

// Parses and executes one command line against the session's world.
ExecResult executeLine(const std::string& line, World& world, const Guid& caller);

}  // namespace rdrive::cmd
