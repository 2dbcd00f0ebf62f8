#pragma once

#include <stdexcept>
#include <string>

namespace rdrive {

// Every failure the library reports, one code per condition. The CLI maps
// these onto its exit-code table (see command.hpp).
enum class Errc {
    InvalidParameters,
    MalformedMetadata,
    NoFeasiblePlan,
    ParentNotFound,
    NotFound,
    AlreadyExists,
    PermissionDenied,
    QuorumUnavailable,
    DirectoryNotEmpty,
    MetadataTooLarge,
    InsufficientShards,
    InconsistentShards,
    DuplicateShardIndex,
    AuthenticationFailure,
    IrrecoverableBlock,
    NotADirectory,
    NotAFile,
    StorageExhausted,
    UnknownDestination,
    PayloadTooLarge,
    OverlappingEdges,
    Expired,
    LexError,
    ParseError,
};

const char* errcName(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errcName(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace rdrive
