#include "rdrive/errors.hpp"

namespace rdrive {

const char* errcName(Errc code) {
    switch (code) {
        case Errc::InvalidParameters: return "InvalidParameters";
        case Errc::MalformedMetadata: return "MalformedMetadata";
        case Errc::NoFeasiblePlan: return "NoFeasiblePlan";
        case Errc::ParentNotFound: return "ParentNotFound";
        case Errc::NotFound: return "NotFound";
        case Errc::AlreadyExists: return "AlreadyExists";
        case Errc::PermissionDenied: return "PermissionDenied";
        case Errc::QuorumUnavailable: return "QuorumUnavailable";
        case Errc::DirectoryNotEmpty: return "DirectoryNotEmpty";
        case Errc::MetadataTooLarge: return "MetadataTooLarge";
        case Errc::InsufficientShards: return "InsufficientShards";
        case Errc::InconsistentShards: return "InconsistentShards";
        case Errc::DuplicateShardIndex: return "DuplicateShardIndex";
        case Errc::AuthenticationFailure: return "AuthenticationFailure";
        case Errc::IrrecoverableBlock: return "IrrecoverableBlock";
        case Errc::NotADirectory: return "NotADirectory";
        case Errc::NotAFile: return "NotAFile";
        case Errc::StorageExhausted: return "StorageExhausted";
        case Errc::UnknownDestination: return "UnknownDestination";
        case Errc::PayloadTooLarge: return "PayloadTooLarge";
        case Errc::OverlappingEdges: return "OverlappingEdges";
        case Errc::Expired: return "Expired";
        case Errc::LexError: return "LexError";
        case Errc::ParseError: return "ParseError";
    }
    return "UnknownError";
}

}  // namespace rdrive
