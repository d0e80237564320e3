#pragma once

#include <stdexcept>
#include <string>

namespace triagekit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// config file or spec object fails validation
struct ConfigError : Error { using Error::Error; };

// malformed input record (bad JSON, missing required field)
struct InputError : Error { using Error::Error; };

// no label-table match and no default
struct MissingLabel : Error { using Error::Error; };

// relevance vector does not match chain length
struct LengthMismatch : Error { using Error::Error; };

// exhaustive oracle guard
struct ChainTooLong : Error { using Error::Error; };

// child-process scorer/fidelity protocol violation, timeout, bad score
struct ExternalScorerFailure : Error { using Error::Error; };

// external expert backend failure; absorbed by the pipeline degrade path
struct ExternalExpertFailure : Error { using Error::Error; };

// fixture file has no entry for a requested id
struct FixtureMissing : Error { using Error::Error; };

// compression selected zero steps; tuple cannot be built
struct EmptyReasoning : Error { using Error::Error; };

// evaluation records and truth set do not share ids
struct IdMismatch : Error { using Error::Error; };

}  // namespace triagekit
