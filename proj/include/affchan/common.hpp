#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace affchan {

// Error taxonomy. Callers distinguish "data absent" from "data empty" and
// schema problems from value-domain problems, so these stay separate types.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct IntegrityError : Error {
    using Error::Error;
};
struct MissingDataError : Error {
    using Error::Error;
};
struct MissingSidecarError : MissingDataError {
    using MissingDataError::MissingDataError;
};
struct ValidationError : Error {
    using Error::Error;
};
struct ContractError : Error {
    using Error::Error;
};
struct ConvergenceError : Error {
    using Error::Error;
};
struct DegenerateInputError : Error {
    using Error::Error;
};
struct EmptyDesignError : Error {
    using Error::Error;
};

}  // namespace affchan
