#pragma once

#include <stdexcept>
#include <string>

namespace mcflab {

// Base class for every error raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometry evaluation hit a non-positive area element, duplicate vertices,
// or an otherwise unusable discrete surface.
struct DegenerateGeometry : Error {
    using Error::Error;
};

// Operation invoked with incompatible dimensions (model vs. surface, field sizes).
struct DimensionMismatch : Error {
    using Error::Error;
};

// Requested quantity is not defined for the given model space.
struct UnsupportedModel : Error {
    using Error::Error;
};

// An explicit step produced an invalid state; caller may retry with smaller dt.
struct StepRejected : Error {
    using Error::Error;
};

// The CFL time step fell below the representable floor (1e-14).
struct DtUnderflow : Error {
    using Error::Error;
};

// Step rejection persisted through the maximum number of dt halvings.
struct FlowStalled : Error {
    using Error::Error;
};

// A diagnostic requiring ||H|| > 0 was evaluated on a state violating it.
struct ZeroMeanCurvature : Error {
    using Error::Error;
};

// Arcsin argument in the Sobolev ball condition left [0, 1].
struct ArcsinDomain : Error {
    using Error::Error;
};

// Verification window holds fewer than three snapshots.
struct WindowTooShort : Error {
    using Error::Error;
};

// Verification window contains a redistribution event (breaks material tracking).
struct RedistributionInWindow : Error {
    using Error::Error;
};

// Requested dt violates the diffusion CFL bound of a maximum-principle run.
struct CflViolation : Error {
    using Error::Error;
};

// Polynomial-type map composition has inconsistent ranks.
struct IllTypedMap : Error {
    using Error::Error;
};

// Configuration file could not be parsed; message carries the key path.
struct ParseError : Error {
    using Error::Error;
};

// Configuration parsed but a value is outside its documented domain.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem-level failure while emitting artifacts.
struct IoError : Error {
    using Error::Error;
};

}  // namespace mcflab
