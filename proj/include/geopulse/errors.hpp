#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geopulse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// expression language
struct SyntaxError : Error {
    std::size_t offset;
    SyntaxError(const std::string& what, std::size_t off)
        : Error(what + " (byte " + std::to_string(off) + ")"), offset(off) {}
};
struct UnknownIdentifier : Error {
    std::size_t offset;
    UnknownIdentifier(const std::string& name, std::size_t off)
        : Error("unknown identifier '" + name + "' (byte " + std::to_string(off) + ")"),
          offset(off) {}
};
struct ArityMismatch : Error {
    std::size_t offset;
    ArityMismatch(const std::string& what, std::size_t off)
        : Error(what + " (byte " + std::to_string(off) + ")"), offset(off) {}
};
struct DomainError : Error {
    using Error::Error;
};

// spectral structure
struct NearDegenerate : Error {
    using Error::Error;
};
struct NonReal : Error {
    using Error::Error;
};
struct BoundaryRankMismatch : Error {
    using Error::Error;
};
struct SingularBoundaryMatrix : Error {
    using Error::Error;
};

// characteristics
struct CausticDetected : Error {
    using Error::Error;
};
struct ConeExit : Error {
    using Error::Error;
};
struct BlowupDetected : Error {
    double where_y0;
    BlowupDetected(const std::string& what, double y0) : Error(what), where_y0(y0) {}
};

// correctors
struct UnboundedSupport : Error {
    using Error::Error;
};

// reference solver
struct CflViolation : Error {
    using Error::Error;
};
struct InstabilityDetected : Error {
    using Error::Error;
};

// scenario configuration
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace geopulse
