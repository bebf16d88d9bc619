#pragma once

#include <stdexcept>
#include <string>

namespace holeopt {

/// Root of all toolkit errors. Numerical failures map to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid geometric configuration (ball leaves the domain, bad curve, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Nearest boundary point is not unique or the query lies beyond the reach.
class AmbiguousProjection : public GeometryError {
public:
    using GeometryError::GeometryError;
};

class MeshFailure : public Error {
public:
    using Error::Error;
};

class OutsideMesh : public Error {
public:
    using Error::Error;
};

class SingularBoundaryMass : public Error {
public:
    using Error::Error;
};

class FitDiverged : public Error {
public:
    using Error::Error;
};

class InfeasibleStart : public GeometryError {
public:
    using GeometryError::GeometryError;
};

/// Bad user configuration; exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace holeopt
