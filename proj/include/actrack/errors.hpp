#pragma once

#include <stdexcept>
#include <string>

namespace actrack {

/// Geometry that cannot form valid measurement masks (alpha <= 1, R < 1, ...).
class InvalidGeometryError : public std::invalid_argument {
public:
    explicit InvalidGeometryError(const std::string& what) : std::invalid_argument(what) {}
};

/// A measurement that cannot be produced at the requested location
/// (mask leaves the image, all inner pixels hidden, too few usable ring pixels).
class MeasurementUnavailableError : public std::runtime_error {
public:
    explicit MeasurementUnavailableError(const std::string& what) : std::runtime_error(what) {}
};

/// A track that violates the structural contract (too short, frame holes).
class InvalidTrackError : public std::invalid_argument {
public:
    explicit InvalidTrackError(const std::string& what) : std::invalid_argument(what) {}
};

/// A configuration that violates its own constraints (overlap >= chunkSize, ...).
class InvalidConfigError : public std::invalid_argument {
public:
    explicit InvalidConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Unreadable or malformed input data (files, CSV rows, image headers).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace actrack
