#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace parceldelin {

// Base of every error thrown by the toolkit. Each subclass maps to one error
// category of the pipeline so callers (and the CLI) can react per category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coordinates outside a projection's validity region, near-pole latitudes.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed bytes or text: bad magic, truncated records, schema violations.
class FormatError : public Error {
public:
    using Error::Error;
};

class UnsupportedFeatureError : public Error {
public:
    using Error::Error;
};

class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

// Tile sampling ran out of attempts; carries how many footprints were accepted.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, std::size_t accepted)
        : Error(what), accepted_(accepted) {}
    std::size_t accepted() const noexcept { return accepted_; }

private:
    std::size_t accepted_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace parceldelin
