#pragma once

#include <stdexcept>
#include <string>

namespace manitwin {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (OBJ, manifest, message body).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A well-formed value violates a type invariant. `field()` names the offender.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class DegenerateMeshError : public Error {
public:
    using Error::Error;
};

/// Remote annotation service failed to answer with a well-shaped response.
class TransportError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    InfeasibleError(std::string asset_id, const std::string& what)
        : Error(asset_id + ": " + what), asset_id_(std::move(asset_id)) {}
    const std::string& asset_id() const noexcept { return asset_id_; }

private:
    std::string asset_id_;
};

class IntegrityError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

}  // namespace manitwin
