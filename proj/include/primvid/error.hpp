#pragma once

#include <stdexcept>
#include <string>

namespace primvid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A SceneSpec / ScenarioScript / config that violates its invariants.
class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Generation produced an ambiguous or mismatched sample; the caller regenerates.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Bounded retries exhausted.
class RetryExhausted : public Error {
public:
    using Error::Error;
};

/// Operation not applicable to the state it follows.
class InapplicableOperation : public Error {
public:
    InapplicableOperation(int op_index, const std::string& what)
        : Error("operation " + std::to_string(op_index) + ": " + what), op_index_(op_index) {}
    int op_index() const noexcept { return op_index_; }

private:
    int op_index_;
};

class Unclassifiable : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EncoderError : public Error {
public:
    using Error::Error;
};

class EncoderMissing : public EncoderError {
public:
    using EncoderError::EncoderError;
};

class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace primvid
