#pragma once

#include <stdexcept>
#include <string>

namespace dses {

/// Raised when an operation is called with arguments outside its contract
/// (empty clouds, non-finite points, non-positive bin sizes, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested grid exceeds the configured candidate cap.
class SearchTooLargeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No translation candidate fell inside the search bounds.
class NoCandidateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, parsed or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dses
