#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace faithkit {

// Malformed input: bad files, mismatched label sets, violated preconditions.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A statistic is undefined on the given data (empty class, zero variance).
// Carries the name of the offending variable so callers can report it.
class DegenerateStatistic : public std::runtime_error {
public:
    DegenerateStatistic(std::string variable, const std::string& message)
        : std::runtime_error(message), variable_(std::move(variable)) {}
    const std::string& variable() const noexcept { return variable_; }

private:
    std::string variable_;
};

// Answer-token probabilities could not be recovered from a model response.
class DistributionUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// HTTP failure that survived the retry policy.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& message, int status, int attempts)
        : std::runtime_error(message), status_(status), attempts_(attempts) {}
    int status() const noexcept { return status_; }
    int attempts() const noexcept { return attempts_; }

private:
    int status_;
    int attempts_;
};

}  // namespace faithkit
