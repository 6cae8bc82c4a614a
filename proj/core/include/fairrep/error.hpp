#pragma once

#include <stdexcept>
#include <string>

namespace fairrep {

// Raised for malformed inputs: schema mismatches, bad files, out-of-domain
// values, violated operation preconditions. The CLI maps these to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a configured resource cap would be exceeded (joint-distribution
// size, clause count, closure size). Carries the offending size so callers can
// report it.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, unsigned long long size)
        : std::runtime_error(what), size_(size) {}
    unsigned long long size() const { return size_; }

private:
    unsigned long long size_;
};

}  // namespace fairrep
