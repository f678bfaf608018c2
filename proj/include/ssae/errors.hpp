#pragma once

#include <stdexcept>
#include <string>

namespace ssae {

// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an API precondition: shapes, lengths, ranges.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite values during training or evaluation (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractError(what);
}

}  // namespace ssae
