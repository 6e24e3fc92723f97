#pragma once

#include <stdexcept>
#include <string>

namespace urbanloop {

/// Input data that cannot be used (unreadable file, malformed row under the
/// fail policy, inconsistent mapping).
class DataError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A computation whose result is undefined for the given input
/// (all-zero Gini input, too few points for a regression, ...).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

} // namespace urbanloop
