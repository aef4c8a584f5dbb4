#ifndef LSM_ERRORS_HPP
#define LSM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lsm {

// Invalid input data: malformed files, support violations, shape mismatches.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Value outside an edge family's support or outside the mean image.
class DomainError : public DataError {
public:
    using DataError::DataError;
};

// The numerics cannot proceed: singular information, infeasible initialization.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lsm

#endif // LSM_ERRORS_HPP
