#ifndef CALDERON_ERRORS_HPP
#define CALDERON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace calderon {

// Precondition violations use std::invalid_argument; failures inside the
// numerics (singular factorizations, non-coercive coefficients, injectivity
// loss) use NumericalError so callers can tell the two apart.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonCoerciveError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace calderon

#endif
