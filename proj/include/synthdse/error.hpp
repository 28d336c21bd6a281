#ifndef SYNTHDSE_ERROR_HPP
#define SYNTHDSE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace synthdse {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A rate whose denominator is zero (CE + EE = 0, MR = 0, C = 0 ...).
class undefined_rate_error : public error {
public:
    using error::error;
};

/// A stratum that cannot be estimated or allocated (C_i = 0, DD_i = 0 ...).
class degenerate_stratum_error : public error {
public:
    using error::error;
};

/// A region that cannot be resolved at the requested geographic level.
class mapping_error : public error {
public:
    using error::error;
};

/// Malformed or out-of-range configuration.
class config_error : public error {
public:
    using error::error;
};

/// Malformed input file; the message carries the path and line.
class parse_error : public error {
public:
    using error::error;
};

/// Input data that parsed but violates a domain invariant.
class validation_error : public error {
public:
    using error::error;
};

} // namespace synthdse

#endif
