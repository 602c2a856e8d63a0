#ifndef PARATAA_ERRORS_HPP
#define PARATAA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace parataa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScheduleError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// Solver state is inconsistent (e.g. a score value is read before it was computed).
class StateError : public Error {
public:
    using Error::Error;
};

/// The Anderson normal equations are singular and no regularization was requested.
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class TrajectoryFileError : public Error {
public:
    using Error::Error;
};

} // namespace parataa

#endif
