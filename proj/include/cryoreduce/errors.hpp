#ifndef CRYOREDUCE_ERRORS_HPP
#define CRYOREDUCE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cryoreduce {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input data (bad header, truncated payload, non-finite pixels).
class FormatError : public Error {
public:
    using Error::Error;
};

// A precondition on caller-supplied values failed.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Requested computation does not fit the configured memory budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

// A diagonal entry of the covariance matrix is (numerically) zero, so the
// correlation normalization is undefined for that index.
class ZeroVarianceError : public Error {
public:
    ZeroVarianceError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

// Eigensolver did not converge within the sweep cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double off_diagonal_norm)
        : Error(what), off_diagonal_norm_(off_diagonal_norm) {}
    double off_diagonal_norm() const { return off_diagonal_norm_; }

private:
    double off_diagonal_norm_;
};

// A map task failed; carries the task (chunk) index and the cause message.
class MapReduceError : public Error {
public:
    MapReduceError(const std::string& what, std::size_t task_id)
        : Error(what), task_id_(task_id) {}
    std::size_t task_id() const { return task_id_; }

private:
    std::size_t task_id_;
};

// A pipeline stage failed; carries the stage name for exit diagnostics.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace cryoreduce

#endif
