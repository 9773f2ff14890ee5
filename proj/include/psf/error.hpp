#ifndef PSF_ERROR_HPP
#define PSF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace psf {

// Exit codes used by the CLI: 1 usage, 2 data, 3 numeric.
class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

class UsageError : public Error {
public:
    explicit UsageError(std::string msg) : Error(std::move(msg), 1) {}
};

class DataError : public Error {
public:
    explicit DataError(std::string msg) : Error(std::move(msg), 2) {}
};

// Raised when a computation produces non-finite values or a degenerate state.
class NumericError : public Error {
public:
    explicit NumericError(std::string msg) : Error(std::move(msg), 3) {}
};

// Image I/O failures, kept distinct so callers can tell them apart.
class FileMissingError : public DataError {
public:
    explicit FileMissingError(std::string msg) : DataError(std::move(msg)) {}
};

class UnsupportedFormatError : public DataError {
public:
    explicit UnsupportedFormatError(std::string msg) : DataError(std::move(msg)) {}
};

class CorruptStreamError : public DataError {
public:
    explicit CorruptStreamError(std::string msg) : DataError(std::move(msg)) {}
};

} // namespace psf

#endif
