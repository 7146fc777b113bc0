#pragma once
#include <stdexcept>
#include <string>

namespace copreg {

// Every error thrown by the library derives from copreg::error. The kind()
// string is stable and is what the CLI prints in its structured error output.
class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class invalid_parameter : public error
{
public:
    using error::error;
    const char* kind() const noexcept override { return "invalid_parameter"; }
};

class domain_error : public error
{
public:
    using error::error;
    const char* kind() const noexcept override { return "domain_error"; }
};

class linalg_error : public error
{
public:
    using error::error;
    const char* kind() const noexcept override { return "linalg_error"; }
};

// Raised for zero-variance columns; carries the offending column index.
class degenerate_feature : public error
{
public:
    degenerate_feature(std::string msg, std::ptrdiff_t column)
        : error(std::move(msg)), column_(column) {}
    const char* kind() const noexcept override { return "degenerate_feature"; }
    std::ptrdiff_t column() const noexcept { return column_; }
private:
    std::ptrdiff_t column_;
};

class data_error : public error
{
public:
    using error::error;
    const char* kind() const noexcept override { return "data_error"; }
};

class diverged : public error
{
public:
    diverged(std::string msg, std::string trace)
        : error(std::move(msg)), trace_(std::move(trace)) {}
    const char* kind() const noexcept override { return "diverged"; }
    const std::string& trace() const noexcept { return trace_; }
private:
    std::string trace_;
};

} // namespace copreg
