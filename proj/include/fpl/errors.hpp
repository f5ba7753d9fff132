#pragma once

#include <stdexcept>
#include <string>

namespace fpl {

// Base type for everything the library throws. The C API maps subclasses
// onto fpl_status codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// Numerically meaningless input (zero-norm vector, empty mean, ...).
struct DegenerateInput : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, int line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    int line = 0;
};

struct SchemaVersionError : Error {
    SchemaVersionError(const std::string& found, const std::string& expected)
        : Error("unsupported schema version '" + found + "', expected '" + expected + "'"),
          found_version(found),
          expected_version(expected) {}
    std::string found_version;
    std::string expected_version;
};

struct TrainingDiverged : Error {
    TrainingDiverged(int epoch_no)
        : Error("training diverged (loss is not finite) at epoch " + std::to_string(epoch_no)),
          epoch(epoch_no) {}
    int epoch = 0;
};

}  // namespace fpl
