#pragma once

#include <stdexcept>
#include <string>

namespace dt {

// Error categories; mirrored one-to-one by the dt_status codes of the C API.
enum class Err {
    io = 1,       // unreadable/unwritable file
    format = 2,   // undecodable or malformed content
    config = 3,   // bad configuration value or key
    dataset = 4,  // corpus layout problem (unpaired track, empty dir, ...)
    numeric = 5,  // NaN loss, divergence
    invalid = 6,  // precondition violated (shape/domain)
};

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
    throw Error(code, what);
}

} // namespace dt
