#pragma once

#include <stdexcept>
#include <string>

namespace vpon {

enum class Errc {
    Truncated,          // fewer bytes than the declared layout requires
    LengthMismatch,     // declared record count disagrees with buffer length
    BadFlags,           // reserved flag bits set
    InvariantViolation, // a domain invariant does not hold
    UnknownAllocId,     // Alloc-ID not registered in the scenario
    CapacityExhausted,  // mandatory grants alone exceed frame capacity
    StoreFull,          // register store cannot take a new entry
    ConfigError,        // scenario/config validation failure
};

inline const char* errc_name(Errc c) noexcept {
    switch (c) {
    case Errc::Truncated: return "Truncated";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BadFlags: return "BadFlags";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::UnknownAllocId: return "UnknownAllocId";
    case Errc::CapacityExhausted: return "CapacityExhausted";
    case Errc::StoreFull: return "StoreFull";
    case Errc::ConfigError: return "ConfigError";
    }
    return "?";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), m_code(code) {}

    Errc code() const noexcept { return m_code; }

private:
    Errc m_code;
};

} // namespace vpon
