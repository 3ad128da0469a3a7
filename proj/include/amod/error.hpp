#pragma once

#include <stdexcept>
#include <string>

namespace amod {

/// Malformed or inconsistent input file. The message names the file and,
/// when known, the offending line.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (unknown id, illegal state
/// transition, mixing incomparable artifacts).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the event loop when an invariant breaks mid-run. Carries the
/// serialized event that was being processed so the run can be replayed.
class EngineError : public std::runtime_error {
public:
    EngineError(const std::string& what, std::string event)
        : std::runtime_error(what + " [event: " + event + "]"), event_(std::move(event)) {}

    const std::string& event() const noexcept { return event_; }

private:
    std::string event_;
};

/// Two runs that must share demand/fleet/traffic inputs do not.
class ComparisonMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace amod
