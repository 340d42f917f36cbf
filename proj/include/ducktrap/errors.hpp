// Error types thrown by the ducktrap library.
#pragma once

#include <stdexcept>
#include <string>

namespace ducktrap {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

struct NoRootInWindow : std::runtime_error {
    explicit NoRootInWindow(const std::string& what) : std::runtime_error(what) {}
};

struct RootLost : std::runtime_error {
    explicit RootLost(const std::string& what) : std::runtime_error(what) {}
};

struct BracketFailure : std::runtime_error {
    explicit BracketFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NoCycle : std::runtime_error {
    explicit NoCycle(const std::string& what) : std::runtime_error(what) {}
};

struct SectionNotReached : std::runtime_error {
    explicit SectionNotReached(const std::string& what) : std::runtime_error(what) {}
};

struct StepSizeUnderflow : std::runtime_error {
    explicit StepSizeUnderflow(const std::string& what) : std::runtime_error(what) {}
};

struct UnboundedInteriorTerm : std::runtime_error {
    explicit UnboundedInteriorTerm(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ducktrap
