#pragma once
#include <stdexcept>
#include <string>

namespace sphj {

enum class ErrorKind { Config = 2, Numerical = 3, NonConvergence = 4, Io = 5, InvalidArgument = 6 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// raised by the strict-dt path; carries the offending step
class CflViolation : public Error {
public:
    CflViolation(long step, double cfl, const std::string& binding)
        : Error(ErrorKind::Numerical,
                "CFL violation at step " + std::to_string(step) + " (number " + std::to_string(cfl) +
                    ", binding constraint: " + binding + ")"),
          step_(step), binding_(binding) {}
    long step() const noexcept { return step_; }
    const std::string& binding() const noexcept { return binding_; }

private:
    long step_;
    std::string binding_;
};

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
    if (!ok) throw Error(kind, msg);
}

inline void require_arg(bool ok, const std::string& msg) { require(ok, ErrorKind::InvalidArgument, msg); }

}  // namespace sphj
