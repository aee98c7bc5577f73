#pragma once

#include <stdexcept>
#include <string>

namespace rdt {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : Error {
    using Error::Error;
};

// stiffness
struct ZeroFraction : Error {
    using Error::Error;
};
struct NonPositiveInput : Error {
    using Error::Error;
};
struct ZeroStiffnessComponent : Error {
    using Error::Error;
};

// plant
struct NonPositiveDt : Error {
    using Error::Error;
};
struct NegativePressureDrop : Error {
    using Error::Error;
};

// controller
struct ZeroPressureDrop : Error {
    using Error::Error;
};
struct IllegalTransition : Error {
    using Error::Error;
};

// sysid
struct SingularJacobian : Error {
    using Error::Error;
};
struct InsufficientCycle : Error {
    using Error::Error;
};

// session
struct NotOperating : Error {
    using Error::Error;
};

}  // namespace rdt
