#pragma once

#include <stdexcept>
#include <string>

namespace porogas {

/// Raised for non-physical or inconsistent input parameters.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the domain of a thermodynamic or constitutive law.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Mesh incidence query that does not make sense (e.g. cell not on edge).
class TopologyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Linear solver failure: singular pivot, non-convergence, bad dimensions.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A time step could not be completed (Picard non-convergence, bound violation).
class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace porogas
