#pragma once

#include <stdexcept>
#include <string>

namespace boed {

// Invalid argument values or shapes (parameter ranges, arities, dimensions).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Linear algebra or floating point failure (non-PD matrices, overflow).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Critic training produced a non-finite objective or gradient.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent campaign configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing or unreadable artifact on disk.
class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace boed
