#pragma once

#include <stdexcept>
#include <string>

namespace mixchain {

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Moment-based construction requested for a family whose moments coincide.
class UnsupportedFamily : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CorruptDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateProposal : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite Metropolis-Hastings log ratio or similar arithmetic breakdown.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Proposal density vanishes where the target carries mass.
class UnboundedRatio : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixchain
