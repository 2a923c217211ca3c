#pragma once

#include <stdexcept>
#include <string>

namespace remform {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

/// Violated precondition on user-supplied parameters (bad bounds, m out of range, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_input"; }
};

/// Two objects that must live on the same grid do not.
class DomainMismatch : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_mismatch"; }
};

/// A grid function is not zero on enough layers inside the boundary for the requested stencil depth.
class CollarTooThin : public Error {
 public:
  CollarTooThin(int have, int need)
      : Error("support collar too thin: have " + std::to_string(have) + " zero layers, need " +
              std::to_string(need)),
        have_(have),
        need_(need) {}
  const char* kind() const noexcept override { return "collar_too_thin"; }
  int have() const noexcept { return have_; }
  int need() const noexcept { return need_; }

 private:
  int have_;
  int need_;
};

class NotConverged : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_converged"; }
};

/// The computed ground state changes sign (disconnected or pathological mask) or φ ≤ 0 where needed.
class PositivityFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "positivity_failure"; }
};

}  // namespace remform
