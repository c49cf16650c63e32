#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qpar {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A target permittivity outside the feasible family.
class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(std::size_t cell, const std::string& what)
      : Error(what), cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The unconjugated pairing is too small for the eigenvalue to count as simple.
class DegenerateEigenpair : public Error {
 public:
  using Error::Error;
};

/// The first-order cone is not contained in any half-plane.
class NotFirstOrderOptimal : public Error {
 public:
  using Error::Error;
};

/// A zero of the dispersion function sits on a contour.
class BoundaryZero : public Error {
 public:
  BoundaryZero(std::complex<double> where, const std::string& what)
      : Error(what), where_(where) {}
  std::complex<double> where() const noexcept { return where_; }

 private:
  std::complex<double> where_;
};

/// No eigenvalue with real part near alpha could be located.
class NotAchievable : public Error {
 public:
  NotAchievable(double alpha, const std::string& what) : Error(what), alpha_(alpha) {}
  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
};

}  // namespace qpar
