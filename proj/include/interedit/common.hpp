#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace interedit {

/// Dense row-major matrix used for every frame-by-channel array in the project.
/// Rows are frames (or tokens), columns are feature channels.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Base class for every contract violation raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value was found; `index()` names the offending frame or step.
class NonFiniteError : public Error {
 public:
  NonFiniteError(const std::string& what, std::int64_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::int64_t index() const noexcept { return index_; }

 private:
  std::int64_t index_;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

inline void require_shape(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

}  // namespace interedit
