#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pseopt {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Vec2i = Eigen::Vector2i;
using Vec3i = Eigen::Vector3i;

/// Bad or inconsistent configuration (files, parameters, preconditions).
/// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure in a text format; carries the 1-based line number.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, long line)
      : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// File read/write failure; carries the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, const std::string& path)
      : std::runtime_error(what + ": " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// The explicit integrator lost validity (NaN state, det(F) <= 0, CFL bust
/// detected after the fact). Carries the particle index when known (-1
/// otherwise). The CLI maps this to exit code 3.
class BlowupError : public std::runtime_error {
 public:
  explicit BlowupError(const std::string& what, long particle_index = -1)
      : std::runtime_error(particle_index >= 0
                               ? what + " (particle " + std::to_string(particle_index) + ")"
                               : what),
        particle_index_(particle_index) {}
  long particle_index() const { return particle_index_; }

 private:
  long particle_index_;
};

/// A particle left the band of positions where the transfer stencil fits.
class OutOfDomainError : public BlowupError {
 public:
  OutOfDomainError(const Vec3& position, long particle_index = -1)
      : BlowupError("position outside the valid stencil band: (" +
                        std::to_string(position.x()) + ", " + std::to_string(position.y()) +
                        ", " + std::to_string(position.z()) + ")",
                    particle_index),
        position_(position) {}
  const Vec3& position() const { return position_; }

 private:
  Vec3 position_;
};

}  // namespace pseopt
