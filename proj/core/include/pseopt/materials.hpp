#pragma once

#include "pseopt/types.hpp"

namespace pseopt {

enum class ConstitutiveModel { kFixedCorotated, kNeoHookean };

struct MaterialParams {
  double youngs_modulus = 1e4;  // E, Pa
  double poisson_ratio = 0.3;   // nu, in [0, 0.5)
  double density = 1000.0;      // rho, kg/m^3
  ConstitutiveModel model = ConstitutiveModel::kFixedCorotated;

  double mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double lambda() const {
    return youngs_modulus * poisson_ratio /
           ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }
  /// P-wave speed sqrt((lambda + 2 mu) / rho); the stiffness term of the
  /// explicit timestep ceiling.
  double wave_speed() const;

  void validate() const;
};

/// Rotation factor R of the polar decomposition F = R S, computed from the
/// SVD with a determinant sign fix so det(R) = +1. R minimizes ||F - Q||_F
/// over rotations Q. Throws ConfigError when the smallest singular value of
/// F drops below 1e-10.
Mat3 polar_rotation(const Mat3& F);

/// Kirchhoff stress tau = P(F) F^T for the configured model.
///   fixed corotated: tau = 2 mu (F - R) F^T + lambda (J - 1) J I
///   neo-hookean:     tau = mu (F F^T - I) + lambda ln(J) I
/// Throws BlowupError when det(F) <= 0.
Mat3 kirchhoff_stress(const Mat3& F, const MaterialParams& mat);

}  // namespace pseopt
