#include "pseopt/materials.hpp"

#include <cmath>

namespace pseopt {

double MaterialParams::wave_speed() const {
  return std::sqrt((lambda() + 2.0 * mu()) / density);
}

void MaterialParams::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigError("youngs_modulus must be > 0");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    throw ConfigError("poisson_ratio must be in [0, 0.5)");
  if (!(density > 0.0)) throw ConfigError("density must be > 0");
}

Mat3 polar_rotation(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < 1e-10)
    throw ConfigError("polar_rotation: matrix is numerically singular");
  Mat3 U = svd.matrixU();
  Mat3 V = svd.matrixV();
  // R = U V^T; flip the weakest direction when the product is a reflection.
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

Mat3 kirchhoff_stress(const Mat3& F, const MaterialParams& mat) {
  const double J = F.determinant();
  if (!(J > 0.0)) throw BlowupError("kirchhoff_stress: det(F) <= 0");
  const double mu = mat.mu();
  const double lambda = mat.lambda();
  switch (mat.model) {
    case ConstitutiveModel::kFixedCorotated: {
      const Mat3 R = polar_rotation(F);
      return 2.0 * mu * (F - R) * F.transpose() +
             lambda * (J - 1.0) * J * Mat3::Identity();
    }
    case ConstitutiveModel::kNeoHookean:
      return mu * (F * F.transpose() - Mat3::Identity()) +
             lambda * std::log(J) * Mat3::Identity();
  }
  throw ConfigError("unknown constitutive model");
}

}  // namespace pseopt
