#pragma once

#include <vector>

#include "lcf/errors.hpp"
#include "lcf/kinematics.hpp"

namespace lcf {

/// Gauss-Legendre nodes/weights on [-1, 1] (Newton on P_n; cached per n).
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

/// Product rule on S^2: Gauss-Legendre in cos(theta) x equispaced phi.
/// phi nodes carry an irrational offset so no accidental lattice symmetry can
/// fake a cancellation; counts are kept even so the set is still symmetric
/// under n -> -n, which the negative-sheet conjugation identity needs.
struct SphereRule {
  struct Node {
    double nx, ny, nz;
    double weight;  // sums to 4*pi
  };
  std::vector<Node> nodes;
};
SphereRule sphere_rule(int theta_nodes, int phi_nodes);

enum class Sheet { Positive, Negative };

/// Node budget and controls for the on-shell light-cone integrals
///   integral d3k / ((2pi)^3 2|k|) with k0 = +-|k|.
/// Radial rule: Gauss-Legendre in t after the compactification w = t/(1-t),
/// t in [0, cutoff/(1+cutoff)].
struct LightConeQuadrature {
  int radial_nodes = 48;
  int theta_nodes = 24;
  int phi_nodes = 48;
  double radial_cutoff = 12.0;
  double refinement_tolerance = 1e-8;
  Sheet sheet = Sheet::Positive;
  int max_rounds = 6;

  void validate() const {
    if (radial_nodes < 4 || theta_nodes < 4 || phi_nodes < 4)
      throw ConfigError("quadrature node counts must be >= 4");
    if (!(radial_cutoff > 0.0)) throw ConfigError("radial_cutoff must be > 0");
    if (!(refinement_tolerance > 0.0 && refinement_tolerance < 1.0))
      throw ConfigError("refinement_tolerance must lie in (0,1)");
    if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
  }

  LightConeQuadrature with_sheet(Sheet s) const {
    LightConeQuadrature q = *this;
    q.sheet = s;
    return q;
  }

  /// Next refinement level (node counts x ~1.5, phi kept even).
  LightConeQuadrature refined() const;
};

/// Radial nodes (omega, weight) for one refinement level; weight includes the
/// compactification Jacobian but not the omega measure factor.
struct RadialRule {
  std::vector<double> omega;
  std::vector<double> weight;
};
RadialRule radial_rule(int n, double cutoff);

}  // namespace lcf
