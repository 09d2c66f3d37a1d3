#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lcf/quadrature.hpp"
#include "lcf/test_functions.hpp"

namespace lcf {

struct PairingResult {
  cplx value{0.0, 0.0};
  double error_estimate = 0.0;  // last refinement delta
  long nodes_used = 0;
};

struct GramMatrix {
  Eigen::MatrixXcd entries;
  Sheet sector = Sheet::Positive;
  std::vector<std::string> bank;
  double hermiticity_defect = 0.0;  // pre-averaging, relative to max entry
};

/// (g,f) on the selected sheet:
///   -hbar * integral conj(v_g).eta.v_f  d3k/((2pi)^3 2w),  k0 = +-w,
/// v = eta-raised k^l F~_{l nu}. Refines node counts until the change is below
/// quad.refinement_tolerance relative to max(|value|, integrand mass,
/// absolute_anchor); throws ConvergenceError past max_rounds and CutoffError
/// when the cutoff does not cover the input bandwidths.
PairingResult pair(const TestFunction& g, const TestFunction& f, const LightConeQuadrature& quad,
                   const MetricConstants& metric = {}, double absolute_anchor = 0.0);

/// Independent route for the negative pairing: (g,f)_- = (f*, g*), evaluated
/// as pair(conjugate(f), conjugate(g)) on the positive sheet.
PairingResult pair_negative_via_conjugates(const TestFunction& g, const TestFunction& f,
                                           const LightConeQuadrature& quad,
                                           const MetricConstants& metric = {});

/// C(f,g) = (g*,f) - (f*,g), evaluated as a single-pass difference integrand
/// so the refinement targets the (often tiny) difference itself. Purely
/// imaginary for real f,g. absolute_anchor, when positive, is used as the
/// convergence scale instead of |C| (needed near the spacelike plateau).
PairingResult commutator_functional(const TestFunction& f, const TestFunction& g,
                                    const LightConeQuadrature& quad,
                                    const MetricConstants& metric = {},
                                    double absolute_anchor = 0.0);

/// Pairwise pairings over a bank, all entries in one shell-cached sweep with
/// collective refinement. Entries are Hermitized by averaging with the
/// conjugate transpose; the pre-averaging defect is recorded and must not
/// exceed 1e-8 of the largest entry.
GramMatrix gram_matrix(const std::vector<TestFunction>& bank, Sheet sector,
                       const LightConeQuadrature& quad, const MetricConstants& metric = {},
                       std::vector<std::string> ids = {});

std::string gram_to_csv(const GramMatrix& G);
std::string gram_to_json_text(const GramMatrix& G);

}  // namespace lcf
