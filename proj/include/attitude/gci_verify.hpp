#pragma once

// Construction and verification of generalized collision invariants
// phi_P(A) = dot(P, Lambda0^T A) psi_bar(dot_half(Lambda0, A)), P antisymmetric.

#include <cstdint>

#include "attitude/so3_calculus.hpp"
#include "attitude/theta_line.hpp"

namespace attitude::gci {

using field::EulerGrid;
using field::ScalarField;
using so3::Mat3;
using so3::Rotation;

/// Nodewise evaluation of phi_P. Requires P antisymmetric within 1e-12.
ScalarField gci_construct(const Rotation& lambda0, const Mat3& p_antisym, const GciSolution& g,
                          const EulerGrid& grid);

/// Projects f so that P_{T_{Lambda0}}(lambda[f]) = 0 by subtracting a
/// combination of the three tangent correction fields dot(Lambda0 J_i, A) M.
ScalarField project_to_gci_constraint(const EulerGrid& grid, const Rotation& lambda0,
                                      const ScalarField& m, const ScalarField& f);

struct GciReport {
  // cosine-normalized |int L f phi dA| / (d ||grad(f/M)|| ||grad phi||), both in L2(M)
  double max_constrained = 0.0;
  double max_unconstrained = 0.0;  // witness that the constraint matters
  double max_constant_test = 0.0;  // |int L f dA| for the constant invariant
  int n_fields = 0;
  int n_directions = 0;
};

GciReport gci_verify(const EulerGrid& grid, const Rotation& lambda0, const vmf::VmfParams& p,
                     const GciSolution& g, int n_fields, int n_directions, std::uint64_t seed);

}  // namespace attitude::gci
