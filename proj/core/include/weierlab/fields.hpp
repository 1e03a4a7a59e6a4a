#pragma once

// Spinor pair (psi1, psi2) with gauge functions, the quotient field omega,
// the inverse formulas omega -> psi, the density u, the quantity T and the
// residuals of the generalized Dirac-type system.

#include <optional>
#include <string>
#include <vector>

#include "weierlab/cgrid.hpp"

namespace weierlab::fields {

using cgrid::ComplexField;
using cgrid::RealField;
using cgrid::Stencil;
using cgrid::Summary;

/// Threshold separating genuine zeros (poles of omega, branch points) from
/// rounding noise.
inline constexpr double kSingularDelta = 1e-12;

/// psi1, psi2 with gauge functions h1, h2 of the generalized system
///   psi1_z = u psi2 + h1 psi1,  psi2_zbar = -u psi1 + h2 psi2.
struct SpinorPair {
  ComplexField psi1, psi2, h1, h2;

  SpinorPair(ComplexField p1, ComplexField p2);
  SpinorPair(ComplexField p1, ComplexField p2, ComplexField g1, ComplexField g2);

  const cgrid::Grid& grid() const noexcept { return psi1.grid(); }
  /// h = h1 - conj(h2), recomputed on every call.
  ComplexField h() const { return h1 - h2.conj(); }
};

/// omega with its cached denominator 1 + |omega|^2.
class OmegaField {
 public:
  explicit OmegaField(ComplexField omega);

  const ComplexField& omega() const noexcept { return omega_; }
  const ComplexField& denominator() const noexcept { return denom_; }
  const cgrid::Grid& grid() const noexcept { return omega_.grid(); }

 private:
  ComplexField omega_;
  ComplexField denom_;
};

enum class BranchRule {
  continuity,  ///< principal root at the base node, continued along a spanning tree
};

struct SignChoice {
  int epsilon = 1;
  BranchRule rule = BranchRule::continuity;
};

/// u = |psi1|^2 + |psi2|^2 (real-valued).
ComplexField u_of(const SpinorPair& sp);

/// omega = psi1 / conj(psi2). Throws SingularityError where |psi2| <= delta.
OmegaField omega_of(const SpinorPair& sp, double delta = kSingularDelta);

/// Square root of `a` made continuous over the grid: principal branch at the
/// base node, continued along the base row and then along every column.
/// Throws BranchError at zeros of `a` or where the continued root jumps
/// between neighbouring nodes (a branch point inside a cell).
ComplexField continued_sqrt(const ComplexField& a, double delta = kSingularDelta);

/// Inverse formulas
///   psi1 = eps omega sqrt(conj(omega_z - h omega)) / (1 + |omega|^2)
///   psi2 = eps sqrt(omega_z - h omega) / (1 + |omega|^2)
/// The returned pair carries h1 = h, h2 = 0 (the gauge is fixed only up to h).
SpinorPair psi_of_omega(const OmegaField& w, const ComplexField& h, SignChoice sign = {},
                        const Stencil& st = {}, double delta = kSingularDelta);

/// Residuals of the four scalar equations of the generalized system.
struct GksResidual {
  RealField first_a;   ///< psi1_z - u psi2 - h1 psi1
  RealField second_a;  ///< psi2_zbar + u psi1 - h2 psi2
  RealField first_b;   ///< conj(psi1)_zbar - u conj(psi2) - conj(h1) conj(psi1)
  RealField second_b;  ///< conj(psi2)_z + u conj(psi1) - conj(h2) conj(psi2)

  double max() const;
  std::vector<std::pair<std::string, Summary>> summaries(std::size_t band = 0) const;
};

GksResidual gks_residual(const SpinorPair& sp, const ComplexField& u, const Stencil& st = {});

struct ErnstGauge {
  SpinorPair spinors;  ///< same psi, h2 = f/(2 omega_z), h1 = conj(f)/(2 conj(omega_z))
  ComplexField u;      ///< |omega_z| / (1 + |omega|^2)
  RealField h_identity;  ///< |h2 - conj(h1)|, zero when the gauge is consistent
};

/// Gauge of the Ernst-type reduction. Throws SingularityError where
/// |omega_z| <= delta.
ErnstGauge ernst_gauge(const SpinorPair& sp, const OmegaField& w, const ComplexField& f,
                       const Stencil& st = {}, double delta = kSingularDelta);

/// T = 2 omega_z conj(omega_zbar) / (1 + |omega|^2)^2.
ComplexField T_of(const OmegaField& w, const Stencil& st = {});
/// conj(psi1) psi2_z - conj(psi1)_z psi2. For psi = psi_of_omega(w, 0) this
/// equals -T_of(w)/2: the bilinear and the omega form differ by a factor -2.
ComplexField T_bilinear(const SpinorPair& sp, const Stencil& st = {});
/// |T_zbar - (f/omega_z) T + u^2 conj(f) / conj(omega_z)| per node.
RealField T_evolution_residual(const ComplexField& T, const OmegaField& w, const ComplexField& f,
                               const ComplexField& u, const Stencil& st = {},
                               double delta = kSingularDelta);

/// Named scenario data. Any member may be absent depending on the preset.
struct Preset {
  std::string name;
  std::string description;
  std::optional<OmegaField> omega;
  std::optional<SpinorPair> spinors;
  std::optional<ComplexField> rho;    ///< real part of the harmonic potential
  std::optional<ComplexField> sigma;  ///< imaginary part of the harmonic potential
};

std::vector<std::string> preset_names();

/// Default domain for a preset (some potentials are singular on the unit square).
cgrid::Grid preset_grid(const std::string& name, std::size_t n);

/// Throws ConfigError for unknown names.
Preset make_preset(const std::string& name, const cgrid::Grid& g, const Stencil& st = {});

}  // namespace weierlab::fields
