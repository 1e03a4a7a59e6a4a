#pragma once

// Weierstrass-type integrands, their closedness constraints, the K/M
// conservation currents and the immersion builder.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "weierlab/fields.hpp"
#include "weierlab/matrix_field.hpp"

namespace weierlab::weier {

using cgrid::ComplexField;
using cgrid::Grid;
using cgrid::RealField;
using cgrid::Stencil;
using fields::OmegaField;
using fields::SpinorPair;

/// One real coordinate x = integral of F dz + G dzbar.
struct OneForm {
  std::string name;
  ComplexField F, G;
};

struct OneFormSet {
  std::vector<OneForm> forms;

  std::size_t dim() const noexcept { return forms.size(); }
  const Grid& grid() const { return forms.front().F.grid(); }
  /// |F_zbar - G_z| for every form.
  std::vector<RealField> closedness(const Stencil& st = {}) const;
  double closedness_max(const Stencil& st = {}) const;
  /// max |G - conj(F)|; zero when every coordinate is real.
  double realness_defect() const;
};

/// Classical representation with analytic conj(psi1), psi2:
///   x+ = c i int(conj(psi1)^2 dz - conj(psi2)^2 dzbar)
///   x- = c i int(psi2^2 dz - psi1^2 dzbar)
///   x3 = -c int(psi2 conj(psi1) dz + psi1 conj(psi2) dzbar)
/// c = 1 gives the induced metric u^2 |dz|^2; c = 2 is the other common
/// normalisation (metric 4 u^2 |dz|^2).
OneFormSet classical_integrands(const SpinorPair& sp, double prefactor = 1.0);

/// Weights of the generalised representation.
struct GwrData {
  ComplexField rho_w;               ///< complex weight (i for the CMC case)
  ComplexField g;                   ///< mixing function
  std::optional<ComplexField> J;    ///< analytic seed when g = J/u^2

  /// rho_w = i, g = 0.
  static GwrData cmc(const Grid& grid);
  /// rho_w = i, g = J/u^2.
  static GwrData from_J(const ComplexField& J, const ComplexField& u);
  /// |J_zbar| (zero field when no J is present).
  RealField J_analyticity(const Stencil& st = {}) const;
};

struct GwrOptions {
  double prefactor = 1.0;
  /// Use rho_w itself as the x3 weight. By default the x3 weight is
  /// -i rho_w, which equals 1 in the CMC case and keeps x3 closed.
  bool literal_x3_weight = false;
};

/// F+ = rho (conj(psi1)^2 - g conj(psi2)^2),  G+ = conj(rho) (conj(psi2)^2 - conj(g) conj(psi1)^2)
/// F- = rho (psi2^2 - g psi1^2),              G- = conj(rho) (psi1^2 - conj(g) psi2^2)
/// F3 = r3 (conj(psi1) psi2 + g psi1 conj(psi2)), G3 = conj(r3) (psi1 conj(psi2) + conj(g) conj(psi1) psi2)
/// assembled into x1 = (x+ + x-)/2, x2 = (x+ - x-)/(2i), x3 with the prefactor c.
OneFormSet gwr_integrands(const SpinorPair& sp, const GwrData& gd, const GwrOptions& opt = {});

/// Left-hand sides of the three closedness restrictions on (h1, h2, rho, g),
/// with the x3 weight chosen as in gwr_integrands.
std::array<ComplexField, 3> constraint_residual_11(const SpinorPair& sp, const GwrData& gd,
                                                   const GwrOptions& opt = {},
                                                   const Stencil& st = {});

/// The reduced restrictions for h = 0, rho = i:
///   (conj(g) conj(psi1)^2)_z + (g conj(psi2)^2)_zbar
///   (conj(g) psi2^2)_z + (g psi1^2)_zbar
///   (g psi1 conj(psi2))_zbar + (conj(g) conj(psi1) psi2)_z
std::array<ComplexField, 3> constraint_residual_17(const SpinorPair& sp, const ComplexField& g,
                                                   const Stencil& st = {});

// ---------------------------------------------------------------------------
// Conservation currents

struct KM {
  MatrixField K, M;
};

/// Explicit 2x2 form in terms of omega:
///   K = m A(omega_zbar) + n1 N,  M = m A(omega_z) + n2 N,
///   m = -4 rho/(1+|w|^2)^2, n1 = 2 i sigma_zbar/(1+|w|^2), n2 = 2 i sigma_z/(1+|w|^2).
KM km_matrices(const OmegaField& w, const ComplexField& rho, const ComplexField& sigma,
               const Stencil& st = {});

/// K = rho [S, S_zbar] + 2 sigma_zbar S, M = rho [S, S_z] + 2 sigma_z S.
KM km_matrices_commutator(const OmegaField& w, const ComplexField& rho, const ComplexField& sigma,
                          const Stencil& st = {});

/// The same currents written through psi1, psi2, u and T = conj(psi1) psi2_z - conj(psi1)_z psi2.
KM km_matrices(const SpinorPair& sp, const ComplexField& rho, const ComplexField& sigma,
               const Stencil& st = {});

enum class Coupling {
  imaginary,  ///< K = rho [P_zbar, P] + i sigma_zbar P (satisfies K = -M^dagger)
  literal,    ///< K = rho [P_zbar, P] + sigma_zbar P
};

/// 3x3 projector currents for P built from (w1, w2).
KM km_matrices(const OmegaField& w1, const OmegaField& w2, const ComplexField& rho,
               const ComplexField& sigma, Coupling coupling = Coupling::imaginary,
               const Stencil& st = {});

/// ||K + M^dagger|| per node (vanishes identically for real rho, sigma).
RealField km_symmetry_residual(const KM& km);

struct KmConsistency {
  RealField K, M;  ///< Frobenius norm of omega-form minus psi-form per node
  std::array<double, 4> K_entry_max{}, M_entry_max{};  ///< row-major 2x2 entries

  /// Entries whose max discrepancy exceeds tol, labelled "K(r,c)" / "M(r,c)".
  std::vector<std::string> flagged(double tol) const;
};

/// Compares the omega form with the psi form entry by entry.
KmConsistency km_consistency_residual(const OmegaField& w, const SpinorPair& sp,
                                      const ComplexField& rho, const ComplexField& sigma,
                                      const Stencil& st = {});

/// ||K_z + M_zbar|| per node.
RealField conservation_residual(const KM& km, const Stencil& st = {});

/// Real 1-forms from the currents: F_a = tr(M B_a)/2, G_a = -tr(K B_a)/2 with
/// B_a the Pauli matrices (dim 2, three forms) or the Gell-Mann matrices
/// normalised to tr(B_a B_b) = 2 delta_ab (dim 3, eight forms). Throws
/// SingularityError if a 2x2 current has a trace above trace_tol.
OneFormSet extract_forms(const KM& km, double trace_tol = 1e-8);

/// The six scalar integrands transcribed term by term from the printed
/// formulas, parentheses closed at the end of each group, with the factor i of
/// the x1 coordinate folded into (F1, G1). Kept for comparison only: they are
/// neither closed nor real in general.
OneFormSet literal_scalar_forms(const SpinorPair& sp, const ComplexField& rho,
                                const ComplexField& sigma, const Stencil& st = {});

struct LiteralDiscrepancy {
  std::array<double, 3> closedness{};   ///< max |F_zbar - G_z| of the literal forms
  std::array<double, 3> realness{};     ///< max |G - conj(F)|
  /// Least-squares factor a with F_literal ~ a F_matrix, and the max misfit
  /// |F_literal - a F_matrix| that remains.
  std::array<cplx, 3> ratio{};
  std::array<double, 3> vs_matrix{};
};

LiteralDiscrepancy literal_discrepancy(const SpinorPair& sp, const OmegaField& w,
                                       const ComplexField& rho, const ComplexField& sigma,
                                       const Stencil& st = {});

// ---------------------------------------------------------------------------
// Immersions

struct ImmersionOptions {
  double closedness_threshold = 1e-4;
  bool force = false;  ///< integrate anyway, recording a warning
  cgrid::Quadrature quadrature = cgrid::Quadrature::corrected;
  Stencil stencil{};
};

struct Immersion {
  Grid grid;
  std::vector<RealField> coords;
  Node base;
  std::string mode;
  double closedness = 0.0;       ///< max closedness residual over the forms
  double path_deviation = 0.0;   ///< x-first vs y-first families, relative to the extent
  double imag_max = 0.0;         ///< largest imaginary part of an integrated coordinate
  std::vector<std::string> warnings;

  std::size_t dim() const noexcept { return coords.size(); }
  Eigen::VectorXd point(std::size_t k) const;
  /// The coordinates integrated along the transposed (y-first) family.
  std::vector<RealField> transposed;
};

/// Integrates every form from `base` along the x-first staircase family and
/// checks it against the y-first family. Throws PreconditionError if the
/// closedness residual exceeds the threshold and force is not set.
Immersion build_immersion(const OneFormSet& forms, const Node& base,
                          const ImmersionOptions& opt = {});

}  // namespace weierlab::weier
