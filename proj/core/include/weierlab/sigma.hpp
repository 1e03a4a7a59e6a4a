#pragma once

// Sigma-model residuals (flat, curved background, Ernst-type forcing), the
// relaxation solver, the spin matrix, rank-1 projectors and the Lax pair.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "weierlab/fields.hpp"
#include "weierlab/matrix_field.hpp"

namespace weierlab::sigma {

using cgrid::ComplexField;
using cgrid::RealField;
using cgrid::Stencil;
using fields::kSingularDelta;
using fields::OmegaField;

/// omega_zzbar - 2 omega_z omega_zbar conj(omega) / (1 + |omega|^2), signed.
ComplexField sigma_residual(const OmegaField& w, const Stencil& st = {});

/// Residual of the general scalar equation with gauge data h and h2:
///   omega_zzbar - 2 w_z w_zbar conj(w)/(1+|w|^2) - (h w)_zbar - 2 (w_z - h w) h2
///     + 2 |w|^2/(1+|w|^2) [w_zbar h - w_z conj(h) + w |h|^2]
/// With h = h2 = 0 this is bitwise equal to sigma_residual.
ComplexField general_residual(const OmegaField& w, const ComplexField& h, const ComplexField& h2,
                              const Stencil& st = {});

/// h2 = conj(h1) = -(rho_zbar w_z + rho_z w_zbar) / (4 Re(rho) w_z).
ComplexField curved_h2(const OmegaField& w, const ComplexField& rho, const Stencil& st = {},
                       double delta = kSingularDelta);

/// sigma_residual - 2 h2 omega_z with h2 from curved_h2.
ComplexField curved_residual(const OmegaField& w, const ComplexField& rho, const Stencil& st = {},
                             double delta = kSingularDelta);

/// p = rho + i sigma with rho, sigma real and harmonic.
class HarmonicPotential {
 public:
  HarmonicPotential(ComplexField rho, ComplexField sigma);
  static HarmonicPotential from_p(const ComplexField& p);

  const ComplexField& rho() const noexcept { return rho_; }
  const ComplexField& sigma() const noexcept { return sigma_; }
  ComplexField p() const;
  const cgrid::Grid& grid() const noexcept { return rho_.grid(); }

  /// max(|4 rho_zzbar|, |4 sigma_zzbar|) per node.
  RealField harmonic_residual(const Stencil& st = {}) const;

 private:
  ComplexField rho_, sigma_;
};

/// f = -1/2 (p_zbar w_z + p_z w_zbar) / Re(p). Throws SingularityError where
/// |Re p| <= delta.
ComplexField ernst_f(const HarmonicPotential& p, const OmegaField& w, const Stencil& st = {},
                     double delta = kSingularDelta);

/// sigma_residual - f.
ComplexField ernst_residual(const OmegaField& w, const HarmonicPotential& p,
                            const Stencil& st = {}, double delta = kSingularDelta);

// ---------------------------------------------------------------------------
// Relaxation solver

enum class Mode { o3, curved, ernst };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct RelaxParams {
  std::size_t max_iters = 10000;
  double theta = 0.7;          ///< pointwise damping in (0, 1]
  double tol_target = 1e-8;    ///< max discrete residual for convergence
  std::size_t divergence_window = 50;
};

struct RelaxResult {
  OmegaField omega;
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;        ///< discrete residual of the returned iterate
  std::vector<double> history;  ///< discrete residual after every sweep
};

/// Damped nonlinear Gauss-Seidel on the 5-point discretisation of
/// omega_zzbar = RHS(omega) with Dirichlet data taken from the boundary nodes
/// of `boundary`. The right-hand side is evaluated with central differences of
/// the current iterate. Interior values of `init` seed the iteration.
///
/// `potential` is required for curved (rho only) and ernst modes. If the
/// residual grows for `divergence_window` consecutive sweeps a
/// ConvergenceError is thrown; running out of iterations returns the best
/// iterate with converged = false.
RelaxResult relax_solve(Mode mode, const ComplexField& boundary, const ComplexField& init,
                        const RelaxParams& params = {},
                        const std::optional<HarmonicPotential>& potential = std::nullopt);

/// Max over interior nodes of the solver's own discrete residual.
double relax_residual(Mode mode, const ComplexField& omega,
                      const std::optional<HarmonicPotential>& potential = std::nullopt);

// ---------------------------------------------------------------------------
// Spin matrix and projectors

/// S = i/(1+|w|^2) [[1-|w|^2, -2 conj(w)], [-2 w, |w|^2-1]].
Mat spin_matrix(cplx w);
MatrixField spin_matrix(const OmegaField& w);

/// P = 1/(1+|w|^2) [[1, conj(w)], [w, |w|^2]].
Mat projector2(cplx w);
MatrixField projector2(const OmegaField& w);

/// 3x3 rank-1 projector onto (1, w1, w2).
Mat projector3(cplx w1, cplx w2);
MatrixField projector3(const OmegaField& w1, const OmegaField& w2);

// ---------------------------------------------------------------------------
// Lax pair

/// Spectral data: gamma = rho + i beta analytic, and
/// varrho = i beta - lambda + sqrt((lambda - gamma)(lambda + gamma)).
struct LaxData {
  cplx lambda;
  ComplexField rho, beta, gamma, varrho;
  /// Nodes where the principal root jumps sheet relative to the node on the
  /// right or above it.
  std::vector<Node> branch_flags;

  /// beta is the harmonic conjugate of rho (PreconditionError if rho is not
  /// harmonic).
  static LaxData make(const ComplexField& rho, cplx lambda, const Stencil& st = {});
};

enum class LaxDerivative { z, zbar };
enum class LaxProduct {
  literal,   ///< S_d S
  reversed,  ///< S S_d
};

/// U = rho/(varrho+rho) * prod(S_z), V = -rho/(varrho-rho) * prod(S_d).
struct LaxVariant {
  LaxDerivative derivative = LaxDerivative::zbar;
  LaxProduct product = LaxProduct::reversed;
  std::string name() const;
  friend bool operator==(const LaxVariant&, const LaxVariant&) = default;
};

std::vector<LaxVariant> lax_variants();

/// Throws SpectralParameterError where |varrho +- rho| <= delta.
std::pair<MatrixField, MatrixField> lax_matrices(const OmegaField& w, const LaxData& lx,
                                                 LaxVariant variant = {}, const Stencil& st = {},
                                                 double delta = kSingularDelta);

/// Frobenius norm of U_zbar - V_z + [U, V] per node.
RealField lax_residual(const MatrixField& U, const MatrixField& V, const Stencil& st = {});

struct LaxSelection {
  LaxVariant selected;
  std::vector<std::pair<LaxVariant, double>> residuals;  ///< interior max per variant
};

/// Evaluates every variant on omega = z over [-2,2]^2 with rho = 1, lambda = 2
/// and picks the one with the smallest compatibility residual.
LaxSelection select_lax_variant(std::size_t n = 64, const Stencil& st = {});

}  // namespace weierlab::sigma
