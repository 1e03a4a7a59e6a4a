#pragma once

// First fundamental form, Gaussian and mean curvature of a built immersion,
// and an exploratory fit of (K, H) relations.

#include <string>
#include <utility>
#include <vector>

#include "weierlab/weier.hpp"

namespace weierlab::geom {

using cgrid::ComplexField;
using cgrid::RealField;
using cgrid::Stencil;
using weier::Immersion;

struct MetricField {
  RealField E, F, G;
  RealField factor;  ///< (E + G)/2, the conformal factor when F = 0 and E = G
  RealField defect;  ///< max(|E - G|, |F|) / max(E, G)
  std::vector<Node> degenerate;  ///< nodes with E <= 0, G <= 0 or EG - F^2 <= 0
};

/// E = r_x.r_x, F = r_x.r_y, G = r_y.r_y for any number of coordinates.
MetricField first_form(const Immersion& im, const Stencil& st = {});

/// K = -(4/u^2) [log u]_zzbar. Throws SingularityError where u <= 0.
RealField gauss_from_u(const ComplexField& u, const Stencil& st = {});

struct CurvatureField {
  RealField K, H;
  std::string source;
  std::size_t band = 0;  ///< boundary nodes excluded from statistics
  std::vector<Node> degenerate;
};

/// Second fundamental form by finite differences of the parametrisation,
/// normal n = r_x x r_y / |r_x x r_y|. Needs a 3-dimensional immersion.
/// Degenerate nodes get K = H = 0 and are listed.
CurvatureField curvatures_from_mesh(const Immersion& im, const Stencil& st = {});

struct RelationFit {
  std::string family;           ///< "linear" or "quadratic"
  std::vector<std::string> terms;
  std::vector<double> coeffs;   ///< unit-norm null vector of the design matrix
  double rms = 0.0;             ///< rms of the relation over the points
  double condition = 0.0;       ///< smallest / largest singular value
};

struct WeingartenReport {
  std::vector<std::pair<double, double>> scatter;  ///< (K, H) at interior nodes
  double K_mean = 0.0, H_mean = 0.0;
  double K_spread = 0.0, H_spread = 0.0;           ///< (max - min) / |mean|
  RelationFit linear, quadratic;
};

/// Least-squares fits of a K + b H + c = 0 and of the general conic in
/// (K, H). Exploratory only.
WeingartenReport weingarten_probe(const CurvatureField& c);

}  // namespace weierlab::geom
