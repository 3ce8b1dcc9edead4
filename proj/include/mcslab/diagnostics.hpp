#pragma once

#include <string>
#include <vector>

#include "mcslab/elliptic.hpp"

namespace mcs {

double mass_total(const McsSystem& sys, const McsState& st);

// sup norm of e^u - N/lambda on the grid
double cs_deviation(const McsSystem& sys, const McsState& st);

// quadrature of lambda^2 e^u (1 - N/lambda) over the metric ball around
// `center` (lattice coordinates); radius below half the injectivity radius
double local_mass(const McsSystem& sys, const McsState& st, Vec2 center, double radius);

struct ClassifyThresholds {
  double topo_eps = 0.05;   // verdict I: far sup |u| below this
  double peak_hi = 5.0;     // verdict III: sup(u + 2 ln lambda) beyond this
  double off_lo = -5.0;     // verdict III: off-peak sup(u + 2 ln lambda) below this
  double far_dist = 0.15;   // compact set = points farther than this from
                            // every vortex and detected peak
  double min_peak_mass = 8.0 * M_PI - 0.5;  // alpha_j floor for verdict III
};

enum class Verdict { I, II, III, Undetermined };
std::string to_string(Verdict v);

struct AlternativeReport {
  Verdict verdict = Verdict::Undetermined;
  double far_sup_abs_u = 0.0;     // last state, sup |u| on the compact set
  double peak_sup = 0.0;          // last state, sup(u + 2 ln lambda)
  double offpeak_sup = 0.0;       // last state, sup over the compact set
  std::vector<Vec2> peaks;        // detected blow-up candidates (lattice coords)
  std::vector<double> local_masses;  // alpha_j at the detected peaks
};

// decision rule over an ordered family of states with increasing lambda and
// decreasing lambda/mu; Undetermined is a valid outcome
AlternativeReport classify(const McsSystem& sys, const std::vector<McsState>& states,
                           const ClassifyThresholds& thr = {});

// absolute defect of the ball Pohozaev identity (the x.grad pairing of both
// equations), normalized by the largest single term
double pohozaev_residual(const McsSystem& sys, const McsState& st, Vec2 center, double radius);

struct GaugeFields {
  Field phi_sq;  // |phi|^2 = e^u
  Field n;       // neutral scalar = N/2
  Field F12;     // q^2 |phi|^2 - mu n
  Field A0;      // q^2/mu - n
  double flux = 0.0;
  double q_sq = 0.0;  // q^2 = lambda mu / 2
};

GaugeFields reconstruct_gauge(const McsSystem& sys, const McsState& st);

}  // namespace mcs
