#pragma once

#include "bdb/grid.hpp"
#include "bdb/lingroup.hpp"
#include "bdb/xnorm.hpp"

namespace bdb {

/// Shrinking analyticity radius nu(t) = nu0 e^{-mu t}, the damping rate delta of the base
/// norm, and the multi-index truncation of all analytic sums.
struct GevreySchedule {
    double nu0 = 0.05;
    double mu = 0.0;
    double delta = 0.0;
    int n_max = 6;
    void validate() const;
};

double norm_schedule(double t, const GevreySchedule& schedule);

struct SeminormResult {
    double value = 0.0;
    /// Contribution of the outermost shell |alpha| + |beta| = n_max, a truncation-error proxy.
    double last_shell = 0.0;
};

/// sum_{|alpha|+|beta| <= n_max} nu^{|alpha|+|beta|} / (alpha! beta!) ||d_x^alpha d_p^beta f||_X.
SeminormResult analytic_seminorm(const PhaseGridFunction& f, double nu, int n_max, const XNorm& xnorm);

/// e^{-delta t} sum_{|a+b| <= 1} ||e^{tL} d_x^a d_p^b e^{-tL} f||_X.
double base_norm_Xt(const PhaseGridFunction& f, double t, const LinearizedOperator& L, double delta);

/// sum_{|a+b| <= 1} sum_{|alpha|+|beta| <= n_max} nu^{|alpha|+|beta|} / (alpha! beta!)
///   ||e^{tL} d_x^{alpha+a} d_p^{beta+b} e^{-tL} f||_X.
SeminormResult conjugated_norm_Yt(const PhaseGridFunction& f, double t, double nu, int n_max,
                                  const LinearizedOperator& L);

/// e^{-delta t} Y_t^{nu(t)}(u): the norm in which the transformed unknown is controlled.
SeminormResult transformed_norm(const PhaseGridFunction& u, double t, const GevreySchedule& schedule,
                                const LinearizedOperator& L);

}  // namespace bdb
