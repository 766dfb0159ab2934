#pragma once

#include "nilops/gmod.hpp"

namespace nilops {

/* ---------------- doubling functor ---------------- */

// (Phi M)^{2d} = M^d with Sq^{2i} acting as Sq^i did; odd degrees vanish.
GModPtr phi(const GradedModule& m);
GModPtr phi(const GModPtr& m);
// Phi f for f: M -> N of shift t; the result has shift 2t.
ModuleMap phi_map(const ModuleMap& f, const GModPtr& phi_src, const GModPtr& phi_dst);
ModuleMap phi_map(const ModuleMap& f);

// lambda_M: Phi M -> M, (Phi x) -> Sq^{|x|} x.  Natural in M.
ModuleMap lambda_map(const GModPtr& m);

/* ---------------- quadratic functors ---------------- */

// The involution x tensor y -> y tensor x on M tensor M.
ModuleMap tau_map(const GModPtr& t2, const GModPtr& m);

struct QuadraticParts {
    GModPtr t2;            // M tensor M
    ModuleMap tau;         // involution on t2
    SubInclusion gamma2;   // ker(1 + tau)
    SubInclusion lambda2;  // im(1 + tau), a submodule of gamma2's ambient t2
    QuotientProjection s2; // t2 / im(1 + tau)

    // natural maps between the small pieces
    ModuleMap lambda2_in_gamma2;   // Lambda^2 -> Gamma^2 over t2
    ModuleMap phi_to_s2;           // Phi M -> S^2, Phi x -> [x tensor x]
    ModuleMap s2_to_lambda2;       // [t] -> (1 + tau) t, onto Lambda^2
    ModuleMap gamma2_to_phi;       // cokernel of Lambda^2 -> Gamma^2, identified with Phi M
    GModPtr phi_m;
};
QuadraticParts quadratic_parts(const GModPtr& m);

/* ---------------- loop functors ---------------- */

/* The exact sequence 0 -> Sigma Omega_1 M -> Phi M -> M -> Sigma Omega M -> 0
 * induced by lambda_M, for unstable M.  omega and omega1 are stored
 * desuspended with their presentation tags. */
struct LoopsData {
    GModPtr phi_m;
    ModuleMap lambda;            // Phi M -> M
    QuotientProjection coker;    // M -> coker(lambda) = Sigma Omega M
    SubInclusion ker;            // Sigma Omega_1 M = ker(lambda) -> Phi M
    GModPtr omega;               // Omega M
    GModPtr omega1;              // Omega_1 M
};
LoopsData loops(const GModPtr& m);

GModPtr omega(const GModPtr& m);
GModPtr omega1(const GModPtr& m);
GModPtr omega_iter(const GModPtr& m, int n);
// Omega_1^n realized as the split sum Omega(Omega_1^{n-1}) + Omega_1(Omega^{n-1}).
GModPtr omega1_iter_split(const GModPtr& m, int n);

// Omega f: Omega M -> Omega N induced on lambda cokernels.
ModuleMap omega_map(const ModuleMap& f);

/* ---------------- destabilization ---------------- */

/* For M presented as Sigma^{-t} N with N unstable: Omega^t N together with the
 * unit M -> Omega^t N given by desuspending the iterated coker(lambda)
 * projections.  For an unstable module the unit is the identity. */
struct Destabilization {
    GModPtr module;
    ModuleMap unit;
};
Destabilization destabilize(const GModPtr& m);

}  // namespace nilops
