#pragma once

#include "nilops/gmod.hpp"

namespace nilops {

/* The Singer construction R_1 M, realized inside the ambient module
 * F2[u >= floor] tensor M with the total Cartan action
 *   Sq^k (u^a tensor x) = sum_j binom(a, j) u^{a+j} tensor Sq^{k-j} x.
 * R_1 M is the span of the classes u^a St_1(x), a >= 0, where
 *   St_1(x) = sum_i u^{|x|-i} tensor Sq^i x       (degree 2|x|).
 * floor is the least u-exponent any St_1 can produce. */
struct R1Data {
    GModPtr m;
    GModPtr ambient;
    int floor = 0;
    SubInclusion r1;
};

struct AmbientBlock {
    int a = 0;        // u-exponent
    int d = 0;        // tensor factor degree, a + d = total degree
    int offset = 0;
    int dim = 0;      // dim M^d
};
std::vector<AmbientBlock> ambient_blocks(const R1Data& r, int degree);

R1Data r1_module(const GModPtr& m, Window w);

// Rows of u^a St_1(basis of M^d) in ambient coordinates at degree a + 2d.
F2Matrix u_st1_rows(const R1Data& r, int a, int d);
// Those same rows in R_1 coordinates.
F2Matrix u_st1_rows_in_r1(const R1Data& r, int a, int d);
// Degreewise spans of u^k R_1 in R_1 coordinates.
DegreewiseSpans u_power_r1_spans(const R1Data& r, int k);

/* R_1 together with its u-adic truncations R_1 / u^k for k = 1..nmax. */
struct SingerTower {
    R1Data base;
    std::vector<QuotientProjection> quots;   // quots[k-1]: R_1 -> R_1 / u^k
};
SingerTower singer_tower(const GModPtr& m, int nmax, Window w);

// alpha_n: Sigma^{n-1} Phi M -> R_1/u^n, x -> [u^{n-1} St_1 x]  (injective)
ModuleMap singer_alpha(const SingerTower& t, int n);
// beta_n: R_1/u^n -> R_1/u^{n-1}, the further truncation (surjective), n >= 2
ModuleMap singer_beta(const SingerTower& t, int n);
// R_1/u -> Phi M, inverse of Phi x -> [St_1 x].
ModuleMap phi_from_r1_mod_u(const SingerTower& t);
// R_1/u^n -> Phi M: truncate to R_1/u, then identify.
ModuleMap pi_to_phi(const SingerTower& t, int n);

/* The layer u^i R_1 / u^{i+1} R_1 with the comparison map from Sigma^i Phi M. */
struct UAdicLayer {
    GModPtr layer;
    ModuleMap from_phi;   // Sigma^i Phi M -> layer
    bool iso = false;
};
UAdicLayer u_adic_layer(const R1Data& r, int i);

// R_1 f: R_1 M -> R_1 N for degree-preserving f (restriction of 1 tensor f).
ModuleMap r1_functor_map(const R1Data& rm, const R1Data& rn, const ModuleMap& f);

/* Residue differential for N unstable:
 *   d_{1/n}: R_{1/n}(Sigma^{-n} N) -> Sigma^{-n-1} N
 * reads the u^{-1} coordinate of any R_1 representative.  It vanishes on
 * u^n R_1 precisely because N is unstable (checked). */
struct ResidueData {
    SingerTower tower;    // tower of Sigma^{-n} N, depth n
    int n = 0;
    GModPtr target;       // Sigma^{-n-1} N
    ModuleMap d;          // R_1/u^n -> target
};
ResidueData residue_differential(const GModPtr& n_unstable, int n, Window w);

/* coker( Sigma d_{1/n} : Sigma R_{1/n}(Sigma^{-n} N) -> Sigma^{-n} N ),
 * the loop-functor model produced by the residue. */
struct ResidueLoops {
    ResidueData residue;
    QuotientProjection coker;   // from Sigma^{-n} N
    GModPtr module;
};
ResidueLoops loops_via_residue(const GModPtr& n_unstable, int n, Window w);

}  // namespace nilops
