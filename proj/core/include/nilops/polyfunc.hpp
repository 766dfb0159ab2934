#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nilops/emodel.hpp"
#include "nilops/gmod.hpp"
#include "nilops/nilfilt.hpp"

namespace nilops {

/* ---------------- the truncated linear category ----------------
 *
 * Objects are F_2^0 .. F_2^kmax; morphisms are ALL linear maps, a map
 * F_2^i -> F_2^j stored as an i x j matrix acting on row vectors.  A
 * PolyFunctor assigns a dimension to every object and a matrix
 * F(phi): F(F_2^i) -> F(F_2^j) to every morphism.  Functoriality is
 * checkable by full enumeration for kmax <= 3. */

struct LinMor {
    int src = 0, dst = 0;
    F2Matrix mat;  // src x dst
};

// All 2^{ij} morphisms F_2^i -> F_2^j, indexed by row-major bit encoding.
std::vector<F2Matrix> all_morphisms(int i, int j);
LinMor identity_mor(int k);

/* Generating set: within each dimension the elementary transvections,
 * coordinate transpositions and the corank-1 coordinate idempotent;
 * across dimensions the coordinate inclusions F_2^{k-1} -> F_2^k and
 * projections F_2^k -> F_2^{k-1}.  Every morphism factors through these. */
std::vector<LinMor> category_generators(int kmax);

// Factor phi: F_2^i -> F_2^j as a composite of generators (indices into
// gens, in application order).  Throws if i, j exceed the generator range.
std::vector<int> factor_morphism(int i, int j, const F2Matrix& phi,
                                 const std::vector<LinMor>& gens);

/* ---------------- polynomial functors ---------------- */

class FunctorImpl {
  public:
    virtual ~FunctorImpl() = default;
    // Dimension at the object F_2^k (truncated objects only unless formulaic).
    virtual int dim(int k) const = 0;
    // F(phi) for phi: F_2^i -> F_2^j.  For formulaic impls i, j may be any
    // dimensions; otherwise they are objects of the truncated category.
    virtual F2Matrix act(int i, int j, const F2Matrix& phi) const = 0;
    virtual bool formulaic() const { return false; }
};

struct PolyFunctor {
    int kmax = 0;
    std::vector<int> dims;  // size kmax + 1
    std::string name;
    std::shared_ptr<const FunctorImpl> impl;

    int dim(int k) const { return (k >= 0 && k < static_cast<int>(dims.size())) ? dims[k] : 0; }
    F2Matrix act(int i, int j, const F2Matrix& phi) const;
    bool is_zero() const;
};

struct FunctorCheck {
    bool ok = true;
    std::string why;
};
// Identities and composition on the full morphism enumeration.  Intended for
// small functors only (~2^18 composable pairs at kmax 3).
FunctorCheck functor_check(const PolyFunctor& f);

/* ---------------- standard functors ---------------- */

PolyFunctor id_functor(int kmax);
PolyFunctor constant_functor(int kmax);          // F_2 everywhere
PolyFunctor zero_functor(int kmax);
PolyFunctor tensor_power_functor(int n, int kmax);     // T^n, basis i-major
PolyFunctor symmetric_power_functor(int n, int kmax);  // S^n, monomial basis, n <= 4
PolyFunctor exterior_square_functor(int kmax);         // Lambda^2, basis e_i ^ e_j, i < j
PolyFunctor divided_square_functor(int kmax);          // Gamma^2 = (S^2 of the dual)^*

// G o F; G must be formulaic (standard functors are).
PolyFunctor compose_functor(const PolyFunctor& g, const PolyFunctor& f);
// F o (V -> V + F_2^m); drops kmax by m.
PolyFunctor precompose_shift(const PolyFunctor& f, int m);
PolyFunctor direct_sum_functor(const PolyFunctor& a, const PolyFunctor& b);

/* Functor assembled from a table of generator actions (file-loaded functors).
 * dims has size kmax + 1; gen_mats[t] acts for category_generators(kmax)[t]
 * as a dims[src] x dims[dst] matrix.  Arbitrary morphisms act through
 * factor_morphism; coherence of the table is verified by functor_check. */
PolyFunctor generated_functor(std::vector<int> dims, std::vector<F2Matrix> gen_mats,
                              const std::string& name);

// Component formulas for the classical natural maps at an m-dimensional
// input; bases as in the standard functors above.
F2Matrix frobenius_component(int m);       // Id -> S^2, x -> x^2
F2Matrix s2_to_lambda2_component(int m);   // S^2 ->> Lambda^2, x_i x_j -> e_i ^ e_j, x^2 -> 0
F2Matrix norm_component(int m);            // S^2 -> Gamma^2, x_i x_j -> e_i e_j + e_j e_i, x^2 -> 0
F2Matrix gamma2_counit_component(int m);   // Gamma^2 -> Id, e_i e_i -> e_i, off-diagonal -> 0
F2Matrix s2_to_t2_component(int m);        // S^2 -> T^2, x_i x_j -> e_i x e_j + e_j x e_i, x^2 -> 0
F2Matrix t2_to_s2_component(int m);        // T^2 ->> S^2, e_i x e_j -> x_i x_j
F2Matrix lambda2_to_t2_component(int m);   // Lambda^2 -> T^2, e_i ^ e_j -> e_i x e_j + e_j x e_i
F2Matrix gamma2_to_t2_component(int m);    // Gamma^2 = ker(1 + tau) inside T^2

/* ---------------- natural transformations ---------------- */

struct NatTrans {
    PolyFunctor src, dst;
    std::vector<F2Matrix> comp;  // comp[k]: src.dim(k) x dst.dim(k)
};
NatTrans nat_from_components(const PolyFunctor& src, const PolyFunctor& dst,
                             std::vector<F2Matrix> comp);
bool nat_is_natural(const NatTrans& t, std::string* why = nullptr);
NatTrans nat_compose(const NatTrans& s, const NatTrans& t);  // s then t
NatTrans nat_identity(const PolyFunctor& f);
NatTrans nat_zero(const PolyFunctor& src, const PolyFunctor& dst);
bool nat_equal(const NatTrans& a, const NatTrans& b);
// F_1 o E -> F_2 o E for E the shift V -> V + F_2^m.
NatTrans nat_precompose_shift(const NatTrans& t, int m);

// Basis of Nat(F, G), solved against the full morphism enumeration.
std::vector<NatTrans> nat_transformations(const PolyFunctor& f, const PolyFunctor& g);

/* ---------------- subfunctors ---------------- */

struct SubFunctor {
    PolyFunctor parent;
    std::vector<F2Matrix> basis;  // basis[k]: dim_k x parent.dim(k), canonical rref
    PolyFunctor functor;          // standalone view in basis coordinates
};
// Spans must be invariant under every morphism (checked; throws otherwise).
SubFunctor sub_functor(const PolyFunctor& parent, std::vector<F2Matrix> spans,
                       const std::string& name);
SubFunctor kernel_functor(const NatTrans& f);  // inside f.src
SubFunctor image_functor(const NatTrans& f);   // inside f.dst
SubFunctor intersect_sub(const SubFunctor& a, const SubFunctor& b, const std::string& name);
SubFunctor full_sub(const PolyFunctor& parent);
SubFunctor zero_sub(const PolyFunctor& parent);
NatTrans sub_inclusion(const SubFunctor& s);

/* ---------------- polynomial degree ---------------- */

// Delta F = coker(F(V) -> F(V + F_2)); drops kmax by one.
PolyFunctor delta_functor(const PolyFunctor& f);

/* degree = least d with Delta^{d+1} F = 0; -1 for the zero functor.  The
 * certificate is truncation-bounded: `certified` is false when the Delta
 * chain exhausts kmax before vanishing, in which case degree holds the
 * number of applications that were possible. */
struct PolyDegree {
    int degree = -1;
    bool certified = false;
};
PolyDegree poly_degree(const PolyFunctor& f);

/* ---------------- exact sequences ---------------- */

struct FunctorSES {             // 0 -> a -> b -> c -> 0
    PolyFunctor a, b, c;
    NatTrans i, p;
};
struct YonedaTwoExt {           // 0 -> a -> b1 -> b2 -> c -> 0
    PolyFunctor a, b1, b2, c;
    NatTrans f, g, h;
};
struct ExactCheck {
    bool exact = true;
    std::string why;
};
ExactCheck ses_is_exact(const FunctorSES& e);
ExactCheck two_ext_is_exact(const YonedaTwoExt& x);

FunctorSES frobenius_ses(int kmax);   // 0 -> Id -> S^2 -> Lambda^2 -> 0
YonedaTwoExt e1_class(int kmax);      // 0 -> Id -> S^2 -> Gamma^2 -> Id -> 0
YonedaTwoExt e1_tilde_class(int kmax);// 0 -> Id -> S^2 -> T^2 -> S^2 -> 0
// The same rows precomposed with F: e.g. 0 -> F -> S^2 o F -> Gamma^2 o F -> F -> 0.
YonedaTwoExt e1_composed(const PolyFunctor& f);
YonedaTwoExt e1_tilde_composed(const PolyFunctor& f);

// Base change along t: X -> e.c (resp. x.c), replacing the right-hand term.
FunctorSES ses_pullback(const FunctorSES& e, const NatTrans& t);
YonedaTwoExt two_ext_pullback(const YonedaTwoExt& x, const NatTrans& t);

struct SplitResult {
    bool splits = false;
    std::optional<NatTrans> retraction;  // b -> a with i;r = id when split
    std::string note;
};
// Natural retraction solved over the truncated category.  A failure there
// is final (the truncation only removes constraints).
SplitResult ses_splits(const FunctorSES& e);

/* ---------------- Ext^2 over the truncated category ----------------
 *
 * Projective resolution of a functor by sums of representables
 * P_j = F_2[Hom(F_2^j, -)], built from minimal generator covers; Ext^* is
 * the cohomology of Hom(P_bullet, A) with blocks evaluated through A. */

struct Resolution {
    int kmax = 0;
    PolyFunctor target;
    std::vector<std::vector<int>> levels;        // levels[l] = objects j of the summands
    std::vector<std::vector<F2Matrix>> gens;     // gens[0][t] in F(j_t); gens[l][t] in P^{l-1}(j_t) for l >= 1
    // diff[l]: P^l -> P^{l-1} (l >= 1): block (s <- source summand, t <- target
    // summand) is a formal sum over Hom(j^{l-1}_t, j^l_s), one bit per morphism.
    std::vector<std::vector<std::vector<F2Matrix>>> diff;
    std::vector<int> proj_dims_at(int k) const;  // dims of the P^l(k)
};
Resolution resolve(const PolyFunctor& f, int levels);

// Evaluation of P^l at the object k (matrix of d_l: P^l(k) -> P^{l-1}(k)).
F2Matrix resolution_diff_at(const Resolution& r, int l, int k);
// Coboundary C^l(A) -> C^{l+1}(A) of the induced cochain complex
// C^l(A) = (+)_t A(j^l_t).
F2Matrix cochain_coboundary(const Resolution& r, int l, const PolyFunctor& a);

struct Ext2Certificate {
    bool nonzero = false;
    std::vector<int> level_sizes;   // summand counts of P^0..P^3
    std::vector<int> cochain_dims;  // dim C^0..C^3
    std::string note;
};
// Lifts the Yoneda class of x through a resolution of x.c and tests the
// resulting 2-cocycle against the coboundary image.
Ext2Certificate ext2_nonzero(const YonedaTwoExt& x);

/* ---------------- detection (splitting) chains ---------------- */

/* For f: F1 -> F2 with F1, F2 and image(f) of exact polynomial degree d > 0,
 * the shift E: V -> V + F_2^{d-1} admits iota: Id -> F1 o E and
 * pi: F2 o E -> Id with iota ; (f o E) ; pi = id.  All certificates are
 * verified componentwise. */
struct DetectionChain {
    bool found = false;
    int d = 0;
    PolyFunctor f1_shift, f2_shift;
    NatTrans into, shifted, onto;
    bool composite_is_identity = false;
    std::string note;
};
DetectionChain detection_functor(const NatTrans& f, int d);

/* ---------------- localization ---------------- */

// F_2[u_1..u_k] as an unstable module on the window (degree 0 included).
GModPtr polynomial_algebra_module(int k, Window w);

/* l(M)(F_2^k) is the dual of hom_unstable(M, F_2[u_1..u_k]); covariant
 * functoriality through duals of postcomposition with H^*(B-) of a linear
 * map.  `exact` is false when M is incomplete (windowed approximation). */
struct Localization {
    GModPtr m;
    int kmax = 0;
    PolyFunctor functor;
    std::vector<HomSpace> homs;  // homs[k] = hom_unstable(M, F_2[u_1..u_k])
    bool exact = true;
};
Localization localize(const GModPtr& m, int kmax);

// l(f): l(A) -> l(B) for f: A -> B of shift 0.
NatTrans localize_map(const Localization& la, const Localization& lb, const ModuleMap& f);
// l(A) -> l(B) for f: Phi A -> B of shift 0, through l(Phi A) = l(A)
// (maps out of Phi A untwist along the squaring injection of the target).
NatTrans localize_phi_twisted(const Localization& la, const Localization& lb,
                              const ModuleMap& f);
/* S^2 o l(A) -> l(B) induced by a product-type map mu: A tensor A -> B
 * (shift 0, symmetric).  Components solved through the hom-space pairing
 * Hom(A,P) tensor Hom(A,P) -> Hom(A tensor A, P). */
NatTrans localize_square_map(const Localization& la, const Localization& lb,
                             const ModuleMap& mu);

/* ---------------- the obstruction pipeline ---------------- */

struct ObstructionReport {
    int n = 0;
    std::string f1_name;
    std::vector<int> f1_dims;
    std::string k_name;
    std::vector<int> k_dims;
    std::string omega;    // description of the tested class
    std::string verdict;  // "fires" | "consistent" | "hypothesis-not-met"
    int d = -1;           // degree of F_1 (when certified)
    int k_degree = -1;    // degree of the test subfunctor (when certified)
    bool ext2_certificate = false;       // numeric: the pulled-back 2-class is nonzero
    bool detection_certificate = false;  // structural: split-mono chain found
    std::string note;
};

/* K sits inside F_1 for n >= 2 and inside S^2 o F_1 for n = 1 (where the
 * test subfunctor is K meet F_1 along the Frobenius embedding).  Fires when
 * the test subfunctor still has exact degree d = degree(F_1) > 0, certified
 * by the detection chain together with the Ext^2 class. */
ObstructionReport obstruction(int n, const PolyFunctor& f1, const SubFunctor& k);

/* Module-level front end: F_1 = l(rho_n M), K = ker(F_1 -> l(rho_{n+1} M))
 * induced by delta_n.  Requires n >= 2, M in Nil_n. */
ObstructionReport obstruction_from_module(const GModPtr& m, int n, int kmax);

struct RealizabilityReport {
    bool hypotheses_ok = false;  // 1-connected carrier, rho_1 nonzero of certified degree d > 0
    int d = -1;                  // degree of l(rho_1)
    int image_degree = -1;       // degree of l(image of the cup-square map in M/nil_3)
    bool gate = false;           // image degree < d
    std::string verdict;         // "not-realizable" | "inconclusive" | "hypothesis-not-met"
    ObstructionReport obstruction;  // n = 1 certificate pipeline (when the gate applies)
    std::string note;
};
/* The cup-square gate: for a connected unstable algebra with 1-connected
 * augmentation ideal and rho_1 of exact degree d > 0, an image of
 * Sq_0: Phi M -> M/nil_3 of degree < d contradicts realizability. */
RealizabilityReport realizability(const UnstableAlgebra& alg, int kmax);

}  // namespace nilops
