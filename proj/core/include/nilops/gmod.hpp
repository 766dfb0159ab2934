#pragma once

#include <climits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nilops/f2.hpp"
#include "nilops/steenrod.hpp"

namespace nilops {

// Trust sentinel for modules whose window contains the whole object.
constexpr int kTrustComplete = INT_MAX / 4;

struct Window {
    int lo = -8;
    int hi = 32;
};

class GradedModule;
using GModPtr = std::shared_ptr<const GradedModule>;

/* Tag recording that a module was built as Sigma^{-t} of an unstable module.
 * Destabilization and the Singer residue constructions require it. */
struct Desuspension {
    int t = 0;
    GModPtr inner;
};

/* A degreewise finite module over the mod 2 Steenrod algebra, stored on a
 * degree window [dmin, dmax].  Degrees below dmin are zero by convention;
 * degrees above dmax are zero when `complete` is set and unknown otherwise.
 *
 * Action matrices follow the row convention of F2Matrix: sq(i, d) has
 * dim(d) rows and dim(d+i) columns, row r being Sq^i of the r-th basis
 * vector of degree d.
 *
 * `trust` is the largest degree T with: dims at degrees <= T, and action
 * matrices whose target degree is <= T, all agree with the untruncated
 * object.  Complete modules use kTrustComplete. */
class GradedModule {
public:
    int dmin = 0, dmax = 0;
    bool complete = true;
    int trust = kTrustComplete;
    std::vector<int> dims;                          // indexed by degree - dmin
    std::map<std::pair<int, int>, F2Matrix> sq_map; // key (i, source degree), zero entries omitted
    std::optional<Desuspension> presentation;

    GradedModule() = default;
    GradedModule(int lo, int hi) : dmin(lo), dmax(hi), dims(hi - lo + 1, 0) {}

    int dim(int d) const {
        if (d < dmin || d > dmax) return 0;
        return dims[d - dmin];
    }
    void set_dim(int d, int n) { dims.at(d - dmin) = n; }

    F2Matrix sq(int i, int d) const;                // materializes zero when absent
    void set_sq(int i, int d, const F2Matrix& m);   // drops zero or empty matrices

    int total_dim() const;
    int top_degree() const;     // largest degree with dim != 0, dmin-1 if empty
    int bottom_degree() const;  // smallest degree with dim != 0, dmax+1 if empty

    // Matrix of an arbitrary word / admissible sum acting on degree d.
    F2Matrix word_action(const SqWord& w, int d) const;
    F2Matrix sum_action(const OperationSum& s, int d) const;
};

GModPtr mk(GradedModule&& m);

struct ValidationReport {
    bool ok = true;
    bool unstable_checked = false;
    std::vector<std::string> violations;
};

/* Checks Adem coherence of the stored action (every pair Sq^a Sq^b with
 * a < 2b agrees with its admissible normal form wherever the composite stays
 * inside the window) and, when requested, the instability conditions. */
ValidationReport validate(const GradedModule& m, bool check_unstable);

bool is_unstable(const GradedModule& m);   // instability conditions alone

/* The free unstable module F(n) on one generator of degree n, windowed.
 * Basis of degree n+k: admissible words of degree k and excess <= n, in the
 * order returned by admissible_words. */
GModPtr free_unstable(int n, Window w);

GModPtr suspend(const GradedModule& m, int t);
GModPtr suspend(const GModPtr& m, int t);
// suspend(N, -t) for unstable N, tagging the desuspension presentation.
GModPtr desuspend_presented(const GModPtr& n, int t);

// Restriction to a new window; trust is capped by the new top.
GModPtr truncate_module(const GradedModule& m, Window w);

GModPtr direct_sum(const GradedModule& a, const GradedModule& b);
GModPtr tensor_product(const GradedModule& a, const GradedModule& b);

/* Basis layout of degree d of a tensor product: one block per pair
 * (p, q = d-p) with increasing p, Kronecker (a-major) order inside a block. */
struct TensorBlock {
    int p = 0, q = 0;
    int offset = 0;
    int dim_a = 0, dim_b = 0;
};
std::vector<TensorBlock> tensor_blocks(const GradedModule& a, const GradedModule& b, int d);

/* Degree-preserving-up-to-shift map f: M -> N, f(M^d) in N^{d+shift},
 * commuting with the Sq action (no signs at p = 2). */
struct ModuleMap {
    GModPtr src, dst;
    int shift = 0;
    std::map<int, F2Matrix> mats;   // key: source degree; zero entries omitted

    F2Matrix mat(int d) const;
    void set_mat(int d, const F2Matrix& m);
    bool is_zero() const;
};

ModuleMap identity_map(const GModPtr& m);
ModuleMap zero_map(const GModPtr& src, const GModPtr& dst, int shift);
// f (x) g between given tensor products (shifts must be zero).
ModuleMap tensor_map(const ModuleMap& f, const ModuleMap& g,
                     const GModPtr& src, const GModPtr& dst);
// Basis-level identification (A (x) B) (x) C -> A (x) (B (x) C).
ModuleMap tensor_associator(const GModPtr& a, const GModPtr& b, const GModPtr& c);
// The same map between suspended modules (fresh suspended src/dst).
ModuleMap suspend_map(const ModuleMap& f, int t);
ModuleMap compose(const ModuleMap& f, const ModuleMap& g);   // f then g
ModuleMap map_add(const ModuleMap& f, const ModuleMap& g);
// Does f commute with the stored Sq matrices wherever the window allows?
bool map_is_linear(const ModuleMap& f, std::string* why = nullptr);
bool maps_equal(const ModuleMap& f, const ModuleMap& g);
// The same matrices between replacement endpoint modules (dims must agree
// wherever both windows overlap).
ModuleMap retarget(const ModuleMap& f, const GModPtr& new_src, const GModPtr& new_dst);

/* The map l with c;l = t, solved degreewise and verified; nullopt when t does
 * not factor.  Unique when c is surjective. */
std::optional<ModuleMap> left_factor(const ModuleMap& c, const ModuleMap& t);

// Per-degree bases of a family of subspaces of the degrees of a module.
using DegreewiseSpans = std::map<int, F2Matrix>;

DegreewiseSpans close_under_action(const GradedModule& m, const DegreewiseSpans& seed);
bool spans_action_closed(const GradedModule& m, const DegreewiseSpans& spans);
DegreewiseSpans spans_sum(const DegreewiseSpans& a, const DegreewiseSpans& b, const GradedModule& ambient);
DegreewiseSpans spans_intersect(const DegreewiseSpans& a, const DegreewiseSpans& b, const GradedModule& ambient);
bool spans_equal(const DegreewiseSpans& a, const DegreewiseSpans& b);
bool spans_contained(const DegreewiseSpans& inner, const DegreewiseSpans& outer);
int spans_total_dim(const DegreewiseSpans& s);

struct SubInclusion {
    GModPtr module;
    ModuleMap incl;
};
struct QuotientProjection {
    GModPtr module;
    ModuleMap proj;
};

// spans must be action closed; bases are canonicalized to rref.
SubInclusion submodule(const GModPtr& m, const DegreewiseSpans& spans);
QuotientProjection quotient_by(const GModPtr& m, const DegreewiseSpans& spans);

// The corestriction g: X -> S of f: X -> Y landing in the submodule S of Y.
std::optional<ModuleMap> factor_through_sub(const ModuleMap& f, const SubInclusion& s);

SubInclusion kernel(const ModuleMap& f);
SubInclusion image(const ModuleMap& f);
QuotientProjection cokernel(const ModuleMap& f);
// Degreewise preimage of a family of subspaces of f's target.
DegreewiseSpans preimage_spans(const ModuleMap& f, const DegreewiseSpans& spans);
DegreewiseSpans image_spans(const ModuleMap& f);

struct Pullback {
    GModPtr module;
    ModuleMap to_a, to_b;
    GModPtr sum;        // ambient A (+) B
    ModuleMap incl;     // module -> sum, kernel of (f pr_a + g pr_b)
};
// f: A -> C, g: B -> C with the same shift.
Pullback pullback(const ModuleMap& f, const ModuleMap& g);
// The map X -> P induced by pa: X -> A, pb: X -> B with f pa = g pb.
ModuleMap into_pullback(const Pullback& p, const ModuleMap& pa, const ModuleMap& pb);

struct Pushout {
    GModPtr module;
    ModuleMap from_a, from_b;
    GModPtr sum;        // ambient A (+) B
    ModuleMap proj;     // sum -> module, cokernel of (f in_a + g in_b)
};
// f: C -> A, g: C -> B with the same shift.
Pushout pushout(const ModuleMap& f, const ModuleMap& g);

struct DirectSumMaps {
    GModPtr module;
    ModuleMap in_a, in_b, pr_a, pr_b;
};
DirectSumMaps direct_sum_with_maps(const GModPtr& a, const GModPtr& b);

struct HomSpace {
    std::vector<ModuleMap> basis;
    // False when either module is incomplete, in which case maps are solutions
    // of the windowed constraint system only.
    bool exact = true;
};
/* All degree-zero Sq-linear maps M -> N, solved degreewise over the window.
 * Linearity is imposed against Sq^{2^j} only; these generate the algebra. */
HomSpace hom_unstable(const GradedModule& m, const GradedModule& n);

std::optional<ModuleMap> find_isomorphism(const GModPtr& a, const GModPtr& b);
bool modules_equal(const GradedModule& a, const GradedModule& b);  // strict data equality on dims and actions
// Degreewise inverse of an isomorphism (nullopt when any degree is singular).
std::optional<ModuleMap> map_inverse(const ModuleMap& f);

// Is 0 -> A -i-> B -p-> C -> 0 exact?  (i injective, p surjective, im i = ker p)
bool is_short_exact(const ModuleMap& i, const ModuleMap& p, std::string* why = nullptr);

/* Minimal-ish free cover: one F(n) summand per generator of M (basis of
 * M / (sum of Sq^i images)), windowed like M.  K is the kernel inclusion. */
struct FreeCover {
    GModPtr free;
    ModuleMap onto;       // free -> M, surjective within the window
    SubInclusion kernel;  // kernel of `onto`
};
FreeCover one_step_free_cover(const GModPtr& m);

/* ---------------- standard modules ---------------- */

// One basis class u^a per degree a >= amin, Sq^i u^a = binom(a, i) u^{a+i}.
// amin = 1 is the reduced cohomology of the infinite projective space;
// negative amin gives truncated Laurent modules (not unstable).
GModPtr u_power_module(int amin, Window w);
// F2[u]u / (u^{n+1}): degrees 1..n.  n = 2 is the projective plane module.
GModPtr truncated_projective(int n, Window w);
GModPtr rp2(Window w);
// Classes z4, z8 with Sq^4 z4 = z8; the second nilpotent layer of F(1).
GModPtr n2_module(Window w);
// One class in degree d, trivial action.
GModPtr f2_at(int d, Window w);

}  // namespace nilops
