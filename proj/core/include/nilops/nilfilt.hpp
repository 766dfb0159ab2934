#pragma once

#include <string>
#include <vector>

#include "nilops/functors.hpp"
#include "nilops/gmod.hpp"

namespace nilops {

enum class Verdict { Yes, No, Inconclusive };
std::string verdict_name(Verdict v);

/* Largest submodule all of whose elements x satisfy |x| >= s and
 * Sq^i x = 0 for i > |x| - s; equivalently the largest submodule that is an
 * s-fold suspension of an unstable module.  s may be negative (the condition
 * then allows desuspensions).  Computed as a greatest fixed point.
 *
 * On an incomplete module the conditions on a class of degree d reach up to
 * degree 2d, so membership near the top of the window is not determined by
 * the stored data: such classes are kept (data beyond the window is read as
 * zero) but `trust` records the largest degree below which the answer is
 * forced by the window alone.  A class counts as unforced when its own
 * conditions escape the window or when a visible action chain leads from it
 * to an unforced class, since an eviction there would cascade downward. */
struct SocleResult {
    DegreewiseSpans spans;
    int trust;
};
SocleResult sigma_socle(const GradedModule& m, int s);

/* Greedy nilpotent tower for membership in Nil_s: N_0 = 0 and N_{k+1} the
 * preimage of the s-suspension socle of M/N_k.  The limit is the largest
 * submodule carrying a finite filtration with s-suspension layers.  `trust`
 * degrades stage by stage: a stage quotients by unforced content of the
 * previous one, so admissions that depend on that content are unforced too. */
struct NilCertificate {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<DegreewiseSpans> tower;   // strictly increasing, ending at the limit
    int trust = 0;
};
NilCertificate in_nil_s(const GModPtr& m, int s);

/* nil_s M for s = 0..smax (tower limits); nil_0 = M.  level_trust[s] is the
 * trust horizon of nil[s]; trust is their minimum. */
struct NilFiltration {
    std::vector<DegreewiseSpans> nil;
    int smax = 0;
    int trust = 0;
    std::vector<int> level_trust;
};
NilFiltration nil_filtration(const GModPtr& m, int smax);

/* nil[level] restricted to degrees within its trust horizon and closed under
 * the action: the certified submodule inside nil[level]. */
DegreewiseSpans trusted_part(const GModPtr& m, const NilFiltration& filt, int level);

// sigma_1 = 0 within the trust horizon: no certified suspension submodule.
bool is_reduced(const GModPtr& m);

/* rho_s M = Sigma^{-s}(nil_s / nil_{s+1}), with the maps used to reach it.
 * The quotient is by the certified part of nil_{s+1} only; the unforced
 * high-degree content of the next stage would otherwise swallow the layer.
 * `trust` is the horizon below which the layer is forced by the window. */
struct RhoLayer {
    int s = 0;
    SubInclusion sub;             // nil_s inside M
    QuotientProjection layer_q;   // nil_s -> nil_s / certified nil_{s+1}
    GModPtr layer;                // Sigma^s rho_s
    GModPtr rho;
    int trust = kTrustComplete;
};
RhoLayer rho_layer(const GModPtr& m, const NilFiltration& filt, int s);

/* delta_n: Phi(rho_n M) -> rho_{n+1} M.  On a class of rho_n M represented by
 * y in nil_n of degree m, delta_n is Sq^{m+1-n} y projected to the next
 * layer.  Both containments that make this well defined are checked. */
struct DeltaData {
    int n = 0;
    RhoLayer rho_n, rho_n1;
    ModuleMap delta;
    int trust = kTrustComplete;
};
DeltaData delta_n(const GModPtr& m, const NilFiltration& filt, int n);
DeltaData delta_n(const GModPtr& m, int n);

/* Exactness of
 *   Sigma Phi rho_n -> Sigma rho_{n+1} -> Omega^n(M/nil_{n+2}) -> rho_n -> 0
 * for M in Nil_n, with the outer maps produced by applying Omega^n to the
 * extension 0 -> Sigma^{n+1} rho_{n+1} -> M/nil_{n+2} -> Sigma^n rho_n -> 0. */
struct LesOmegaN {
    DeltaData dd;
    GModPtr mbar;                 // M / nil_{n+2}
    ModuleMap sigma_delta;        // Sigma Phi rho_n -> Sigma rho_{n+1}
    ModuleMap g;                  // Sigma rho_{n+1} -> Omega^n mbar
    ModuleMap h;                  // Omega^n mbar -> rho_n
    bool exact_at_b = false, exact_at_c = false, exact_at_d = false;
};
LesOmegaN les_omegan(const GModPtr& m, int n);

/* Almost-unstable certification.  A witness is an increasing filtration
 * 0 subset F_1 subset ... subset F_k = M by action-closed spans; layer i
 * carries a tag t_i and is accepted when its t_i-fold suspension lies in
 * Nil_{t_i}.  Without a witness: definite rejection on classes below degree
 * zero, acceptance by the degree filtration for complete nonnegative modules,
 * otherwise a greedy suspension-socle peel. */
struct AUWitnessLayer {
    int t = 0;
    DegreewiseSpans step;   // F_i in ambient coordinates
};
struct AUVerdict {
    Verdict state = Verdict::Inconclusive;
    std::string reason;
    std::vector<AUWitnessLayer> witness;
};
AUVerdict certify_almost_unstable(const GModPtr& m,
                                  const std::vector<AUWitnessLayer>* witness = nullptr,
                                  int t_cap = 16);

/* For M presented as Sigma^{-t} N: the reduced quotient rho_0 M of the
 * destabilization, the unit M -> rho_0 M, and its kernel M' together with a
 * certificate that Sigma M' lies in Nil_1. */
struct GoodDecomposition {
    GModPtr rho0;
    ModuleMap unit;
    SubInclusion mprime;
    NilCertificate nil1_cert;   // for Sigma M'
};
GoodDecomposition good_decomposition(const GModPtr& m);

}  // namespace nilops
