#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nilops/functors.hpp"
#include "nilops/gmod.hpp"
#include "nilops/nilfilt.hpp"
#include "nilops/singer.hpp"

namespace nilops {

/* The second extended-power model E_n M, glued from the corner diagram
 *
 *        Gamma^2 M ->> Phi M <<- R_1 M/u^n  <-| Sigma^{n-1} Phi M
 *                                                     |
 *                                                     v
 *                                            Sigma^{n-1} S^2 M
 *
 * as the pullback P over Phi M followed by the pushout along the two maps out
 * of Sigma^{n-1} Phi M.  For n >= 2 this produces the extension
 *
 *   0 -> Lambda^2 M (+) Sigma^{n-1} S^2 M -> E_n M -> R_1 M/u^{n-1} -> 0.
 *
 * For n = 1 the corner maps are isomorphisms and E_1 M is M tensor M; the
 * extension above fails at n = 1 (a tensor square is not the sum of its
 * exterior and symmetric parts), so it is only formed for n >= 2. */
struct EModel {
    int n = 1;
    GModPtr m;
    Window w{0, 0};
    GModPtr module;             // E_n M
    QuadraticParts qp;          // on m

    // n == 1 only: the identification E_1 M = M tensor M
    ModuleMap iso_t2;

    // n >= 2 only
    SingerTower tower;          // depth n
    Pullback pb;                // over Phi M
    GModPtr sbar;               // Sigma^{n-1} S^2 M
    DirectSumMaps sum;          // P (+) Sbar
    ModuleMap glue;             // Sigma^{n-1} Phi M -> P (+) Sbar
    QuotientProjection from_sum;// P (+) Sbar ->> E_n M
    ModuleMap incl_lambda2;     // Lambda^2 M -> E_n M
    ModuleMap incl_sbar;        // Sigma^{n-1} S^2 M -> E_n M
    ModuleMap pi_gamma;         // E_n M ->> Gamma^2 M
    GModPtr r_quot;             // R_1 M / u^{n-1}
    ModuleMap proj_r;           // E_n M ->> R_1 M / u^{n-1}
    GModPtr ses_sub;            // Lambda^2 M (+) Sigma^{n-1} S^2 M
    ModuleMap ses_incl;         // ses_sub -> E_n M
    bool ses_exact = false;
    std::string ses_why;
};
EModel e_model(const GModPtr& m, int n,
               std::optional<Window> window = std::nullopt);

// The map E_n f induced by f: A -> B of shift zero, for models on A and B.
ModuleMap e_model_map(const EModel& ea, const EModel& eb, const ModuleMap& f);

/* The same module built pushout-first: Q = (R_1/u^n (+) Sigma^{n-1}S^2)/glue,
 * then the pullback of Gamma^2 M ->> Phi M <- Q; `commute` states the
 * canonical comparison map is an isomorphism. */
struct EModelOrderCheck {
    GModPtr other;
    ModuleMap comparison;       // e.module -> other
    bool commute = false;
};
EModelOrderCheck e_model_order_check(const EModel& e);

/* A connected unstable algebra, presented by its augmentation ideal and the
 * product restricted to it. */
struct UnstableAlgebra {
    GModPtr module;     // the augmentation ideal, unstable, degrees >= 1
    GModPtr t2;         // module tensor module
    ModuleMap product;  // t2 -> module, degree preserving
};
UnstableAlgebra algebra_from_product(const GModPtr& module, const ModuleMap& product);
// The unique algebra structure with all products zero (valid for suspensions).
UnstableAlgebra zero_product_algebra(const GModPtr& module);

struct AlgebraReport {
    bool ok = true;
    std::vector<std::string> problems;
};
/* Instability of the carrier, Sq-linearity of the product (the Cartan
 * formula), commutativity, x.x = Sq^{|x|} x on basis elements, and
 * associativity, all within the window. */
AlgebraReport validate_algebra(const UnstableAlgebra& a);

/* The algebraic differential d_1: E_n(Sigma^{-n} Kbar) -> Sigma^{-n-1} Kbar,
 * assembled from the residue differential on the R_1/u^n leg and the product
 * on the Sigma^{n-1} S^2 leg.  The legs agree on the glued Sigma^{n-1} Phi
 * part exactly when squares in the algebra are top Steenrod squares; if they
 * do not, `legs_compatible` is false and d1 is left zero. */
struct AlgebraicD1 {
    int n = 1;
    UnstableAlgebra alg;
    GModPtr mtilde;             // Sigma^{-n} Kbar, with presentation
    EModel em;                  // on mtilde
    GModPtr target;             // Sigma^{-n-1} Kbar
    ModuleMap d1;               // em.module -> target
    ModuleMap residue;          // n >= 2: the R_1/u^n leg alone
    bool legs_compatible = false;
    std::string why;
};
AlgebraicD1 algebraic_d1(const UnstableAlgebra& alg, int n);

/* The two-column first page for Omega^n, columns stored desuspended:
 * column -1 holds Sigma^{-n} Kbar, column -2 holds E_n(Sigma^{-n} Kbar).
 * Both columns stabilize at the second page, so E_infinity is coker(d_1) in
 * column -1 and ker(d_1) in column -2.  The differential induces the layer
 * map L on Gamma^2(rho_n Kbar) (T^2(rho_1 Kbar) for n = 1), which for n >= 2
 * factors through Phi(rho_n Kbar) and is compared against delta_n exactly. */
struct TwoColumnPage {
    int n = 1;
    AlgebraicD1 d1;

    // hypotheses
    Verdict kbar_in_nil_n = Verdict::Inconclusive;
    bool connected_enough = false;   // Kbar vanishes in degrees <= n
    AUVerdict au_col1, au_col2;

    NilFiltration filt;              // on Kbar, depth n+2
    DeltaData dd;                    // delta_n of Kbar
    ModuleMap q_layer;               // Sigma^{-n} Kbar ->> rho_n Kbar

    GModPtr layer_source;            // Gamma^2(rho_n) for n >= 2, T^2(rho_1) for n = 1
    ModuleMap layer_map;             // L: layer_source -> rho_{n+1} Kbar
    bool layer_solved = false;
    bool factors_phi = false;        // n >= 2: L kills Lambda^2
    ModuleMap induced_phi;           // n >= 2: Phi(rho_n) -> rho_{n+1}
    bool matches_delta = false;      // n >= 2: induced_phi equals delta_n
    // n >= 2: the R_1/u^n leg alone, pushed to the layers, equals delta_n
    bool r_leg_matches_delta = false;

    QuotientProjection einf_col1_k;  // the page-2 column -1 as a quotient of Kbar
    GModPtr einf_col1;               // its presented desuspension
    GModPtr rho0_col1;               // reduced quotient of column -1 at infinity
    bool rho0_col1_matches = false;  // rho0_col1 iso rho_n Kbar
    SubInclusion einf_col2;          // ker d_1 inside E_n(Sigma^{-n} Kbar)
    bool rho0_col2_matches = false;  // image of ker d_1 in layer_source is ker L
    std::string notes;
};
TwoColumnPage two_column_page(const UnstableAlgebra& alg, int n);

/* A stored page of a second-quadrant spectral sequence of unstable-module
 * type: column k holds Sigma^{-k} E_r^{-k,*} and the differential out of
 * column k is a shift +1 map to column k - r. */
struct SpectralData {
    int r = 1;
    std::map<int, GModPtr> columns;
    std::map<int, ModuleMap> differentials;   // key: source column
};
SpectralData two_column_spectral_data(const TwoColumnPage& p);

struct SpectralReport {
    bool ok = true;
    std::vector<std::string> problems;
};
/* Second quadrant, trivial 0-column, differentials with the right shift and
 * endpoints, Sq-linear, and composing to zero where two are adjacent. */
SpectralReport spectral_hypothesis_check(const SpectralData& s);

/* Reduced quotients of the columns supplied by the caller (the goodness
 * certificates); stability asserts rho_0 survives page-turning, with
 * equality once r exceeds the column index. */
struct ColumnCertificate {
    QuotientProjection rho0;   // column ->> reduced quotient
};
SpectralReport spectral_rho0_stability(const SpectralData& s,
                                       const std::map<int, ColumnCertificate>& certs,
                                       int pages = 3);

}  // namespace nilops
