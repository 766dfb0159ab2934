#include "nilops/emodel.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace nilops {

namespace {

/* x.x = Sq^{|x|} x on basis elements, read off the diagonal rows of the
 * product matrices. */
bool squares_are_top(const UnstableAlgebra& a, std::string* why) {
    const GradedModule& m = *a.module;
    for (int d = m.dmin; d <= m.dmax; ++d) {
        int nd = m.dim(d);
        if (nd == 0) continue;
        int d2 = 2 * d;
        if (d2 > m.dmax) continue;   // the square falls outside the window
        auto blocks = tensor_blocks(m, m, d2);
        int offset = -1;
        for (const auto& b : blocks)
            if (b.p == d && b.q == d) { offset = b.offset; break; }
        if (offset < 0) continue;
        F2Matrix prod = a.product.mat(d2);
        std::vector<int> idx;
        idx.reserve(nd);
        for (int i = 0; i < nd; ++i) idx.push_back(offset + i * nd + i);
        if (prod.submatrix_rows(idx) != m.sq(d, d)) {
            if (why) *why = fmt::format("x.x != Sq^{} x in degree {}", d, d);
            return false;
        }
    }
    return true;
}

/* For f: X -> Sigma^{-n-1} Kbar (shift 0, target presented desuspended),
 * solve the image into nil_{n+1} and project to the next layer, producing
 * X -> rho_{n+1} (shift 0).  Fails when the image escapes nil_{n+1}. */
std::optional<ModuleMap> push_into_next_layer(const ModuleMap& f, const RhoLayer& next,
                                              int n, std::string* why) {
    ModuleMap t{f.src, next.rho, 0, {}};
    for (const auto& [e, rows] : f.mats) {
        int kd = e + n + 1;
        auto in_sub = solve_left(next.sub.incl.mat(kd), rows);
        if (!in_sub) {
            if (why) *why = fmt::format("degree {}", kd);
            return std::nullopt;
        }
        t.set_mat(e, *in_sub * next.layer_q.proj.mat(kd));
    }
    return t;
}

/* The projection Sigma^{-n} Kbar ->> rho_n Kbar, through the inverse of
 * nil_n -> Kbar (the module must be all of nil_n). */
ModuleMap layer_projection_desusp(const GModPtr& mtilde, const RhoLayer& rl,
                                  const ModuleMap& inv, int n) {
    ModuleMap q{mtilde, rl.rho, 0, {}};
    for (int d = mtilde->dmin; d <= mtilde->dmax; ++d) {
        if (mtilde->dim(d) == 0 || rl.rho->dim(d) == 0) continue;
        q.set_mat(d, inv.mat(d + n) * rl.layer_q.proj.mat(d + n));
    }
    return q;
}

}  // namespace

EModel e_model(const GModPtr& m, int n, std::optional<Window> window) {
    if (n < 1) throw std::invalid_argument("e_model: n must be >= 1");
    EModel e;
    e.n = n;
    e.m = m;
    e.qp = quadratic_parts(m);
    if (n == 1) {
        e.module = e.qp.t2;
        e.iso_t2 = identity_map(e.qp.t2);
        e.w = Window{e.module->dmin, e.module->dmax};
        return e;
    }

    e.w = window ? *window : Window{2 * m->dmin, 2 * m->dmax + n};
    e.tower = singer_tower(m, n, e.w);
    ModuleMap pi = pi_to_phi(e.tower, n);
    e.pb = pullback(e.qp.gamma2_to_phi, pi);

    ModuleMap j = singer_alpha(e.tower, n);
    if (!compose(j, pi).is_zero())
        throw std::logic_error("e_model: alpha does not land in the kernel of the truncation");
    const GModPtr jsrc = j.src;   // Sigma^{n-1} Phi M, truncated to the window
    ModuleMap gp = into_pullback(e.pb, zero_map(jsrc, e.qp.gamma2.module, 0), j);

    e.sbar = suspend(*e.qp.s2.module, n - 1);
    ModuleMap gs{jsrc, e.sbar, 0, {}};
    for (int d = jsrc->dmin; d <= jsrc->dmax; ++d) {
        if (jsrc->dim(d) == 0 || e.sbar->dim(d) == 0) continue;
        gs.set_mat(d, e.qp.phi_to_s2.mat(d - (n - 1)));
    }

    e.sum = direct_sum_with_maps(e.pb.module, e.sbar);
    e.glue = map_add(compose(gp, e.sum.in_a), compose(gs, e.sum.in_b));
    e.from_sum = cokernel(e.glue);
    e.module = e.from_sum.module;

    const GModPtr rn = e.tower.quots.at(n - 1).module;
    ModuleMap l2p = into_pullback(e.pb, e.qp.lambda2_in_gamma2,
                                  zero_map(e.qp.lambda2.module, rn, 0));
    e.incl_lambda2 = compose(compose(l2p, e.sum.in_a), e.from_sum.proj);
    e.incl_sbar = compose(e.sum.in_b, e.from_sum.proj);

    ModuleMap dg = compose(e.sum.pr_a, e.pb.to_a);
    if (!compose(e.glue, dg).is_zero())
        throw std::logic_error("e_model: Gamma^2 projection does not kill the glue");
    auto pg = left_factor(e.from_sum.proj, dg);
    if (!pg) throw std::logic_error("e_model: Gamma^2 projection failed to descend");
    e.pi_gamma = *pg;

    e.r_quot = e.tower.quots.at(n - 2).module;
    ModuleMap dr = compose(e.sum.pr_a, compose(e.pb.to_b, singer_beta(e.tower, n)));
    if (!compose(e.glue, dr).is_zero())
        throw std::logic_error("e_model: R-truncation does not kill the glue");
    auto pr = left_factor(e.from_sum.proj, dr);
    if (!pr) throw std::logic_error("e_model: R-truncation failed to descend");
    e.proj_r = *pr;

    DirectSumMaps ds2 = direct_sum_with_maps(e.qp.lambda2.module, e.sbar);
    e.ses_sub = ds2.module;
    e.ses_incl = map_add(compose(ds2.pr_a, e.incl_lambda2), compose(ds2.pr_b, e.incl_sbar));
    e.ses_exact = is_short_exact(e.ses_incl, e.proj_r, &e.ses_why);
    return e;
}

ModuleMap e_model_map(const EModel& ea, const EModel& eb, const ModuleMap& f) {
    if (ea.n != eb.n) throw std::invalid_argument("e_model_map: mismatched n");
    if (f.shift != 0) throw std::invalid_argument("e_model_map: the map must preserve degree");
    const int n = ea.n;
    if (n == 1) return tensor_map(f, f, ea.module, eb.module);

    ModuleMap t2f = tensor_map(f, f, ea.qp.t2, eb.qp.t2);
    auto g2f = factor_through_sub(compose(ea.qp.gamma2.incl, t2f), eb.qp.gamma2);
    if (!g2f) throw std::logic_error("e_model_map: Gamma^2 naturality failure");
    ModuleMap r1f = r1_functor_map(ea.tower.base, eb.tower.base, f);
    auto rqf = left_factor(ea.tower.quots.at(n - 1).proj,
                           compose(r1f, eb.tower.quots.at(n - 1).proj));
    if (!rqf) throw std::logic_error("e_model_map: R-quotient naturality failure");
    ModuleMap pf = into_pullback(eb.pb, compose(ea.pb.to_a, *g2f), compose(ea.pb.to_b, *rqf));

    auto s2f = left_factor(ea.qp.s2.proj, compose(t2f, eb.qp.s2.proj));
    if (!s2f) throw std::logic_error("e_model_map: S^2 naturality failure");
    ModuleMap sf{ea.sbar, eb.sbar, 0, {}};
    for (int d = ea.sbar->dmin; d <= ea.sbar->dmax; ++d) {
        if (ea.sbar->dim(d) == 0 || eb.sbar->dim(d) == 0) continue;
        sf.set_mat(d, s2f->mat(d - (n - 1)));
    }

    ModuleMap big = map_add(compose(ea.sum.pr_a, compose(pf, eb.sum.in_a)),
                            compose(ea.sum.pr_b, compose(sf, eb.sum.in_b)));
    auto ef = left_factor(ea.from_sum.proj, compose(big, eb.from_sum.proj));
    if (!ef) throw std::logic_error("e_model_map: map failed to descend");
    return *ef;
}

EModelOrderCheck e_model_order_check(const EModel& e) {
    if (e.n < 2) throw std::invalid_argument("e_model_order_check: needs n >= 2");
    const int n = e.n;
    ModuleMap pi = pi_to_phi(e.tower, n);
    ModuleMap j = singer_alpha(e.tower, n);
    const GModPtr jsrc = j.src;
    ModuleMap gs{jsrc, e.sbar, 0, {}};
    for (int d = jsrc->dmin; d <= jsrc->dmax; ++d) {
        if (jsrc->dim(d) == 0 || e.sbar->dim(d) == 0) continue;
        gs.set_mat(d, e.qp.phi_to_s2.mat(d - (n - 1)));
    }

    // pushout first: Q = (R_1/u^n (+) Sbar) / glue, then pull back over Phi
    const GModPtr rn = e.tower.quots.at(n - 1).module;
    Pushout q = pushout(j, gs);
    DirectSumMaps qs = direct_sum_with_maps(rn, e.sbar);
    ModuleMap qproj = retarget(q.proj, qs.module, q.module);
    auto pit = left_factor(qproj, compose(qs.pr_a, pi));
    if (!pit) throw std::logic_error("e_model_order_check: truncation failed to descend");
    Pullback pb2 = pullback(e.qp.gamma2_to_phi, *pit);

    ModuleMap la = compose(e.sum.pr_a, e.pb.to_a);
    ModuleMap lb = map_add(compose(e.sum.pr_a, compose(e.pb.to_b, q.from_a)),
                           compose(e.sum.pr_b, q.from_b));
    ModuleMap big = into_pullback(pb2, la, lb);
    if (!compose(e.glue, big).is_zero())
        throw std::logic_error("e_model_order_check: comparison does not kill the glue");
    auto cmp = left_factor(e.from_sum.proj, big);
    if (!cmp) throw std::logic_error("e_model_order_check: comparison failed to descend");

    EModelOrderCheck oc;
    oc.other = pb2.module;
    oc.comparison = *cmp;
    oc.commute = map_inverse(oc.comparison).has_value();
    return oc;
}

UnstableAlgebra algebra_from_product(const GModPtr& module, const ModuleMap& product) {
    return UnstableAlgebra{module, product.src, product};
}

UnstableAlgebra zero_product_algebra(const GModPtr& module) {
    GModPtr t2 = tensor_product(*module, *module);
    return UnstableAlgebra{module, t2, zero_map(t2, module, 0)};
}

AlgebraReport validate_algebra(const UnstableAlgebra& a) {
    AlgebraReport rep;
    auto add = [&](std::string s) {
        rep.ok = false;
        rep.problems.push_back(std::move(s));
    };
    if (!a.module || !a.t2 || !a.product.src || !a.product.dst) {
        add("missing carrier data");
        return rep;
    }
    auto vr = validate(*a.module, true);
    for (const auto& v : vr.violations) add("carrier: " + v);
    if (a.module->total_dim() > 0 && a.module->bottom_degree() < 1)
        add("augmentation ideal must vanish in degrees < 1");
    if (!modules_equal(*a.t2, *tensor_product(*a.module, *a.module)))
        add("stored tensor square does not match the carrier");
    if (a.product.shift != 0) add("product must preserve degree");
    if (!modules_equal(*a.product.src, *a.t2) || !modules_equal(*a.product.dst, *a.module))
        add("product endpoints mismatch");
    if (!rep.ok) return rep;

    std::string why;
    if (!map_is_linear(a.product, &why)) add("product violates the Cartan formula: " + why);
    if (!maps_equal(compose(tau_map(a.t2, a.module), a.product), a.product))
        add("product is not commutative");
    if (!squares_are_top(a, &why)) add(why);
    ModuleMap assoc = tensor_associator(a.module, a.module, a.module);
    ModuleMap mu21 = tensor_map(a.product, identity_map(a.module), assoc.src, a.t2);
    ModuleMap mu12 = tensor_map(identity_map(a.module), a.product, assoc.dst, a.t2);
    if (!maps_equal(compose(mu21, a.product), compose(assoc, compose(mu12, a.product))))
        add("product is not associative within the window");
    return rep;
}

AlgebraicD1 algebraic_d1(const UnstableAlgebra& alg, int n) {
    if (n < 1) throw std::invalid_argument("algebraic_d1: n must be >= 1");
    AlgebraicD1 r;
    r.n = n;
    r.alg = alg;
    const GModPtr kbar = alg.module;
    r.mtilde = desuspend_presented(kbar, n);
    r.em = e_model(r.mtilde, n);
    r.target = n == 1 ? suspend(*r.mtilde, -1) : GModPtr{};

    if (!maps_equal(compose(tau_map(alg.t2, alg.module), alg.product), alg.product)) {
        if (!r.target) r.target = suspend(*r.mtilde, -1);
        r.legs_compatible = false;
        r.why = "product is not commutative; the symmetric-square leg is not well defined";
        r.d1 = zero_map(r.em.module, r.target, 0);
        return r;
    }

    if (n == 1) {
        // E_1 = tensor square; d_1 is the desuspended product
        if (!modules_equal(*r.em.module, *suspend(*alg.t2, -2)))
            throw std::logic_error("algebraic_d1: tensor-square layout mismatch");
        ModuleMap d{r.em.module, r.target, 0, {}};
        for (int e = r.em.module->dmin; e <= r.em.module->dmax; ++e) {
            if (r.em.module->dim(e) == 0 || r.target->dim(e) == 0) continue;
            d.set_mat(e, alg.product.mat(e + 2));
        }
        r.d1 = d;
        std::string why;
        r.legs_compatible = squares_are_top(alg, &why);
        if (!r.legs_compatible) r.why = why;
        return r;
    }

    ResidueData rd = residue_differential(kbar, n, r.em.w);
    r.target = rd.target;
    ModuleMap dres = retarget(rd.d, r.em.tower.quots.at(n - 1).module, rd.target);
    r.residue = dres;
    ModuleMap legR = compose(r.em.sum.pr_a, compose(r.em.pb.to_b, dres));

    const QuadraticParts& qp = r.em.qp;
    if (!modules_equal(*qp.t2, *suspend(*alg.t2, -2 * n)))
        throw std::logic_error("algebraic_d1: tensor-square layout mismatch");
    ModuleMap legS{r.em.sbar, r.target, 0, {}};
    for (int e = r.em.sbar->dmin; e <= r.em.sbar->dmax; ++e) {
        if (r.em.sbar->dim(e) == 0) continue;
        int t = e - (n - 1);
        auto lift = solve_left(qp.s2.proj.mat(t), F2Matrix::identity(qp.s2.module->dim(t)));
        if (!lift) throw std::logic_error("algebraic_d1: symmetric projection has no section");
        legS.set_mat(e, *lift * alg.product.mat(t + 2 * n));
    }

    ModuleMap whole = map_add(legR, compose(r.em.sum.pr_b, legS));
    if (!compose(r.em.glue, whole).is_zero()) {
        r.legs_compatible = false;
        r.why = "residue and product legs disagree on the glued doubling part "
                "(squares in the algebra are not top Steenrod squares)";
        r.d1 = zero_map(r.em.module, r.target, 0);
        return r;
    }
    auto d1 = left_factor(r.em.from_sum.proj, whole);
    if (!d1) throw std::logic_error("algebraic_d1: differential failed to descend");
    r.d1 = *d1;
    r.legs_compatible = true;
    return r;
}

TwoColumnPage two_column_page(const UnstableAlgebra& alg, int n) {
    if (n < 1) throw std::invalid_argument("two_column_page: n must be >= 1");
    TwoColumnPage p;
    p.n = n;
    const GModPtr kbar = alg.module;

    p.kbar_in_nil_n = in_nil_s(kbar, n).verdict;
    p.connected_enough = kbar->total_dim() == 0 || kbar->bottom_degree() > n;
    p.d1 = algebraic_d1(alg, n);
    const EModel& em = p.d1.em;
    p.au_col1 = certify_almost_unstable(p.d1.mtilde);
    p.au_col2 = certify_almost_unstable(em.module);
    if (!p.d1.legs_compatible) {
        p.notes = p.d1.why;
        return p;
    }

    p.filt = nil_filtration(kbar, n + 2);
    p.dd = delta_n(kbar, p.filt, n);

    // E-infinity of column -1 is coker(Sigma d_1), formed at the Kbar level
    // so that it keeps a presentation.
    auto do_col1 = [&]() {
        DegreewiseSpans med = image_spans(suspend_map(p.d1.d1, 1));
        DegreewiseSpans kspans;
        for (const auto& [e, sp] : med) kspans[e + n] = sp;
        p.einf_col1_k = quotient_by(kbar, kspans);
        p.einf_col1 = desuspend_presented(p.einf_col1_k.module, n);
        GoodDecomposition gd = good_decomposition(p.einf_col1);
        p.rho0_col1 = gd.rho0;
        p.rho0_col1_matches = find_isomorphism(p.rho0_col1, p.dd.rho_n.rho).has_value();
    };
    p.einf_col2 = kernel(p.d1.d1);

    auto inv = map_inverse(p.dd.rho_n.sub.incl);
    if (!inv) {
        p.notes = "module is not all of nil_n within the window; layer comparison skipped";
        do_col1();
        return p;
    }
    p.q_layer = layer_projection_desusp(p.d1.mtilde, p.dd.rho_n, *inv, n);
    QuadraticParts qpr = quadratic_parts(p.dd.rho_n.rho);

    ModuleMap c;   // E_n ->> layer_source
    if (n == 1) {
        p.layer_source = qpr.t2;
        c = tensor_map(p.q_layer, p.q_layer, em.module, qpr.t2);
    } else {
        ModuleMap t2q = tensor_map(p.q_layer, p.q_layer, em.qp.t2, qpr.t2);
        auto g2q = factor_through_sub(compose(em.qp.gamma2.incl, t2q), qpr.gamma2);
        if (!g2q) throw std::logic_error("two_column_page: Gamma^2 naturality failure");
        p.layer_source = qpr.gamma2.module;
        c = compose(em.pi_gamma, *g2q);
    }

    std::string why;
    auto t = push_into_next_layer(p.d1.d1, p.dd.rho_n1, n, &why);
    if (!t) {
        p.notes = "d_1 image escapes nil_{n+1} at " + why;
        do_col1();
        return p;
    }
    auto L = left_factor(c, *t);
    p.layer_solved = L.has_value();
    if (p.layer_solved) {
        p.layer_map = *L;
        if (n >= 2) {
            p.factors_phi = compose(qpr.lambda2_in_gamma2, p.layer_map).is_zero();
            if (p.factors_phi) {
                auto ind = left_factor(qpr.gamma2_to_phi, p.layer_map);
                if (ind) {
                    p.induced_phi = *ind;
                    p.matches_delta = maps_equal(p.induced_phi, p.dd.delta);
                }
            }
        }
    } else {
        p.notes += "layer map did not descend along the quadratic projection; ";
    }

    if (n >= 2) {
        // the residue leg alone, pushed to the layers, against delta_n
        ModuleMap pi = pi_to_phi(em.tower, n);
        ModuleMap phiq{pi.dst, qpr.phi_m, 0, {}};
        for (int d = pi.dst->dmin; d <= pi.dst->dmax; ++d) {
            if (pi.dst->dim(d) == 0 || qpr.phi_m->dim(d) == 0) continue;
            phiq.set_mat(d, p.q_layer.mat(d / 2));
        }
        ModuleMap lhs = compose(pi, compose(phiq, p.dd.delta));
        auto tr = push_into_next_layer(p.d1.residue, p.dd.rho_n1, n, &why);
        if (tr) p.r_leg_matches_delta = maps_equal(lhs, *tr);
        else p.notes += "residue image escapes nil_{n+1} at " + why + "; ";
    }

    do_col1();
    if (p.layer_solved) {
        DegreewiseSpans im = image_spans(compose(p.einf_col2.incl, c));
        DegreewiseSpans kl = image_spans(kernel(p.layer_map).incl);
        p.rho0_col2_matches = spans_equal(im, kl);
    }
    return p;
}

SpectralData two_column_spectral_data(const TwoColumnPage& p) {
    SpectralData s;
    s.r = 1;
    s.columns[1] = p.d1.mtilde;
    s.columns[2] = p.d1.em.module;
    ModuleMap d{p.d1.em.module, p.d1.mtilde, 1, {}};
    for (const auto& [e, m] : p.d1.d1.mats) d.set_mat(e, m);
    s.differentials[2] = d;
    return s;
}

SpectralReport spectral_hypothesis_check(const SpectralData& s) {
    SpectralReport rep;
    auto add = [&](std::string msg) {
        rep.ok = false;
        rep.problems.push_back(std::move(msg));
    };
    if (s.r < 1) add("page index must be >= 1");
    for (const auto& [k, col] : s.columns) {
        if (!col) {
            add(fmt::format("column {} is null", k));
            continue;
        }
        if (k <= 0 && col->total_dim() != 0)
            add(fmt::format("nontrivial column at k = {}; the 0-column must vanish "
                            "and the page must live in the second quadrant", k));
    }
    for (const auto& [k, d] : s.differentials) {
        auto here = s.columns.find(k);
        if (here == s.columns.end() || !here->second) {
            add(fmt::format("differential out of a missing column {}", k));
            continue;
        }
        if (d.shift != 1) {
            add(fmt::format("differential out of column {} must raise total degree by 1", k));
            continue;
        }
        if (!d.src || !modules_equal(*d.src, *here->second)) {
            add(fmt::format("differential out of column {} has the wrong source", k));
            continue;
        }
        auto there = s.columns.find(k - s.r);
        if (there != s.columns.end()) {
            if (!d.dst || !modules_equal(*d.dst, *there->second))
                add(fmt::format("differential out of column {} has the wrong target", k));
        } else if (!d.is_zero()) {
            add(fmt::format("differential out of column {} lands outside the stored page", k));
        }
        std::string why;
        if (!map_is_linear(d, &why))
            add(fmt::format("differential out of column {} is not Steenrod-linear: {}", k, why));
        auto up = s.differentials.find(k + s.r);
        if (up != s.differentials.end()) {
            try {
                if (!compose(up->second, d).is_zero())
                    add(fmt::format("d o d != 0 through column {}", k));
            } catch (const std::exception& ex) {
                add(fmt::format("differentials through column {} do not compose: {}", k, ex.what()));
            }
        }
    }
    return rep;
}

SpectralReport spectral_rho0_stability(const SpectralData& s,
                                       const std::map<int, ColumnCertificate>& certs,
                                       int pages) {
    /* Only the stored page carries differentials; later pages of the data are
     * taken to have none, so the reduced quotients computed after one turn
     * persist for every remaining page in `pages`. */
    (void)pages;
    SpectralReport rep;
    auto add = [&](std::string msg) {
        rep.ok = false;
        rep.problems.push_back(std::move(msg));
    };
    for (const auto& [k, col] : s.columns) {
        if (k <= 0 || !col) continue;
        auto ct = certs.find(k);
        if (ct == certs.end()) {
            add(fmt::format("missing goodness certificate for column {}", k));
            continue;
        }
        const QuotientProjection& r0 = ct->second.rho0;
        if (!r0.proj.src || !modules_equal(*r0.proj.src, *col)) {
            add(fmt::format("certificate for column {} does not cover it", k));
            continue;
        }
        DegreewiseSpans cur = image_spans(r0.proj);
        ModuleMap out = s.differentials.count(k) ? s.differentials.at(k)
                                                 : zero_map(col, col, 0);
        DegreewiseSpans next = image_spans(compose(kernel(out).incl, r0.proj));
        if (!spans_contained(next, cur))
            add(fmt::format("rho_0 of column {} grows across the page", k));
        bool settled = s.r > k;
        if (settled && !spans_equal(next, cur))
            add(fmt::format("rho_0 of column {} still moves at page {} > {}", k, s.r, k));
        auto in = s.differentials.find(k + s.r);
        if (settled && in != s.differentials.end()) {
            if (spans_total_dim(image_spans(compose(in->second, r0.proj))) != 0)
                add(fmt::format("boundaries hit rho_0 of column {} at page {} > {}", k, s.r, k));
        }
    }
    return rep;
}

}  // namespace nilops
