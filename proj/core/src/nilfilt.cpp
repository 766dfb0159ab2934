#include "nilops/nilfilt.hpp"

#include <fmt/format.h>

#include <set>
#include <stdexcept>

namespace nilops {

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        default: return "inconclusive";
    }
}

namespace {

/* Trust horizon of a socle answer on a windowed module.  A degree is unforced
 * when the sigma_s conditions there reach past the reliable range (targets up
 * to 2d, against w = min(trust, dmax)), when it is listed as suspicious by the
 * caller, or when a visible action chain leads from it into an unforced
 * degree, so that data beyond the window could evict it and cascade downward.
 * Everything at or below the returned degree is forced by the window alone. */
int socle_trust(const GradedModule& m, const DegreewiseSpans& spans, int s,
                const std::set<int>& suspicious) {
    int w = std::min(m.trust, m.dmax);
    int cap = m.trust < m.dmax ? w / 2 : w;
    std::set<int> bad(suspicious);
    if (s >= 1)
        for (const auto& [d, rows] : spans)
            if (2LL * d > w) bad.insert(d);
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [d, rows] : spans) {
            if (bad.count(d)) continue;
            for (int i = 1; d + i <= m.dmax; ++i) {
                if (!bad.count(d + i) || m.dim(d + i) == 0) continue;
                if ((rows * m.sq(i, d)).is_zero()) continue;
                bad.insert(d);
                grew = true;
                break;
            }
        }
    }
    int t = cap;
    for (int b : bad) t = std::min(t, b - 1);
    return t;
}

}  // namespace

SocleResult sigma_socle(const GradedModule& m, int s) {
    SocleResult out;
    DegreewiseSpans cur;
    for (int d = m.dmin; d <= m.dmax; ++d) {
        int n = m.dim(d);
        if (n == 0) continue;
        if (d < s) continue;   // an s-fold suspension vanishes below degree s
        F2Matrix space = F2Matrix::identity(n);
        for (int i = std::max(1, d - s + 1); d + i <= m.dmax; ++i) {
            if (m.dim(d + i) == 0) continue;
            space = intersect_row_spaces(space, left_kernel(m.sq(i, d)));
            if (space.rows() == 0) break;
        }
        if (space.rows() > 0) cur[d] = space;
    }
    // shrink to the largest action-stable family inside the candidate
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = cur.begin(); it != cur.end();) {
            int d = it->first;
            F2Matrix space = it->second;
            for (int i = 1; d + i <= m.dmax && space.rows() > 0; ++i) {
                if (m.dim(d + i) == 0) continue;
                F2Matrix a = m.sq(i, d);
                if (a.is_zero()) continue;
                auto jt = cur.find(d + i);
                F2Matrix tgt = (jt == cur.end()) ? F2Matrix(0, m.dim(d + i)) : jt->second;
                if (rows_contained(space * a, tgt)) continue;
                // keep x with x.a inside tgt
                QuotientSpace q = quotient_space(tgt, m.dim(d + i));
                F2Matrix shrunk = left_kernel(space * (a * q.proj));
                space = row_space(shrunk * space);
                changed = true;
            }
            if (space.rows() == 0) {
                it = cur.erase(it);
            } else {
                it->second = space;
                ++it;
            }
        }
    }
    out.spans = cur;
    out.trust = m.complete ? kTrustComplete : socle_trust(m, cur, s, {});
    return out;
}

namespace {

bool spans_cover(const GradedModule& m, const DegreewiseSpans& s) {
    for (int d = m.dmin; d <= m.dmax; ++d) {
        int n = m.dim(d);
        if (n == 0) continue;
        auto it = s.find(d);
        if (it == s.end() || rank(it->second) != n) return false;
    }
    return true;
}

}  // namespace

NilCertificate in_nil_s(const GModPtr& m, int s) {
    NilCertificate cert;
    cert.trust = m->complete ? kTrustComplete : std::min(m->trust, m->dmax);
    DegreewiseSpans cur;   // N_0 = 0
    while (true) {
        auto quot = quotient_by(m, cur);
        SocleResult soc = sigma_socle(*quot.module, s);
        DegreewiseSpans next = soc.spans.empty() ? cur : preimage_spans(quot.proj, soc.spans);
        if (soc.spans.empty() || spans_equal(next, cur)) break;
        if (!m->complete) {
            // admissions that rely on quotienting out unforced earlier content
            // are unforced themselves
            std::set<int> susp;
            for (const auto& [e, sp] : cur)
                if (e > cert.trust && sp.rows() > 0) susp.insert(e);
            cert.trust = std::min(cert.trust, socle_trust(*m, next, s, susp));
        }
        cur = next;
        cert.tower.push_back(cur);
        if (spans_cover(*m, cur)) break;
    }
    if (spans_cover(*m, cur)) {
        cert.verdict = Verdict::Yes;
    } else if (m->complete) {
        cert.verdict = Verdict::No;
    } else {
        cert.verdict = Verdict::Inconclusive;
    }
    return cert;
}

NilFiltration nil_filtration(const GModPtr& m, int smax) {
    NilFiltration f;
    f.smax = smax;
    f.trust = m->complete ? kTrustComplete : std::min(m->trust, m->dmax);
    f.level_trust.push_back(f.trust);
    DegreewiseSpans full;
    for (int d = m->dmin; d <= m->dmax; ++d)
        if (m->dim(d) > 0) full[d] = F2Matrix::identity(m->dim(d));
    f.nil.push_back(full);   // nil_0 = M
    for (int s = 1; s <= smax; ++s) {
        NilCertificate c = in_nil_s(m, s);
        f.nil.push_back(c.tower.empty() ? DegreewiseSpans{} : c.tower.back());
        f.level_trust.push_back(c.trust);
        f.trust = std::min(f.trust, c.trust);
    }
    return f;
}

DegreewiseSpans trusted_part(const GModPtr& m, const NilFiltration& filt, int level) {
    if (level < 0 || level >= static_cast<int>(filt.nil.size()))
        throw std::invalid_argument("trusted_part: level out of range");
    int t = level < static_cast<int>(filt.level_trust.size()) ? filt.level_trust[level]
                                                              : kTrustComplete;
    if (m->complete || t >= kTrustComplete) return filt.nil[level];
    DegreewiseSpans seed;
    for (const auto& [d, rows] : filt.nil[level])
        if (d <= t && rows.rows() > 0) seed[d] = rows;
    return close_under_action(*m, seed);
}

bool is_reduced(const GModPtr& m) {
    SocleResult s = sigma_socle(*m, 1);
    for (const auto& [d, rows] : s.spans)
        if (d <= s.trust && rank(rows) > 0) return false;
    return true;
}

RhoLayer rho_layer(const GModPtr& m, const NilFiltration& filt, int s) {
    if (s + 1 >= static_cast<int>(filt.nil.size()))
        throw std::invalid_argument("rho_layer: filtration too shallow");
    RhoLayer out;
    out.s = s;
    out.sub = submodule(m, filt.nil[s]);
    if (s + 1 < static_cast<int>(filt.level_trust.size()))
        out.trust = std::min(filt.level_trust[s], filt.level_trust[s + 1]);
    // express the certified part of nil_{s+1} inside nil_s coordinates
    DegreewiseSpans inner;
    for (const auto& [d, rows] : trusted_part(m, filt, s + 1)) {
        auto x = solve_left(out.sub.incl.mat(d), rows);
        if (!x) throw std::logic_error("rho_layer: filtration is not nested");
        if (x->rows() > 0) inner[d] = *x;
    }
    out.layer_q = quotient_by(out.sub.module, inner);
    out.layer = out.layer_q.module;
    out.rho = suspend(*out.layer, -s);
    return out;
}

DeltaData delta_n(const GModPtr& m, const NilFiltration& filt, int n) {
    if (n + 2 >= static_cast<int>(filt.nil.size()))
        throw std::invalid_argument("delta_n: filtration must reach nil_{n+2}");
    DeltaData dd;
    dd.n = n;
    dd.rho_n = rho_layer(m, filt, n);
    dd.rho_n1 = rho_layer(m, filt, n + 1);
    dd.trust = std::min(dd.rho_n.trust, dd.rho_n1.trust);
    GModPtr src = phi(*dd.rho_n.rho);
    dd.delta = ModuleMap{src, dd.rho_n1.rho, 0, {}};
    auto span_at = [&](const DegreewiseSpans& s, int d) {
        auto it = s.find(d);
        if (it != s.end()) return it->second;
        return F2Matrix(0, m->dim(d));
    };
    for (int e = dd.rho_n.rho->dmin; e <= dd.rho_n.rho->dmax; ++e) {
        int nd = dd.rho_n.rho->dim(e);
        if (nd == 0) continue;
        int mdeg = e + n;             // degree inside M
        int k = mdeg + 1 - n;         // the operation applied to representatives
        int tgt = 2 * mdeg + 1 - n;   // its target degree inside M
        if (k < 1 || tgt > m->dmax) continue;
        int rho_deg = 2 * e;          // = tgt - (n+1) in rho_{n+1}
        if (dd.rho_n1.rho->dim(rho_deg) == 0) continue;
        // representatives: layer basis -> nil_n coords -> M coords
        auto lift = solve_left(dd.rho_n.layer_q.proj.mat(mdeg), F2Matrix::identity(nd));
        if (!lift) throw std::logic_error("delta_n: layer projection has no section");
        F2Matrix reps = *lift * dd.rho_n.sub.incl.mat(mdeg);
        F2Matrix img = reps * m->sq(k, mdeg);
        // image must land in nil_{n+1}
        auto in_next = solve_left(span_at(filt.nil[n + 1], tgt), img);
        if (!in_next) throw std::logic_error("delta_n: image escapes nil_{n+1}");
        // soundness: nil_{n+1} representatives must land in nil_{n+2}
        F2Matrix amb = span_at(filt.nil[n + 1], mdeg) * m->sq(k, mdeg);
        if (!rows_contained(amb, span_at(filt.nil[n + 2], tgt)))
            throw std::logic_error("delta_n: not well defined on representatives");
        // express in the canonical nil_{n+1} basis, then project to the layer
        auto in_sub = solve_left(dd.rho_n1.sub.incl.mat(tgt), img);
        if (!in_sub) throw std::logic_error("delta_n: image escapes nil_{n+1} basis");
        dd.delta.set_mat(rho_deg, *in_sub * dd.rho_n1.layer_q.proj.mat(tgt));
    }
    return dd;
}

DeltaData delta_n(const GModPtr& m, int n) {
    return delta_n(m, nil_filtration(m, n + 2), n);
}

LesOmegaN les_omegan(const GModPtr& m, int n) {
    NilFiltration filt = nil_filtration(m, n + 2);
    if (!spans_cover(*m, filt.nil[n]))
        throw std::invalid_argument("les_omegan: module is not in Nil_n");
    LesOmegaN out;
    out.dd = delta_n(m, filt, n);
    auto mbar_q = quotient_by(m, trusted_part(m, filt, n + 2));
    out.mbar = mbar_q.module;

    // Sigma^{n+1} rho_{n+1} -> mbar: lift a layer class, include, project.
    const RhoLayer& r1 = out.dd.rho_n1;
    ModuleMap incl_l{r1.layer, out.mbar, 0, {}};
    for (int d = r1.layer->dmin; d <= r1.layer->dmax; ++d) {
        int nd = r1.layer->dim(d);
        if (nd == 0 || out.mbar->dim(d) == 0) continue;
        auto lift = solve_left(r1.layer_q.proj.mat(d), F2Matrix::identity(nd));
        if (!lift) throw std::logic_error("les_omegan: layer projection has no section");
        incl_l.set_mat(d, *lift * r1.sub.incl.mat(d) * mbar_q.proj.mat(d));
    }

    // mbar -> Sigma^n rho_n: lift to M, project through the top layer.
    const RhoLayer& r0 = out.dd.rho_n;
    ModuleMap p_l{out.mbar, r0.layer, 0, {}};
    for (int d = out.mbar->dmin; d <= out.mbar->dmax; ++d) {
        int nd = out.mbar->dim(d);
        if (nd == 0 || r0.layer->dim(d) == 0) continue;
        auto lift = solve_left(mbar_q.proj.mat(d), F2Matrix::identity(nd));
        if (!lift) throw std::logic_error("les_omegan: quotient has no section");
        auto in_sub = solve_left(r0.sub.incl.mat(d), *lift);
        if (!in_sub) throw std::logic_error("les_omegan: module is not nil_n");
        p_l.set_mat(d, *in_sub * r0.layer_q.proj.mat(d));
    }

    ModuleMap g = incl_l, h = p_l;
    for (int k = 0; k < n; ++k) {
        g = omega_map(g);
        h = omega_map(h);
    }
    out.g = g;
    out.h = h;
    out.sigma_delta = suspend_map(out.dd.delta, 1);

    // exact at Sigma rho_{n+1}: ker(g) = im(Sigma delta)
    out.exact_at_b = true;
    for (int d = g.src->dmin; d <= g.src->dmax; ++d) {
        if (g.src->dim(d) == 0) continue;
        F2Matrix ker = row_space(left_kernel(g.mat(d)));
        F2Matrix im = (d >= out.sigma_delta.src->dmin && d <= out.sigma_delta.src->dmax)
                          ? row_space(out.sigma_delta.mat(d))
                          : F2Matrix(0, g.src->dim(d));
        if (ker != im) out.exact_at_b = false;
    }
    // exact at Omega^n mbar: ker(h) = im(g)
    out.exact_at_c = true;
    for (int d = h.src->dmin; d <= h.src->dmax; ++d) {
        if (h.src->dim(d) == 0) continue;
        F2Matrix ker = row_space(left_kernel(h.mat(d)));
        F2Matrix im = (d >= g.src->dmin && d <= g.src->dmax) ? row_space(g.mat(d))
                                                             : F2Matrix(0, h.src->dim(d));
        if (ker != im) out.exact_at_c = false;
    }
    // exact at rho_n: h surjective
    out.exact_at_d = true;
    for (int d = h.dst->dmin; d <= h.dst->dmax; ++d) {
        if (h.dst->dim(d) == 0) continue;
        if (d < h.src->dmin || d > h.src->dmax || rank(h.mat(d)) != h.dst->dim(d))
            out.exact_at_d = false;
    }
    return out;
}

/* ---------------- almost-unstable certification ---------------- */

namespace {

GModPtr layer_module(const GModPtr& m, const DegreewiseSpans& lower,
                     const DegreewiseSpans& upper) {
    auto sub = submodule(m, upper);
    DegreewiseSpans inner;
    for (const auto& [d, rows] : lower) {
        auto x = solve_left(sub.incl.mat(d), rows);
        if (!x) throw std::invalid_argument("witness filtration is not nested");
        if (x->rows() > 0) inner[d] = *x;
    }
    return quotient_by(sub.module, inner).module;
}

}  // namespace

AUVerdict certify_almost_unstable(const GModPtr& m, const std::vector<AUWitnessLayer>* witness,
                                  int t_cap) {
    AUVerdict v;
    for (int d = m->dmin; d < 0 && d <= m->dmax; ++d) {
        if (m->dim(d) != 0) {
            v.state = Verdict::No;
            v.reason = fmt::format(
                "class in degree {}: almost unstable modules vanish below degree 0", d);
            return v;
        }
    }
    if (witness) {
        DegreewiseSpans prev;
        bool ok = true;
        std::string why;
        for (size_t i = 0; i < witness->size() && ok; ++i) {
            const auto& layer = (*witness)[i];
            if (!spans_action_closed(*m, layer.step)) {
                ok = false;
                why = fmt::format("witness step {} is not a submodule", i + 1);
                break;
            }
            if (!spans_contained(prev, layer.step)) {
                ok = false;
                why = fmt::format("witness step {} does not contain step {}", i + 1, i);
                break;
            }
            GModPtr lay = layer_module(m, prev, layer.step);
            GModPtr test = suspend(*lay, layer.t);
            if (!is_unstable(*test)) {
                ok = false;
                why = fmt::format("witness layer {} is not unstable after {} suspensions", i + 1,
                                  layer.t);
                break;
            }
            NilCertificate c = in_nil_s(test, layer.t);
            if (c.verdict != Verdict::Yes) {
                ok = false;
                why = fmt::format("witness layer {} suspension not certified in Nil_{}", i + 1,
                                  layer.t);
                break;
            }
            prev = layer.step;
        }
        if (ok && !spans_cover(*m, witness->empty() ? DegreewiseSpans{} : witness->back().step)) {
            ok = false;
            why = "witness filtration does not exhaust the module";
        }
        if (ok) {
            v.state = Verdict::Yes;
            v.reason = "witness filtration verified";
            v.witness = *witness;
            return v;
        }
        v.state = Verdict::Inconclusive;
        v.reason = why;
        // fall through to the automatic strategies
    }
    if (m->complete && m->bottom_degree() >= 0) {
        // top-down degree filtration: single-degree layers are unstable
        v.state = Verdict::Yes;
        v.reason = "complete module concentrated in nonnegative degrees";
        DegreewiseSpans acc;
        for (int d = m->dmax; d >= m->dmin; --d) {
            if (m->dim(d) == 0) continue;
            acc[d] = F2Matrix::identity(m->dim(d));
            v.witness.push_back({0, acc});
        }
        return v;
    }
    // greedy peel: find the smallest tag t whose suspension-socle tower is
    // nonzero, peel it, continue on the quotient
    GModPtr cur = m;
    DegreewiseSpans acc;   // accumulated filtration in m coordinates
    QuotientProjection to_cur{cur, identity_map(cur)};
    std::vector<AUWitnessLayer> built;
    while (cur->total_dim() > 0) {
        bool peeled = false;
        for (int t = 0; t <= t_cap && !peeled; ++t) {
            NilCertificate c = in_nil_s(cur, -t);
            if (c.tower.empty()) continue;
            DegreewiseSpans socle = c.tower.back();
            if (spans_total_dim(socle) == 0) continue;
            DegreewiseSpans in_m = preimage_spans(to_cur.proj, socle);
            acc = spans_sum(acc, in_m, *m);
            built.push_back({t, acc});
            auto q = quotient_by(m, acc);
            cur = q.module;
            to_cur = q;
            peeled = true;
        }
        if (!peeled) {
            v.state = Verdict::Inconclusive;
            v.reason = fmt::format("greedy peel stalled with {} classes left (tag cap {})",
                                   cur->total_dim(), t_cap);
            return v;
        }
    }
    v.state = Verdict::Yes;
    v.reason = m->complete ? "greedy suspension-socle filtration exhausts the module"
                           : "greedy suspension-socle filtration exhausts the window";
    v.witness = built;
    return v;
}

GoodDecomposition good_decomposition(const GModPtr& m) {
    Destabilization ds = destabilize(m);
    NilFiltration filt = nil_filtration(ds.module, 1);
    auto q = quotient_by(ds.module, trusted_part(ds.module, filt, 1));
    GoodDecomposition out;
    out.rho0 = q.module;
    out.unit = compose(ds.unit, q.proj);
    out.mprime = kernel(out.unit);
    out.nil1_cert = in_nil_s(suspend(*out.mprime.module, 1), 1);
    return out;
}

}  // namespace nilops
