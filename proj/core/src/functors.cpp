#include "nilops/functors.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace nilops {

namespace {

GModPtr with_trust(const GModPtr& m, int trust) {
    if (m->trust <= trust) return m;
    GradedModule c = *m;
    c.trust = trust;
    return mk(std::move(c));
}

}  // namespace

GModPtr phi(const GradedModule& m) {
    GradedModule out(2 * m.dmin, 2 * m.dmax + 1);
    out.complete = m.complete;
    out.trust = m.complete ? kTrustComplete
                           : static_cast<int>(std::min<long long>(2LL * m.trust + 1, kTrustComplete));
    for (int d = m.dmin; d <= m.dmax; ++d) out.set_dim(2 * d, m.dim(d));
    for (const auto& [key, mat] : m.sq_map) out.set_sq(2 * key.first, 2 * key.second, mat);
    return mk(std::move(out));
}

GModPtr phi(const GModPtr& m) { return phi(*m); }

ModuleMap phi_map(const ModuleMap& f, const GModPtr& phi_src, const GModPtr& phi_dst) {
    ModuleMap g{phi_src, phi_dst, 2 * f.shift, {}};
    for (const auto& [d, mat] : f.mats) g.set_mat(2 * d, mat);
    return g;
}

ModuleMap phi_map(const ModuleMap& f) { return phi_map(f, phi(*f.src), phi(*f.dst)); }

ModuleMap lambda_map(const GModPtr& m) {
    GModPtr pm = phi(*m);
    ModuleMap l{pm, m, 0, {}};
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0) continue;
        int e = 2 * d;
        if (e < m->dmin || e > m->dmax) continue;
        if (d == 0) {
            l.set_mat(0, F2Matrix::identity(m->dim(0)));
        } else if (d > 0) {
            if (m->dim(e) > 0) l.set_mat(e, m->sq(d, d));
        }
        // d < 0: Sq^{|x|} vanishes, lambda is zero there
    }
    return l;
}

/* ---------------- quadratic functors ---------------- */

ModuleMap tau_map(const GModPtr& t2, const GModPtr& m) {
    ModuleMap t{t2, t2, 0, {}};
    for (int d = t2->dmin; d <= t2->dmax; ++d) {
        int n = t2->dim(d);
        if (n == 0) continue;
        auto blocks = tensor_blocks(*m, *m, d);
        std::map<int, int> offset_of;
        for (const auto& b : blocks) offset_of[b.p] = b.offset;
        F2Matrix mat(n, n);
        for (const auto& b : blocks) {
            int target = offset_of.at(b.q);
            for (int i = 0; i < b.dim_a; ++i)
                for (int j = 0; j < b.dim_b; ++j)
                    mat.set(b.offset + i * b.dim_b + j, target + j * b.dim_a + i, true);
        }
        t.set_mat(d, mat);
    }
    return t;
}

QuadraticParts quadratic_parts(const GModPtr& m) {
    QuadraticParts qp;
    qp.t2 = tensor_product(*m, *m);
    qp.tau = tau_map(qp.t2, m);
    ModuleMap one_plus_tau = map_add(identity_map(qp.t2), qp.tau);
    qp.gamma2 = kernel(one_plus_tau);
    qp.lambda2 = image(one_plus_tau);
    qp.s2 = cokernel(one_plus_tau);
    qp.phi_m = phi(*m);

    // Lambda^2 -> Gamma^2: (1+tau)^2 = 0, so the image lies in the kernel.
    qp.lambda2_in_gamma2 = ModuleMap{qp.lambda2.module, qp.gamma2.module, 0, {}};
    for (int d = qp.t2->dmin; d <= qp.t2->dmax; ++d) {
        if (qp.lambda2.module->dim(d) == 0) continue;
        auto x = solve_left(qp.gamma2.incl.mat(d), qp.lambda2.incl.mat(d));
        if (!x) throw std::logic_error("quadratic_parts: image escapes kernel");
        qp.lambda2_in_gamma2.set_mat(d, *x);
    }

    // Phi M -> S^2: Phi e_i -> class of e_i tensor e_i.
    qp.phi_to_s2 = ModuleMap{qp.phi_m, qp.s2.module, 0, {}};
    auto diagonal_rows = [&](int d) {
        // rows: e_i tensor e_i for the basis of M^d, in T^2 coordinates at 2d
        int md = m->dim(d);
        F2Matrix e(md, qp.t2->dim(2 * d));
        auto blocks = tensor_blocks(*m, *m, 2 * d);
        for (const auto& b : blocks)
            if (b.p == d)
                for (int i = 0; i < md; ++i) e.set(i, b.offset + i * b.dim_b + i, true);
        return e;
    };
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0) continue;
        int e = 2 * d;
        if (e > qp.t2->dmax || qp.s2.module->dim(e) == 0) continue;
        qp.phi_to_s2.set_mat(e, diagonal_rows(d) * qp.s2.proj.mat(e));
    }

    // S^2 -> Lambda^2: [t] -> (1+tau) t.
    qp.s2_to_lambda2 = ModuleMap{qp.s2.module, qp.lambda2.module, 0, {}};
    for (int d = qp.t2->dmin; d <= qp.t2->dmax; ++d) {
        int sd = qp.s2.module->dim(d);
        if (sd == 0 || qp.lambda2.module->dim(d) == 0) continue;
        auto lift = solve_left(qp.s2.proj.mat(d), F2Matrix::identity(sd));
        if (!lift) throw std::logic_error("quadratic_parts: projection has no section");
        F2Matrix in_t2 = *lift * one_plus_tau.mat(d);
        auto x = solve_left(qp.lambda2.incl.mat(d), in_t2);
        if (!x) throw std::logic_error("quadratic_parts: (1+tau) image escapes Lambda^2");
        qp.s2_to_lambda2.set_mat(d, *x);
    }

    // Gamma^2 -> Phi M: quotient by Lambda^2, identified via e_i tensor e_i.
    auto cok = cokernel(qp.lambda2_in_gamma2);
    ModuleMap iso{qp.phi_m, cok.module, 0, {}};
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0) continue;
        int e = 2 * d;
        if (e > qp.t2->dmax || cok.module->dim(e) == 0) continue;
        auto in_gamma = solve_left(qp.gamma2.incl.mat(e), diagonal_rows(d));
        if (!in_gamma) throw std::logic_error("quadratic_parts: diagonal not tau-fixed");
        iso.set_mat(e, *in_gamma * cok.proj.mat(e));
    }
    auto inv = map_inverse(iso);
    if (!inv) throw std::logic_error("quadratic_parts: Gamma^2/Lambda^2 is not Phi");
    qp.gamma2_to_phi = compose(cok.proj, *inv);
    return qp;
}

/* ---------------- loop functors ---------------- */

LoopsData loops(const GModPtr& m) {
    if (!is_unstable(*m)) throw std::invalid_argument("loops: module is not unstable");
    LoopsData ld;
    ld.lambda = lambda_map(m);
    ld.phi_m = ld.lambda.src;
    ld.coker = cokernel(ld.lambda);
    ld.ker = kernel(ld.lambda);
    // lambda consults action targets at full degree, so results are only
    // trusted up to the input trust
    ld.coker.module = with_trust(ld.coker.module, m->trust);
    ld.ker.module = with_trust(ld.ker.module, m->trust);
    ld.coker.proj.dst = ld.coker.module;
    ld.ker.incl.src = ld.ker.module;
    ld.omega = desuspend_presented(ld.coker.module, 1);
    ld.omega1 = desuspend_presented(ld.ker.module, 1);
    return ld;
}

GModPtr omega(const GModPtr& m) { return loops(m).omega; }
GModPtr omega1(const GModPtr& m) { return loops(m).omega1; }

GModPtr omega_iter(const GModPtr& m, int n) {
    GModPtr cur = m;
    for (int k = 0; k < n; ++k) cur = omega(cur);
    return cur;
}

GModPtr omega1_iter_split(const GModPtr& m, int n) {
    if (n <= 0) throw std::invalid_argument("omega1_iter_split: n must be positive");
    if (n == 1) return omega1(m);
    GModPtr a = omega(omega1_iter_split(m, n - 1));
    GModPtr b = omega1(omega_iter(m, n - 1));
    return direct_sum(*a, *b);
}

ModuleMap omega_map(const ModuleMap& f) {
    if (f.shift != 0) throw std::invalid_argument("omega_map: shift must be zero");
    LoopsData lm = loops(f.src);
    LoopsData ln = loops(f.dst);
    // induced map on coker(lambda), then desuspend
    ModuleMap g{lm.omega, ln.omega, 0, {}};
    for (int d = lm.coker.module->dmin; d <= lm.coker.module->dmax; ++d) {
        int cd = lm.coker.module->dim(d);
        if (cd == 0 || ln.coker.module->dim(d) == 0) continue;
        auto lift = solve_left(lm.coker.proj.mat(d), F2Matrix::identity(cd));
        if (!lift) throw std::logic_error("omega_map: projection has no section");
        g.set_mat(d - 1, *lift * f.mat(d) * ln.coker.proj.mat(d));
    }
    // well-definedness: f maps im(lambda_M) into im(lambda_N)
    ModuleMap check = compose(lm.lambda, f);
    for (int d = check.src->dmin; d <= check.src->dmax; ++d) {
        if (check.src->dim(d) == 0) continue;
        F2Matrix img = check.mat(d) * ln.coker.proj.mat(d + f.shift);
        if (!img.is_zero()) throw std::logic_error("omega_map: map does not respect lambda images");
    }
    return g;
}

/* ---------------- destabilization ---------------- */

Destabilization destabilize(const GModPtr& m) {
    if (!m->presentation) {
        if (is_unstable(*m)) return {m, identity_map(m)};
        throw std::invalid_argument("destabilize: module has no suspension presentation");
    }
    int t = m->presentation->t;
    GModPtr cur = m->presentation->inner;
    ModuleMap unit_up = identity_map(cur);   // N -> Sigma^k Omega^k N, shift 0
    for (int k = 0; k < t; ++k) {
        LoopsData ld = loops(cur);
        unit_up = compose(unit_up, ld.coker.proj);
        cur = ld.coker.module;
    }
    GModPtr dest = suspend(*cur, -t);
    ModuleMap unit{m, dest, 0, {}};
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0 || dest->dim(d) == 0) continue;
        if (d + t < unit_up.src->dmin || d + t > unit_up.src->dmax) continue;
        unit.set_mat(d, unit_up.mat(d + t));
    }
    return {dest, unit};
}

}  // namespace nilops
