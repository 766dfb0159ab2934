#include "nilops/singer.hpp"

#include <fmt/format.h>

#include <stdexcept>

#include "nilops/functors.hpp"

namespace nilops {

namespace {

int laurent_floor(const GradedModule& m) {
    int f = 0;
    int bot = m.bottom_degree();
    if (bot <= m.dmax) f = std::min(f, bot);
    for (const auto& [key, mat] : m.sq_map) {
        auto [i, d] = key;
        if (!mat.is_zero()) f = std::min(f, d - i);
    }
    return f;
}

}  // namespace

std::vector<AmbientBlock> ambient_blocks(const R1Data& r, int degree) {
    std::vector<AmbientBlock> blocks;
    int off = 0;
    const GradedModule& m = *r.m;
    for (int a = std::max(r.floor, degree - m.dmax); a <= degree - m.dmin; ++a) {
        int d = degree - a;
        int n = m.dim(d);
        if (n > 0) {
            blocks.push_back({a, d, off, n});
            off += n;
        }
    }
    return blocks;
}

R1Data r1_module(const GModPtr& m, Window w) {
    R1Data r;
    r.m = m;
    r.floor = laurent_floor(*m);
    GradedModule amb(w.lo, w.hi);
    amb.complete = false;
    amb.trust = m->complete ? w.hi : std::min(m->trust, w.hi);
    auto blocks_at = [&](int e) {
        std::vector<AmbientBlock> blocks;
        int off = 0;
        for (int a = std::max(r.floor, e - m->dmax); a <= e - m->dmin; ++a) {
            int d = e - a;
            int n = m->dim(d);
            if (n > 0) {
                blocks.push_back({a, d, off, n});
                off += n;
            }
        }
        return blocks;
    };
    for (int e = w.lo; e <= w.hi; ++e) {
        int total = 0;
        for (const auto& b : blocks_at(e)) total += b.dim;
        amb.set_dim(e, total);
    }
    // Sq^k (u^a tensor x) = sum_j binom(a,j) u^{a+j} tensor Sq^{k-j} x
    for (int e = w.lo; e <= w.hi; ++e) {
        if (amb.dim(e) == 0) continue;
        auto src = blocks_at(e);
        for (int k = 1; e + k <= w.hi; ++k) {
            if (amb.dim(e + k) == 0) continue;
            auto dst = blocks_at(e + k);
            std::map<int, AmbientBlock> dst_of;
            for (const auto& b : dst) dst_of[b.a] = b;
            F2Matrix mat(amb.dim(e), amb.dim(e + k));
            for (const auto& b : src) {
                for (int j = 0; j <= k; ++j) {
                    if (!binom2(b.a, j)) continue;
                    auto it = dst_of.find(b.a + j);
                    if (it == dst_of.end()) continue;
                    const AmbientBlock& t = it->second;
                    F2Matrix part = (k - j == 0) ? F2Matrix::identity(b.dim)
                                                 : r.m->sq(k - j, b.d);
                    for (int rr = 0; rr < part.rows(); ++rr)
                        for (int cc = 0; cc < part.cols(); ++cc)
                            if (part.get(rr, cc)) mat.flip(b.offset + rr, t.offset + cc);
                }
            }
            amb.set_sq(k, e, mat);
        }
    }
    r.ambient = mk(std::move(amb));
    DegreewiseSpans spans;
    for (int e = w.lo; e <= w.hi; ++e) {
        if (r.ambient->dim(e) == 0) continue;
        F2Matrix acc(0, r.ambient->dim(e));
        for (int d = m->dmin; 2 * d <= e; ++d) {
            int a = e - 2 * d;
            if (a < 0 || m->dim(d) == 0) continue;
            acc = F2Matrix::vstack(acc, u_st1_rows(r, a, d));
        }
        acc = row_space(acc);
        if (acc.rows() > 0) spans[e] = acc;
    }
    r.r1 = submodule(r.ambient, spans);
    return r;
}

F2Matrix u_st1_rows(const R1Data& r, int a, int d) {
    const GradedModule& m = *r.m;
    int e = a + 2 * d;
    F2Matrix rows(m.dim(d), r.ambient->dim(e));
    if (rows.rows() == 0 || rows.cols() == 0) return rows;
    auto blocks = ambient_blocks(r, e);
    std::map<int, AmbientBlock> by_a;
    for (const auto& b : blocks) by_a[b.a] = b;
    // i = 0 term: u^{a+d} tensor x
    if (auto it = by_a.find(a + d); it != by_a.end())
        for (int j = 0; j < m.dim(d); ++j) rows.set(j, it->second.offset + j, true);
    for (int i = 1; d + i <= m.dmax; ++i) {
        if (m.dim(d + i) == 0) continue;
        auto it = by_a.find(a + d - i);
        if (it == by_a.end()) continue;
        F2Matrix part = m.sq(i, d);
        for (int rr = 0; rr < part.rows(); ++rr)
            for (int cc = 0; cc < part.cols(); ++cc)
                if (part.get(rr, cc)) rows.flip(rr, it->second.offset + cc);
    }
    return rows;
}

F2Matrix u_st1_rows_in_r1(const R1Data& r, int a, int d) {
    int e = a + 2 * d;
    F2Matrix amb = u_st1_rows(r, a, d);
    auto x = solve_left(r.r1.incl.mat(e), amb);
    if (!x) throw std::logic_error("u_st1_rows_in_r1: row escapes R_1");
    return *x;
}

DegreewiseSpans u_power_r1_spans(const R1Data& r, int k) {
    DegreewiseSpans spans;
    const GradedModule& m = *r.m;
    for (int e = r.ambient->dmin; e <= r.ambient->dmax; ++e) {
        int n = r.r1.module->dim(e);
        if (n == 0) continue;
        F2Matrix acc(0, n);
        for (int d = m.dmin; 2 * d + k <= e; ++d) {
            int a = e - 2 * d;
            if (m.dim(d) == 0) continue;   // a >= k by the loop bound
            acc = F2Matrix::vstack(acc, u_st1_rows_in_r1(r, a, d));
        }
        acc = row_space(acc);
        if (acc.rows() > 0) spans[e] = acc;
    }
    return spans;
}

SingerTower singer_tower(const GModPtr& m, int nmax, Window w) {
    SingerTower t;
    t.base = r1_module(m, w);
    for (int k = 1; k <= nmax; ++k) {
        auto q = quotient_by(t.base.r1.module, u_power_r1_spans(t.base, k));
        /* R_1/u^k is spanned by u^a St_1 x, a < k, hence supported in
         * [2 dmin, 2 dmax + k - 1]; when the window holds all of that the
         * truncated computation is the whole module. */
        if (m->complete && w.hi >= 2 * m->dmax + k - 1 && w.lo <= 2 * m->dmin) {
            GradedModule c = *q.module;
            c.complete = true;
            c.trust = kTrustComplete;
            q.module = mk(std::move(c));
            q.proj.dst = q.module;
        }
        t.quots.push_back(std::move(q));
    }
    return t;
}

ModuleMap singer_alpha(const SingerTower& t, int n) {
    const auto& q = t.quots.at(n - 1);
    GModPtr src = truncate_module(*suspend(*phi(*t.base.m), n - 1),
                                  Window{q.module->dmin, q.module->dmax});
    ModuleMap a{src, q.module, 0, {}};
    for (int d = t.base.m->dmin; d <= t.base.m->dmax; ++d) {
        int e = 2 * d + n - 1;
        if (t.base.m->dim(d) == 0) continue;
        if (e < src->dmin || e > src->dmax || q.module->dim(e) == 0) continue;
        a.set_mat(e, u_st1_rows_in_r1(t.base, n - 1, d) * q.proj.mat(e));
    }
    return a;
}

ModuleMap singer_beta(const SingerTower& t, int n) {
    const auto& qn = t.quots.at(n - 1);
    const auto& qm = t.quots.at(n - 2);
    ModuleMap b{qn.module, qm.module, 0, {}};
    for (int e = qn.module->dmin; e <= qn.module->dmax; ++e) {
        int src_d = qn.module->dim(e);
        if (src_d == 0 || qm.module->dim(e) == 0) continue;
        auto lift = solve_left(qn.proj.mat(e), F2Matrix::identity(src_d));
        if (!lift) throw std::logic_error("singer_beta: projection has no section");
        b.set_mat(e, *lift * qm.proj.mat(e));
    }
    return b;
}

ModuleMap phi_from_r1_mod_u(const SingerTower& t) {
    const auto& q = t.quots.at(0);
    GModPtr phiw = truncate_module(*phi(*t.base.m), Window{q.module->dmin, q.module->dmax});
    ModuleMap iso{phiw, q.module, 0, {}};
    for (int d = t.base.m->dmin; d <= t.base.m->dmax; ++d) {
        int e = 2 * d;
        if (t.base.m->dim(d) == 0 || e < phiw->dmin || e > phiw->dmax) continue;
        if (q.module->dim(e) == 0) continue;
        iso.set_mat(e, u_st1_rows_in_r1(t.base, 0, d) * q.proj.mat(e));
    }
    auto inv = map_inverse(iso);
    if (!inv) throw std::logic_error("phi_from_r1_mod_u: St_1 does not identify R_1/u with Phi");
    return *inv;
}

ModuleMap pi_to_phi(const SingerTower& t, int n) {
    ModuleMap down = (n == 1) ? identity_map(t.quots.at(0).module) : singer_beta(t, n);
    for (int k = n - 1; k >= 2; --k) down = compose(down, singer_beta(t, k));
    return compose(down, phi_from_r1_mod_u(t));
}

UAdicLayer u_adic_layer(const R1Data& r, int i) {
    auto sub = submodule(r.r1.module, u_power_r1_spans(r, i));
    DegreewiseSpans next_inside;
    DegreewiseSpans next = u_power_r1_spans(r, i + 1);
    for (const auto& [e, rows] : next) {
        auto x = solve_left(sub.incl.mat(e), rows);
        if (!x) throw std::logic_error("u_adic_layer: u^{i+1} escapes u^i");
        if (x->rows() > 0) next_inside[e] = *x;
    }
    auto quot = quotient_by(sub.module, next_inside);
    UAdicLayer out;
    out.layer = quot.module;
    GModPtr src = truncate_module(*suspend(*phi(*r.m), i),
                                  Window{out.layer->dmin, out.layer->dmax});
    out.from_phi = ModuleMap{src, out.layer, 0, {}};
    for (int d = r.m->dmin; d <= r.m->dmax; ++d) {
        int e = 2 * d + i;
        if (r.m->dim(d) == 0 || e < src->dmin || e > src->dmax) continue;
        if (out.layer->dim(e) == 0) continue;
        auto in_sub = solve_left(sub.incl.mat(e), u_st1_rows_in_r1(r, i, d));
        if (!in_sub) throw std::logic_error("u_adic_layer: u^i St_1 escapes u^i R_1");
        out.from_phi.set_mat(e, *in_sub * quot.proj.mat(e));
    }
    out.iso = true;
    for (int e = src->dmin; e <= src->dmax; ++e) {
        if (src->dim(e) != out.layer->dim(e)) out.iso = false;
        else if (src->dim(e) > 0 && rank(out.from_phi.mat(e)) != src->dim(e)) out.iso = false;
    }
    return out;
}

ModuleMap r1_functor_map(const R1Data& rm, const R1Data& rn, const ModuleMap& f) {
    if (f.shift != 0) throw std::invalid_argument("r1_functor_map: shift must be zero");
    ModuleMap g{rm.r1.module, rn.r1.module, 0, {}};
    for (int e = rm.ambient->dmin; e <= rm.ambient->dmax; ++e) {
        if (rm.r1.module->dim(e) == 0) continue;
        if (e < rn.ambient->dmin || e > rn.ambient->dmax || rn.r1.module->dim(e) == 0) continue;
        // ambient map 1 tensor f at degree e
        F2Matrix amb(rm.ambient->dim(e), rn.ambient->dim(e));
        auto dsts = ambient_blocks(rn, e);
        std::map<int, AmbientBlock> dst_of;
        for (const auto& b : dsts) dst_of[b.a] = b;
        for (const auto& b : ambient_blocks(rm, e)) {
            auto it = dst_of.find(b.a);
            if (it == dst_of.end()) continue;
            F2Matrix part = f.mat(b.d);
            for (int rr = 0; rr < part.rows(); ++rr)
                for (int cc = 0; cc < part.cols(); ++cc)
                    if (part.get(rr, cc)) amb.set(b.offset + rr, it->second.offset + cc, true);
        }
        F2Matrix img = rm.r1.incl.mat(e) * amb;
        auto x = solve_left(rn.r1.incl.mat(e), img);
        if (!x) throw std::logic_error("r1_functor_map: image escapes R_1");
        g.set_mat(e, *x);
    }
    return g;
}

ResidueData residue_differential(const GModPtr& n_unstable, int n, Window w) {
    if (!is_unstable(*n_unstable))
        throw std::invalid_argument("residue_differential: input must be unstable");
    GModPtr m = desuspend_presented(n_unstable, n);
    ResidueData rd;
    rd.n = n;
    rd.tower = singer_tower(m, n, w);
    rd.target = suspend(*m, -1);
    const R1Data& r = rd.tower.base;
    auto u_minus_one_block = [&](int e) -> std::optional<AmbientBlock> {
        for (const auto& b : ambient_blocks(r, e))
            if (b.a == -1) return b;
        return std::nullopt;
    };
    auto residue_of = [&](int e, const F2Matrix& amb_rows) {
        F2Matrix out(amb_rows.rows(), m->dim(e + 1));
        if (auto blk = u_minus_one_block(e))
            for (int rr = 0; rr < amb_rows.rows(); ++rr)
                for (int cc = 0; cc < blk->dim; ++cc)
                    if (amb_rows.get(rr, blk->offset + cc)) out.set(rr, cc, true);
        return out;
    };
    // the residue kills u^n R_1 precisely because the input is unstable
    for (const auto& [e, rows] : u_power_r1_spans(r, n)) {
        F2Matrix amb = rows * r.r1.incl.mat(e);
        if (!residue_of(e, amb).is_zero())
            throw std::logic_error("residue_differential: u^n representative has nonzero residue");
    }
    const auto& q = rd.tower.quots.at(n - 1);
    rd.d = ModuleMap{q.module, rd.target, 0, {}};
    for (int e = q.module->dmin; e <= q.module->dmax; ++e) {
        int qd = q.module->dim(e);
        if (qd == 0 || rd.target->dim(e) == 0) continue;
        auto lift = solve_left(q.proj.mat(e), F2Matrix::identity(qd));
        if (!lift) throw std::logic_error("residue_differential: projection has no section");
        F2Matrix amb = *lift * r.r1.incl.mat(e);
        rd.d.set_mat(e, residue_of(e, amb));
    }
    return rd;
}

ResidueLoops loops_via_residue(const GModPtr& n_unstable, int n, Window w) {
    ResidueLoops out;
    out.residue = residue_differential(n_unstable, n, w);
    ModuleMap sd = suspend_map(out.residue.d, 1);
    out.coker = cokernel(sd);
    out.module = out.coker.module;
    return out;
}

}  // namespace nilops
