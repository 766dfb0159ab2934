#include "nilops/gmod.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace nilops {

namespace {

int clamp_trust(long long t) {
    if (t >= kTrustComplete) return kTrustComplete;
    if (t < INT_MIN / 4) return INT_MIN / 4;
    return static_cast<int>(t);
}

int min_trust(int a, int b) { return std::min(a, b); }

}  // namespace

F2Matrix GradedModule::sq(int i, int d) const {
    auto it = sq_map.find({i, d});
    if (it != sq_map.end()) return it->second;
    return F2Matrix(dim(d), dim(d + i));
}

void GradedModule::set_sq(int i, int d, const F2Matrix& m) {
    if (m.rows() != dim(d) || m.cols() != dim(d + i))
        throw std::invalid_argument(fmt::format("set_sq({}, {}): shape {}x{} expected {}x{}",
                                                i, d, m.rows(), m.cols(), dim(d), dim(d + i)));
    if (m.rows() == 0 || m.cols() == 0 || m.is_zero()) {
        sq_map.erase({i, d});
        return;
    }
    sq_map[{i, d}] = m;
}

int GradedModule::total_dim() const {
    int t = 0;
    for (int n : dims) t += n;
    return t;
}

int GradedModule::top_degree() const {
    for (int d = dmax; d >= dmin; --d)
        if (dim(d) > 0) return d;
    return dmin - 1;
}

int GradedModule::bottom_degree() const {
    for (int d = dmin; d <= dmax; ++d)
        if (dim(d) > 0) return d;
    return dmax + 1;
}

F2Matrix GradedModule::word_action(const SqWord& w, int d) const {
    // Rightmost letter acts first; its source degree is d.
    F2Matrix acc = F2Matrix::identity(dim(d));
    int deg = d;
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
        acc = acc * sq(*it, deg);
        deg += *it;
    }
    return acc;
}

F2Matrix GradedModule::sum_action(const OperationSum& s, int d) const {
    F2Matrix acc(dim(d), dim(d + s.degree));
    for (const auto& w : s.terms) acc = acc + word_action(w, d);
    return acc;
}

GModPtr mk(GradedModule&& m) { return std::make_shared<const GradedModule>(std::move(m)); }

bool is_unstable(const GradedModule& m) {
    for (int d = m.dmin; d < 0 && d <= m.dmax; ++d)
        if (m.dim(d) != 0) return false;
    for (const auto& [key, mat] : m.sq_map) {
        auto [i, d] = key;
        if (i > d && !mat.is_zero()) return false;
    }
    return true;
}

ValidationReport validate(const GradedModule& m, bool check_unstable) {
    ValidationReport rep;
    rep.unstable_checked = check_unstable;
    for (const auto& [key, mat] : m.sq_map) {
        auto [i, d] = key;
        if (i < 1 || mat.rows() != m.dim(d) || mat.cols() != m.dim(d + i)) {
            rep.ok = false;
            rep.violations.push_back(fmt::format("malformed action entry Sq^{} at degree {}", i, d));
        }
    }
    if (!rep.ok) return rep;
    // Adem coherence: inadmissible composites match their normal forms
    // wherever all factors stay inside the window.
    for (int d = m.dmin; d <= m.dmax; ++d) {
        if (m.dim(d) == 0) continue;
        for (int b = 1; d + b <= m.dmax; ++b) {
            for (int a = 1; a < 2 * b && d + a + b <= m.dmax; ++a) {
                F2Matrix lhs = m.word_action({a, b}, d);
                OperationSum nf = adem_normalize({a, b});
                F2Matrix rhs = m.sum_action(nf, d);
                if (lhs != rhs) {
                    rep.ok = false;
                    rep.violations.push_back(
                        fmt::format("Adem failure: Sq^{} Sq^{} on degree {}", a, b, d));
                }
            }
        }
    }
    if (check_unstable) {
        for (int d = m.dmin; d < 0 && d <= m.dmax; ++d)
            if (m.dim(d) != 0) {
                rep.ok = false;
                rep.violations.push_back(fmt::format("nonzero dimension {} in negative degree {}", m.dim(d), d));
            }
        for (const auto& [key, mat] : m.sq_map) {
            auto [i, d] = key;
            if (i > d && !mat.is_zero()) {
                rep.ok = false;
                rep.violations.push_back(fmt::format("instability failure: Sq^{} nonzero on degree {}", i, d));
            }
        }
    }
    return rep;
}

GModPtr free_unstable(int n, Window w) {
    if (n < 0) throw std::invalid_argument("free_unstable: negative generator degree");
    GradedModule m(w.lo, w.hi);
    m.complete = false;
    m.trust = w.hi;
    std::map<int, std::vector<SqWord>> bases;   // keyed by inner degree k, module degree n+k
    for (int d = std::max(w.lo, n); d <= w.hi; ++d) {
        bases[d - n] = admissible_words(d - n, n);
        m.set_dim(d, static_cast<int>(bases[d - n].size()));
    }
    auto index_of = [&](int k, const SqWord& w_) -> int {
        const auto& v = bases.at(k);
        auto it = std::lower_bound(v.begin(), v.end(), w_);
        if (it == v.end() || *it != w_) return -1;
        return static_cast<int>(it - v.begin());
    };
    for (auto& [k, words] : bases) {
        int d = n + k;
        for (int i = 1; d + i <= w.hi; ++i) {
            if (m.dim(d) == 0 || m.dim(d + i) == 0) continue;
            F2Matrix a(m.dim(d), m.dim(d + i));
            for (size_t r = 0; r < words.size(); ++r) {
                SqWord composed;
                composed.push_back(i);
                composed.insert(composed.end(), words[r].begin(), words[r].end());
                OperationSum nf = adem_normalize(composed);
                for (const auto& t : nf.terms) {
                    if (!t.empty() && excess(t) > n) continue;   // relations of F(n)
                    int idx = index_of(k + i, t);
                    if (idx < 0) throw std::logic_error("free_unstable: missing admissible word");
                    a.flip(static_cast<int>(r), idx);
                }
            }
            m.set_sq(i, d, a);
        }
    }
    return mk(std::move(m));
}

GModPtr suspend(const GradedModule& m, int t) {
    GradedModule out(m.dmin + t, m.dmax + t);
    out.complete = m.complete;
    out.trust = m.complete ? kTrustComplete : clamp_trust(static_cast<long long>(m.trust) + t);
    for (int d = m.dmin; d <= m.dmax; ++d) out.set_dim(d + t, m.dim(d));
    for (const auto& [key, mat] : m.sq_map) out.set_sq(key.first, key.second + t, mat);
    return mk(std::move(out));
}

GModPtr suspend(const GModPtr& m, int t) { return suspend(*m, t); }

GModPtr desuspend_presented(const GModPtr& n, int t) {
    auto base = suspend(*n, -t);
    GradedModule out = *base;
    out.presentation = Desuspension{t, n};
    return mk(std::move(out));
}

GModPtr truncate_module(const GradedModule& m, Window w) {
    GradedModule out(w.lo, w.hi);
    bool lost_low = false, lost_high = false;
    for (int d = m.dmin; d <= m.dmax; ++d) {
        if (m.dim(d) == 0) continue;
        if (d < w.lo) lost_low = true;
        else if (d > w.hi) lost_high = true;
        else out.set_dim(d, m.dim(d));
    }
    if (lost_low) throw std::invalid_argument("truncate_module: support below the new window");
    out.complete = m.complete && !lost_high;
    out.trust = out.complete ? kTrustComplete : std::min(m.trust, w.hi);
    for (const auto& [key, mat] : m.sq_map) {
        auto [i, d] = key;
        if (d >= w.lo && d + i <= w.hi && d <= w.hi) out.set_sq(i, d, mat);
    }
    out.presentation = m.presentation;
    return mk(std::move(out));
}

ModuleMap retarget(const ModuleMap& f, const GModPtr& new_src, const GModPtr& new_dst) {
    ModuleMap g{new_src, new_dst, f.shift, {}};
    for (const auto& [d, mat] : f.mats) {
        if (d < new_src->dmin || d > new_src->dmax) continue;
        if (d + f.shift < new_dst->dmin || d + f.shift > new_dst->dmax) continue;
        g.set_mat(d, mat);
    }
    return g;
}

GModPtr direct_sum(const GradedModule& a, const GradedModule& b) {
    GradedModule out(std::min(a.dmin, b.dmin), std::max(a.dmax, b.dmax));
    out.complete = a.complete && b.complete;
    out.trust = out.complete ? kTrustComplete : min_trust(a.trust, b.trust);
    for (int d = out.dmin; d <= out.dmax; ++d) out.set_dim(d, a.dim(d) + b.dim(d));
    for (int d = out.dmin; d <= out.dmax; ++d) {
        for (int i = 1; d + i <= out.dmax; ++i) {
            if (out.dim(d) == 0 || out.dim(d + i) == 0) continue;
            F2Matrix blk = F2Matrix::dsum(a.sq(i, d), b.sq(i, d));
            out.set_sq(i, d, blk);
        }
    }
    return mk(std::move(out));
}

std::vector<TensorBlock> tensor_blocks(const GradedModule& a, const GradedModule& b, int d) {
    std::vector<TensorBlock> blocks;
    int off = 0;
    for (int p = a.dmin; p <= a.dmax; ++p) {
        int q = d - p;
        if (q < b.dmin || q > b.dmax) continue;
        int sz = a.dim(p) * b.dim(q);
        if (sz > 0) {
            blocks.push_back({p, q, off, a.dim(p), b.dim(q)});
            off += sz;
        }
    }
    return blocks;
}

GModPtr tensor_product(const GradedModule& a, const GradedModule& b) {
    int alo = a.bottom_degree(), blo = b.bottom_degree();
    bool a_empty = alo > a.dmax, b_empty = blo > b.dmax;
    Window w{a.dmin + b.dmin, a.dmax + b.dmax};
    GradedModule out(w.lo, w.hi);
    out.complete = a.complete && b.complete;
    if (out.complete || a_empty || b_empty) {
        out.trust = kTrustComplete;
        out.complete = out.complete || a_empty || b_empty;
    } else {
        out.trust = clamp_trust(std::min(static_cast<long long>(a.trust) + blo,
                                         static_cast<long long>(b.trust) + alo));
    }
    auto total_at = [&](int d) {
        int t = 0;
        for (const auto& blk : tensor_blocks(a, b, d)) t += blk.dim_a * blk.dim_b;
        return t;
    };
    for (int d = w.lo; d <= w.hi; ++d) out.set_dim(d, total_at(d));
    for (int d = w.lo; d <= w.hi; ++d) {
        if (out.dim(d) == 0) continue;
        auto src_blocks = tensor_blocks(a, b, d);
        for (int k = 1; d + k <= w.hi; ++k) {
            if (out.dim(d + k) == 0) continue;
            std::map<int, int> dst_off;
            for (const auto& blk : tensor_blocks(a, b, d + k)) dst_off[blk.p] = blk.offset;
            F2Matrix mat(out.dim(d), out.dim(d + k));
            for (const auto& blk : src_blocks) {
                int p = blk.p, q = blk.q, off = blk.offset;
                // Cartan: Sq^k(x tensor y) = sum_{i+j=k} Sq^i x tensor Sq^j y.
                for (int i = 0; i <= k; ++i) {
                    int j = k - i;
                    if (!dst_off.count(p + i)) continue;
                    F2Matrix ai = (i == 0) ? F2Matrix::identity(a.dim(p)) : a.sq(i, p);
                    F2Matrix bj = (j == 0) ? F2Matrix::identity(b.dim(q)) : b.sq(j, q);
                    F2Matrix blk2 = ai.kron(bj);
                    int doff = dst_off[p + i];
                    for (int r = 0; r < blk2.rows(); ++r)
                        for (int c = 0; c < blk2.cols(); ++c)
                            if (blk2.get(r, c)) mat.flip(off + r, doff + c);
                }
            }
            out.set_sq(k, d, mat);
        }
    }
    return mk(std::move(out));
}

/* ---------------- ModuleMap ---------------- */

F2Matrix ModuleMap::mat(int d) const {
    auto it = mats.find(d);
    if (it != mats.end()) return it->second;
    return F2Matrix(src->dim(d), dst->dim(d + shift));
}

void ModuleMap::set_mat(int d, const F2Matrix& m) {
    if (m.rows() != src->dim(d) || m.cols() != dst->dim(d + shift))
        throw std::invalid_argument(fmt::format("ModuleMap::set_mat({}): shape {}x{} expected {}x{}",
                                                d, m.rows(), m.cols(), src->dim(d), dst->dim(d + shift)));
    if (m.rows() == 0 || m.cols() == 0 || m.is_zero()) {
        mats.erase(d);
        return;
    }
    mats[d] = m;
}

bool ModuleMap::is_zero() const {
    for (const auto& [d, m] : mats)
        if (!m.is_zero()) return false;
    return true;
}

ModuleMap identity_map(const GModPtr& m) {
    ModuleMap f{m, m, 0, {}};
    for (int d = m->dmin; d <= m->dmax; ++d)
        if (m->dim(d) > 0) f.set_mat(d, F2Matrix::identity(m->dim(d)));
    return f;
}

ModuleMap zero_map(const GModPtr& src, const GModPtr& dst, int shift) {
    return ModuleMap{src, dst, shift, {}};
}

ModuleMap suspend_map(const ModuleMap& f, int t) {
    ModuleMap g{suspend(*f.src, t), suspend(*f.dst, t), f.shift, {}};
    for (const auto& [d, m] : f.mats) g.set_mat(d + t, m);
    return g;
}

ModuleMap tensor_map(const ModuleMap& f, const ModuleMap& g,
                     const GModPtr& src, const GModPtr& dst) {
    if (f.shift != 0 || g.shift != 0)
        throw std::invalid_argument("tensor_map: shifts must be zero");
    ModuleMap h{src, dst, 0, {}};
    for (int d = src->dmin; d <= src->dmax; ++d) {
        if (src->dim(d) == 0 || dst->dim(d) == 0) continue;
        std::map<int, int> dst_off;
        for (const auto& blk : tensor_blocks(*f.dst, *g.dst, d)) dst_off[blk.p] = blk.offset;
        F2Matrix mat(src->dim(d), dst->dim(d));
        for (const auto& blk : tensor_blocks(*f.src, *g.src, d)) {
            if (!dst_off.count(blk.p)) continue;
            F2Matrix piece = f.mat(blk.p).kron(g.mat(blk.q));
            int doff = dst_off[blk.p];
            for (int r = 0; r < piece.rows(); ++r)
                for (int c = 0; c < piece.cols(); ++c)
                    if (piece.get(r, c)) mat.flip(blk.offset + r, doff + c);
        }
        h.set_mat(d, mat);
    }
    return h;
}

ModuleMap tensor_associator(const GModPtr& a, const GModPtr& b, const GModPtr& c) {
    GModPtr ab = tensor_product(*a, *b);
    GModPtr bc = tensor_product(*b, *c);
    GModPtr src = tensor_product(*ab, *c);
    GModPtr dst = tensor_product(*a, *bc);
    ModuleMap h{src, dst, 0, {}};
    for (int d = src->dmin; d <= src->dmax; ++d) {
        if (src->dim(d) == 0) continue;
        F2Matrix mat(src->dim(d), dst->dim(d));
        std::map<int, int> dst_off;
        for (const auto& blk : tensor_blocks(*a, *bc, d)) dst_off[blk.p] = blk.offset;
        for (const auto& outer : tensor_blocks(*ab, *c, d)) {
            int s = outer.p, r = outer.q;
            for (const auto& inner : tensor_blocks(*a, *b, s)) {
                int p = inner.p, q = inner.q;
                int t = q + r;
                std::map<int, int> bc_off;
                for (const auto& blk : tensor_blocks(*b, *c, t)) bc_off[blk.p] = blk.offset;
                if (!dst_off.count(p) || !bc_off.count(q)) continue;
                int na = a->dim(p), nb = b->dim(q), nc = c->dim(r);
                for (int i = 0; i < na; ++i)
                    for (int j = 0; j < nb; ++j)
                        for (int k = 0; k < nc; ++k) {
                            int row = outer.offset + (inner.offset + i * nb + j) * nc + k;
                            int col = dst_off[p] + i * bc->dim(t) + (bc_off[q] + j * nc + k);
                            mat.set(row, col, true);
                        }
            }
        }
        h.set_mat(d, mat);
    }
    return h;
}

ModuleMap compose(const ModuleMap& f, const ModuleMap& g) {
    if (f.dst.get() != g.src.get() && !modules_equal(*f.dst, *g.src))
        throw std::invalid_argument("compose: middle modules disagree");
    ModuleMap h{f.src, g.dst, f.shift + g.shift, {}};
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        if (f.src->dim(d) == 0) continue;
        int mid = d + f.shift;
        if (mid < g.src->dmin || mid > g.src->dmax) continue;
        if (h.dst->dim(d + h.shift) == 0) continue;
        h.set_mat(d, f.mat(d) * g.mat(mid));
    }
    return h;
}

ModuleMap map_add(const ModuleMap& f, const ModuleMap& g) {
    if (f.shift != g.shift) throw std::invalid_argument("map_add: shift mismatch");
    ModuleMap h{f.src, f.dst, f.shift, {}};
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        if (f.src->dim(d) == 0 || f.dst->dim(d + f.shift) == 0) continue;
        h.set_mat(d, f.mat(d) + g.mat(d));
    }
    return h;
}

bool map_is_linear(const ModuleMap& f, std::string* why) {
    const GradedModule& m = *f.src;
    const GradedModule& n = *f.dst;
    int t = f.shift;
    for (int d = m.dmin; d <= m.dmax; ++d) {
        for (int i = 1; d + i <= m.dmax; ++i) {
            // need both composites inside windows
            if (d + t < n.dmin || d + i + t > n.dmax) continue;
            F2Matrix lhs = m.sq(i, d) * f.mat(d + i);
            F2Matrix rhs = f.mat(d) * n.sq(i, d + t);
            if (lhs != rhs) {
                if (why) *why = fmt::format("Sq^{} at degree {}", i, d);
                return false;
            }
        }
    }
    return true;
}

bool maps_equal(const ModuleMap& f, const ModuleMap& g) {
    if (f.shift != g.shift) return false;
    for (int d = f.src->dmin; d <= f.src->dmax; ++d)
        if (f.mat(d) != g.mat(d)) return false;
    return true;
}

std::optional<ModuleMap> left_factor(const ModuleMap& c, const ModuleMap& t) {
    if (c.src.get() != t.src.get() && !modules_equal(*c.src, *t.src)) return std::nullopt;
    ModuleMap l{c.dst, t.dst, t.shift - c.shift, {}};
    for (int d = c.dst->dmin; d <= c.dst->dmax; ++d) {
        int nd = c.dst->dim(d), ne = t.dst->dim(d + l.shift);
        if (nd == 0 || ne == 0) continue;
        // rows of c at source degrees hitting d, solved against the rows of t
        F2Matrix lhs(0, nd), rhs(0, ne);
        for (int s = c.src->dmin; s <= c.src->dmax; ++s) {
            if (s + c.shift != d || c.src->dim(s) == 0) continue;
            lhs = F2Matrix::vstack(lhs, c.mat(s));
            rhs = F2Matrix::vstack(rhs, t.mat(s));
        }
        auto x = solve_right(lhs, rhs);
        if (!x) return std::nullopt;
        l.set_mat(d, *x);
    }
    if (!maps_equal(compose(c, l), retarget(t, c.src, l.dst))) return std::nullopt;
    return l;
}

std::optional<ModuleMap> factor_through_sub(const ModuleMap& f, const SubInclusion& s) {
    if (f.dst.get() != s.incl.dst.get() && !modules_equal(*f.dst, *s.incl.dst)) return std::nullopt;
    ModuleMap g{f.src, s.module, f.shift, {}};
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        int e = d + f.shift;
        if (f.src->dim(d) == 0) continue;
        if (e < s.module->dmin || e > s.module->dmax || s.module->dim(e) == 0) {
            if (!f.mat(d).is_zero()) return std::nullopt;
            continue;
        }
        auto x = solve_left(s.incl.mat(e), f.mat(d));
        if (!x) return std::nullopt;
        g.set_mat(d, *x);
    }
    return g;
}

/* ---------------- degreewise spans ---------------- */

namespace {

F2Matrix span_at(const DegreewiseSpans& s, int d, int ambient_dim) {
    auto it = s.find(d);
    if (it != s.end()) return it->second;
    return F2Matrix(0, ambient_dim);
}

void set_span(DegreewiseSpans& s, int d, const F2Matrix& basis) {
    if (basis.rows() == 0)
        s.erase(d);
    else
        s[d] = basis;
}

}  // namespace

DegreewiseSpans close_under_action(const GradedModule& m, const DegreewiseSpans& seed) {
    DegreewiseSpans cur;
    for (const auto& [d, b] : seed) set_span(cur, d, row_space(b));
    bool changed = true;
    while (changed) {
        changed = false;
        for (int d = m.dmin; d <= m.dmax; ++d) {
            F2Matrix b = span_at(cur, d, m.dim(d));
            if (b.rows() == 0) continue;
            for (int i = 1; d + i <= m.dmax; ++i) {
                if (m.dim(d + i) == 0) continue;
                F2Matrix img = b * m.sq(i, d);
                if (img.is_zero()) continue;
                F2Matrix tgt = span_at(cur, d + i, m.dim(d + i));
                F2Matrix joined = row_space(F2Matrix::vstack(tgt, img));
                if (joined.rows() != tgt.rows()) {
                    set_span(cur, d + i, joined);
                    changed = true;
                }
            }
        }
    }
    return cur;
}

bool spans_action_closed(const GradedModule& m, const DegreewiseSpans& spans) {
    for (const auto& [d, b] : spans) {
        for (int i = 1; d + i <= m.dmax; ++i) {
            if (m.dim(d + i) == 0) {
                if (!(b * m.sq(i, d)).is_zero() && m.dim(d) > 0) return false;
                continue;
            }
            F2Matrix img = b * m.sq(i, d);
            F2Matrix tgt = span_at(spans, d + i, m.dim(d + i));
            if (!rows_contained(img, tgt)) return false;
        }
    }
    return true;
}

DegreewiseSpans spans_sum(const DegreewiseSpans& a, const DegreewiseSpans& b, const GradedModule& ambient) {
    DegreewiseSpans out;
    for (int d = ambient.dmin; d <= ambient.dmax; ++d) {
        F2Matrix x = span_at(a, d, ambient.dim(d));
        F2Matrix y = span_at(b, d, ambient.dim(d));
        F2Matrix j = row_space(F2Matrix::vstack(x, y));
        set_span(out, d, j);
    }
    return out;
}

DegreewiseSpans spans_intersect(const DegreewiseSpans& a, const DegreewiseSpans& b, const GradedModule& ambient) {
    DegreewiseSpans out;
    for (int d = ambient.dmin; d <= ambient.dmax; ++d) {
        F2Matrix x = span_at(a, d, ambient.dim(d));
        F2Matrix y = span_at(b, d, ambient.dim(d));
        set_span(out, d, intersect_row_spaces(x, y));
    }
    return out;
}

bool spans_equal(const DegreewiseSpans& a, const DegreewiseSpans& b) {
    auto norm = [](const DegreewiseSpans& s) {
        DegreewiseSpans o;
        for (const auto& [d, m] : s) {
            F2Matrix r = row_space(m);
            if (r.rows() > 0) o[d] = r;
        }
        return o;
    };
    DegreewiseSpans x = norm(a), y = norm(b);
    if (x.size() != y.size()) return false;
    for (const auto& [d, m] : x) {
        auto it = y.find(d);
        if (it == y.end() || it->second != m) return false;
    }
    return true;
}

bool spans_contained(const DegreewiseSpans& inner, const DegreewiseSpans& outer) {
    for (const auto& [d, m] : inner) {
        if (m.rows() == 0) continue;
        auto it = outer.find(d);
        F2Matrix o = (it == outer.end()) ? F2Matrix(0, m.cols()) : it->second;
        if (!rows_contained(m, o)) return false;
    }
    return true;
}

int spans_total_dim(const DegreewiseSpans& s) {
    int t = 0;
    for (const auto& [d, m] : s) t += rank(m);
    return t;
}

/* ---------------- sub / quotient ---------------- */

SubInclusion submodule(const GModPtr& m, const DegreewiseSpans& spans) {
    if (!spans_action_closed(*m, spans))
        throw std::invalid_argument("submodule: spans not closed under the action");
    GradedModule s(m->dmin, m->dmax);
    s.complete = m->complete;
    s.trust = m->trust;
    DegreewiseSpans bases;
    for (const auto& [d, b] : spans) set_span(bases, d, row_space(b));
    for (const auto& [d, b] : bases) s.set_dim(d, b.rows());
    ModuleMap incl{nullptr, m, 0, {}};
    for (int d = s.dmin; d <= s.dmax; ++d) {
        int nd = s.dim(d);
        if (nd == 0) continue;
        const F2Matrix& bd = bases.at(d);
        for (int i = 1; d + i <= s.dmax; ++i) {
            if (s.dim(d + i) == 0) {
                continue;
            }
            F2Matrix img = bd * m->sq(i, d);
            auto sol = solve_left(bases.at(d + i), img);
            if (!sol) throw std::logic_error("submodule: action escapes spans");
            s.set_sq(i, d, *sol);
        }
    }
    auto sp = mk(std::move(s));
    incl.src = sp;
    for (const auto& [d, b] : bases) incl.set_mat(d, b);
    return {sp, incl};
}

QuotientProjection quotient_by(const GModPtr& m, const DegreewiseSpans& spans) {
    if (!spans_action_closed(*m, spans))
        throw std::invalid_argument("quotient_by: spans not closed under the action");
    GradedModule q(m->dmin, m->dmax);
    q.complete = m->complete;
    q.trust = m->trust;
    std::map<int, QuotientSpace> qs;
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0) continue;
        qs[d] = quotient_space(span_at(spans, d, m->dim(d)), m->dim(d));
        q.set_dim(d, qs[d].dim);
    }
    for (int d = q.dmin; d <= q.dmax; ++d) {
        if (q.dim(d) == 0) continue;
        for (int i = 1; d + i <= q.dmax; ++i) {
            if (q.dim(d + i) == 0) continue;
            // induced action: lift, act, project
            q.set_sq(i, d, qs.at(d).lift * m->sq(i, d) * qs.at(d + i).proj);
        }
    }
    auto qp = mk(std::move(q));
    ModuleMap proj{m, qp, 0, {}};
    for (const auto& [d, sp] : qs)
        if (sp.dim > 0) proj.set_mat(d, sp.proj);
    return {qp, proj};
}

SubInclusion kernel(const ModuleMap& f) {
    DegreewiseSpans ks;
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        if (f.src->dim(d) == 0) continue;
        F2Matrix k = left_kernel(f.mat(d));
        if (k.rows() > 0) ks[d] = k;
    }
    return submodule(f.src, ks);
}

DegreewiseSpans image_spans(const ModuleMap& f) {
    DegreewiseSpans im;
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        if (f.src->dim(d) == 0 || f.dst->dim(d + f.shift) == 0) continue;
        F2Matrix r = row_space(f.mat(d));
        if (r.rows() > 0) im[d + f.shift] = r;
    }
    return im;
}

SubInclusion image(const ModuleMap& f) { return submodule(f.dst, image_spans(f)); }

QuotientProjection cokernel(const ModuleMap& f) { return quotient_by(f.dst, image_spans(f)); }

DegreewiseSpans preimage_spans(const ModuleMap& f, const DegreewiseSpans& spans) {
    DegreewiseSpans out;
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        int nd = f.src->dim(d);
        if (nd == 0) continue;
        int md = f.dst->dim(d + f.shift);
        if (md == 0) {
            out[d] = F2Matrix::identity(nd);
            continue;
        }
        F2Matrix sub = span_at(spans, d + f.shift, md);
        QuotientSpace q = quotient_space(sub, md);
        if (q.dim == 0) {
            out[d] = F2Matrix::identity(nd);
            continue;
        }
        F2Matrix k = left_kernel(f.mat(d) * q.proj);
        if (k.rows() > 0) out[d] = k;
    }
    return out;
}

Pullback pullback(const ModuleMap& f, const ModuleMap& g) {
    if (f.shift != g.shift) throw std::invalid_argument("pullback: shift mismatch");
    if (f.dst.get() != g.dst.get() && !modules_equal(*f.dst, *g.dst))
        throw std::invalid_argument("pullback: targets disagree");
    auto sum = direct_sum_with_maps(f.src, g.src);
    ModuleMap h = map_add(compose(sum.pr_a, f), compose(sum.pr_b, g));
    auto ker = kernel(h);
    return {ker.module, compose(ker.incl, sum.pr_a), compose(ker.incl, sum.pr_b),
            sum.module, ker.incl};
}

ModuleMap into_pullback(const Pullback& p, const ModuleMap& pa, const ModuleMap& pb) {
    if (pa.src.get() != pb.src.get() || pa.shift != pb.shift)
        throw std::invalid_argument("into_pullback: legs disagree on source");
    ModuleMap h{pa.src, p.module, pa.shift, {}};
    for (int d = pa.src->dmin; d <= pa.src->dmax; ++d) {
        int nd = pa.src->dim(d);
        int e = d + pa.shift;
        if (nd == 0) continue;
        F2Matrix joint = F2Matrix::hstack(pa.mat(d), pb.mat(d));
        if (p.module->dim(e) == 0) {
            if (!joint.is_zero())
                throw std::invalid_argument("into_pullback: legs do not land in the pullback");
            continue;
        }
        auto x = solve_left(p.incl.mat(e), joint);
        if (!x) throw std::invalid_argument("into_pullback: legs do not land in the pullback");
        if (!x->is_zero()) h.set_mat(d, *x);
    }
    return h;
}

Pushout pushout(const ModuleMap& f, const ModuleMap& g) {
    if (f.shift != g.shift) throw std::invalid_argument("pushout: shift mismatch");
    if (f.src.get() != g.src.get() && !modules_equal(*f.src, *g.src))
        throw std::invalid_argument("pushout: sources disagree");
    auto sum = direct_sum_with_maps(f.dst, g.dst);
    ModuleMap h = map_add(compose(f, sum.in_a), compose(g, sum.in_b));
    auto cok = cokernel(h);
    return {cok.module, compose(sum.in_a, cok.proj), compose(sum.in_b, cok.proj),
            sum.module, cok.proj};
}

DirectSumMaps direct_sum_with_maps(const GModPtr& a, const GModPtr& b) {
    GModPtr s = direct_sum(*a, *b);
    DirectSumMaps out;
    out.module = s;
    out.in_a = ModuleMap{a, s, 0, {}};
    out.in_b = ModuleMap{b, s, 0, {}};
    out.pr_a = ModuleMap{s, a, 0, {}};
    out.pr_b = ModuleMap{s, b, 0, {}};
    for (int d = s->dmin; d <= s->dmax; ++d) {
        int na = a->dim(d), nb = b->dim(d);
        if (na + nb == 0) continue;
        F2Matrix ia(na, na + nb), ib(nb, na + nb);
        for (int r = 0; r < na; ++r) ia.set(r, r, true);
        for (int r = 0; r < nb; ++r) ib.set(r, na + r, true);
        if (na > 0) {
            out.in_a.set_mat(d, ia);
            out.pr_a.set_mat(d, ia.transposed());
        }
        if (nb > 0) {
            out.in_b.set_mat(d, ib);
            out.pr_b.set_mat(d, ib.transposed());
        }
    }
    return out;
}

/* ---------------- hom spaces ---------------- */

HomSpace hom_unstable(const GradedModule& m, const GradedModule& n) {
    // Unknowns: entries of f_d for every degree d with m.dim(d), n.dim(d) > 0.
    struct Block {
        int d, rows, cols, offset;
    };
    std::vector<Block> blocks;
    int nvars = 0;
    std::map<int, int> block_of;
    for (int d = std::max(m.dmin, n.dmin); d <= std::min(m.dmax, n.dmax); ++d) {
        int r = m.dim(d), c = n.dim(d);
        if (r == 0 || c == 0) continue;
        block_of[d] = static_cast<int>(blocks.size());
        blocks.push_back({d, r, c, nvars});
        nvars += r * c;
    }
    HomSpace out;
    out.exact = m.complete && n.complete;
    if (nvars == 0) {
        return out;
    }
    // Constraints: Sq^i_M . f_{d+i} = f_d . Sq^i_N for i a power of two.
    // Entries indexed by (basis r of M^d, basis c of N^{d+i}); either side may
    // be forced zero when its hom block is empty.
    std::vector<F2Matrix> rows_acc;
    auto var = [&](int blk, int r, int c) { return blocks[blk].offset + r * blocks[blk].cols + c; };
    for (int d = m.dmin; d <= m.dmax; ++d) {
        int nr = m.dim(d);
        if (nr == 0) continue;
        for (int i = 1; d + i <= n.dmax && (m.complete || d + i <= m.dmax); i *= 2) {
            int nc = n.dim(d + i);
            if (nc == 0) continue;
            F2Matrix am = m.sq(i, d);
            F2Matrix an = n.sq(i, d);
            auto it_src = block_of.find(d);
            auto it_tgt = block_of.find(d + i);
            if (it_src == block_of.end() && it_tgt == block_of.end()) continue;
            for (int r = 0; r < nr; ++r) {
                for (int c = 0; c < nc; ++c) {
                    F2Matrix eq(1, nvars);
                    // (f_d . an)_{r,c} = sum_k f_d[r,k] an[k,c]
                    if (it_src != block_of.end())
                        for (int k = 0; k < n.dim(d); ++k)
                            if (an.get(k, c)) eq.flip(0, var(it_src->second, r, k));
                    // (am . f_{d+i})_{r,c} = sum_k am[r,k] f_{d+i}[k,c]
                    if (it_tgt != block_of.end())
                        for (int k = 0; k < m.dim(d + i); ++k)
                            if (am.get(r, k)) eq.flip(0, var(it_tgt->second, k, c));
                    if (!eq.is_zero()) rows_acc.push_back(eq);
                }
            }
        }
    }
    F2Matrix sys(static_cast<int>(rows_acc.size()), nvars);
    for (size_t r = 0; r < rows_acc.size(); ++r)
        for (int c = 0; c < nvars; ++c)
            if (rows_acc[r].get(0, c)) sys.set(static_cast<int>(r), c, true);
    F2Matrix sols = left_kernel(sys.transposed());
    // canonical echelon basis of the solution space
    sols = row_space(sols);
    auto msrc = std::make_shared<const GradedModule>(m);
    auto ndst = std::make_shared<const GradedModule>(n);
    for (int s = 0; s < sols.rows(); ++s) {
        ModuleMap f{msrc, ndst, 0, {}};
        for (const auto& blk : blocks) {
            F2Matrix mt(blk.rows, blk.cols);
            for (int r = 0; r < blk.rows; ++r)
                for (int c = 0; c < blk.cols; ++c)
                    if (sols.get(s, blk.offset + r * blk.cols + c)) mt.set(r, c, true);
            f.set_mat(blk.d, mt);
        }
        out.basis.push_back(std::move(f));
    }
    return out;
}

std::optional<ModuleMap> find_isomorphism(const GModPtr& a, const GModPtr& b) {
    for (int d = std::min(a->dmin, b->dmin); d <= std::max(a->dmax, b->dmax); ++d)
        if (a->dim(d) != b->dim(d)) return std::nullopt;
    if (a->total_dim() == 0) return zero_map(a, b, 0);
    HomSpace hs = hom_unstable(*a, *b);
    size_t nb = hs.basis.size();
    if (nb == 0) return std::nullopt;
    if (nb > 18) nb = 18;   // cap the search; enough for every use here
    auto invertible = [&](const ModuleMap& f) {
        for (int d = a->dmin; d <= a->dmax; ++d) {
            if (a->dim(d) == 0) continue;
            if (rank(f.mat(d)) != a->dim(d)) return false;
        }
        return true;
    };
    // Gray-code walk over nonzero combinations.
    ModuleMap cur = zero_map(a, b, 0);
    // rebuild src/dst pointers to the canonical ones from the hom basis
    cur = ModuleMap{hs.basis[0].src, hs.basis[0].dst, 0, {}};
    uint64_t prev = 0;
    for (uint64_t code = 1; code < (1ull << nb); ++code) {
        uint64_t gray = code ^ (code >> 1);
        uint64_t diff = gray ^ prev;
        prev = gray;
        int bit = __builtin_ctzll(diff);
        cur = map_add(cur, hs.basis[static_cast<size_t>(bit)]);
        if (invertible(cur)) {
            ModuleMap out = cur;
            out.src = a;
            out.dst = b;
            return out;
        }
    }
    return std::nullopt;
}

bool modules_equal(const GradedModule& a, const GradedModule& b) {
    int lo = std::min(a.dmin, b.dmin), hi = std::max(a.dmax, b.dmax);
    for (int d = lo; d <= hi; ++d)
        if (a.dim(d) != b.dim(d)) return false;
    for (int d = lo; d <= hi; ++d) {
        if (a.dim(d) == 0) continue;
        int top = std::min(a.dmax, b.dmax);
        for (int i = 1; d + i <= top; ++i) {
            if (a.dim(d + i) == 0) continue;
            if (a.sq(i, d) != b.sq(i, d)) return false;
        }
    }
    return true;
}

std::optional<ModuleMap> map_inverse(const ModuleMap& f) {
    if (f.shift != 0) return std::nullopt;
    ModuleMap g{f.dst, f.src, 0, {}};
    for (int d = f.src->dmin; d <= f.src->dmax; ++d) {
        int n = f.src->dim(d);
        if (n != f.dst->dim(d)) return std::nullopt;
        if (n == 0) continue;
        auto inv = solve_left(f.mat(d), F2Matrix::identity(n));
        if (!inv || rank(f.mat(d)) != n) return std::nullopt;
        // inv . f = id; for square full-rank f this is also f . inv = id
        g.set_mat(d, *inv);
    }
    for (int d = f.dst->dmin; d <= f.dst->dmax; ++d)
        if (f.dst->dim(d) != f.src->dim(d)) return std::nullopt;
    return g;
}

bool is_short_exact(const ModuleMap& i, const ModuleMap& p, std::string* why) {
    if (i.dst.get() != p.src.get() && !modules_equal(*i.dst, *p.src)) {
        if (why) *why = "middle modules disagree";
        return false;
    }
    for (int d = i.src->dmin; d <= i.src->dmax; ++d) {
        if (i.src->dim(d) == 0) continue;
        if (rank(i.mat(d)) != i.src->dim(d)) {
            if (why) *why = fmt::format("first map not injective at degree {}", d);
            return false;
        }
    }
    for (int e = p.dst->dmin; e <= p.dst->dmax; ++e) {
        if (p.dst->dim(e) == 0) continue;
        int d = e - p.shift;
        F2Matrix mt = (d >= p.src->dmin && d <= p.src->dmax) ? p.mat(d)
                                                             : F2Matrix(0, p.dst->dim(e));
        if (rank(mt) != p.dst->dim(e)) {
            if (why) *why = fmt::format("second map not surjective onto degree {}", e);
            return false;
        }
    }
    for (int d = p.src->dmin; d <= p.src->dmax; ++d) {
        if (p.src->dim(d) == 0) continue;
        int ds = d - i.shift;
        F2Matrix im = (ds >= i.src->dmin && ds <= i.src->dmax) ? row_space(i.mat(ds))
                                                               : F2Matrix(0, p.src->dim(d));
        F2Matrix ker = row_space(left_kernel(p.mat(d)));
        if (ker != im) {
            if (why) *why = fmt::format("image != kernel at degree {}", d);
            return false;
        }
    }
    return true;
}

FreeCover one_step_free_cover(const GModPtr& m) {
    // Generators: basis of M / (span of all Sq^i images, i >= 1).
    DegreewiseSpans decomposables;
    for (int d = m->dmin; d <= m->dmax; ++d) {
        if (m->dim(d) == 0) continue;
        std::vector<F2Matrix> imgs;
        for (int i = 1; d - i >= m->dmin; ++i) {
            if (m->dim(d - i) == 0) continue;
            F2Matrix img = m->sq(i, d - i);
            if (!img.is_zero()) imgs.push_back(row_space(img));
        }
        F2Matrix joined(0, m->dim(d));
        for (const auto& im : imgs) joined = F2Matrix::vstack(joined, im);
        joined = row_space(joined);
        if (joined.rows() > 0) decomposables[d] = joined;
    }
    // one F(|g|) per generator, mapped by the word action on the lift of g
    struct Gen {
        int degree;
        F2Matrix lift;   // 1 x dim(M^degree)
    };
    std::vector<Gen> gens;
    for (int d = m->dmin; d <= m->dmax; ++d) {
        int nd = m->dim(d);
        if (nd == 0) continue;
        F2Matrix sub = decomposables.count(d) ? decomposables[d] : F2Matrix(0, nd);
        QuotientSpace q = quotient_space(sub, nd);
        for (int g = 0; g < q.dim; ++g) {
            F2Matrix lift(1, nd);
            for (int c = 0; c < nd; ++c)
                if (q.lift.get(g, c)) lift.set(0, c, true);
            gens.push_back({d, lift});
        }
    }
    Window w{m->dmin, m->dmax};
    GModPtr fr;
    if (gens.empty()) {
        GradedModule z(w.lo, w.hi);
        z.complete = m->complete;
        z.trust = m->trust;
        fr = mk(std::move(z));
    } else {
        GModPtr acc = free_unstable(gens[0].degree, w);
        for (size_t i = 1; i < gens.size(); ++i)
            acc = direct_sum(*acc, *free_unstable(gens[i].degree, w));
        GradedModule withtrust = *acc;
        withtrust.trust = std::min(withtrust.trust, m->trust);
        fr = mk(std::move(withtrust));
    }
    // map: the basis word Sq^I of the summand F(|g|) goes to Sq^I(lift of g)
    ModuleMap onto{fr, m, 0, {}};
    for (int d = fr->dmin; d <= fr->dmax; ++d) {
        if (fr->dim(d) == 0 || m->dim(d) == 0) continue;
        F2Matrix mt(fr->dim(d), m->dim(d));
        int row = 0;
        for (const auto& g : gens) {
            if (d < g.degree) continue;
            auto words = admissible_words(d - g.degree, g.degree);
            for (const auto& word : words) {
                F2Matrix img = g.lift * m->word_action(word, g.degree);
                for (int c = 0; c < m->dim(d); ++c)
                    if (img.get(0, c)) mt.set(row, c, true);
                ++row;
            }
        }
        if (row != fr->dim(d)) throw std::logic_error("one_step_free_cover: basis misalignment");
        onto.set_mat(d, mt);
    }
    FreeCover out;
    out.free = fr;
    out.onto = onto;
    out.kernel = kernel(onto);
    return out;
}

/* ---------------- standard modules ---------------- */

GModPtr u_power_module(int amin, Window w) {
    GradedModule m(w.lo, w.hi);
    m.complete = false;
    m.trust = w.hi;
    for (int d = std::max(amin, w.lo); d <= w.hi; ++d) m.set_dim(d, 1);
    for (int d = std::max(amin, w.lo); d <= w.hi; ++d)
        for (int i = 1; d + i <= w.hi; ++i)
            if (binom2(d, i)) {
                F2Matrix one(1, 1);
                one.set(0, 0, true);
                m.set_sq(i, d, one);
            }
    return mk(std::move(m));
}

GModPtr truncated_projective(int n, Window w) {
    GradedModule m(w.lo, w.hi);
    m.complete = true;
    m.trust = kTrustComplete;
    for (int d = 1; d <= std::min(n, w.hi); ++d) m.set_dim(d, 1);
    for (int d = 1; d <= std::min(n, w.hi); ++d)
        for (int i = 1; d + i <= std::min(n, w.hi); ++i)
            if (binom2(d, i)) {
                F2Matrix one(1, 1);
                one.set(0, 0, true);
                m.set_sq(i, d, one);
            }
    return mk(std::move(m));
}

GModPtr rp2(Window w) { return truncated_projective(2, w); }

GModPtr n2_module(Window w) {
    GradedModule m(w.lo, w.hi);
    m.complete = true;
    m.trust = kTrustComplete;
    m.set_dim(4, 1);
    m.set_dim(8, 1);
    F2Matrix one(1, 1);
    one.set(0, 0, true);
    m.set_sq(4, 4, one);
    return mk(std::move(m));
}

GModPtr f2_at(int d, Window w) {
    GradedModule m(w.lo, w.hi);
    m.complete = true;
    m.trust = kTrustComplete;
    m.set_dim(d, 1);
    return mk(std::move(m));
}

}  // namespace nilops
