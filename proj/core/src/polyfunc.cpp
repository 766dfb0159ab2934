#include "nilops/polyfunc.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "nilops/functors.hpp"

namespace nilops {

namespace {

long long binom(int n, int r) {
    if (r < 0 || n < 0 || r > n) return 0;
    long long acc = 1;
    r = std::min(r, n - r);
    for (int t = 1; t <= r; ++t) acc = acc * (n - r + t) / t;
    return acc;
}

bool binom_odd(int n, int r) { return r >= 0 && n >= r && (n & r) == r; }

/* ---- monomial bookkeeping (exponent vectors, lex order) ---- */

void mono_rec(int vars, int deg, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == vars - 1) {
        cur.push_back(deg);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int e = 0; e <= deg; ++e) {
        cur.push_back(e);
        mono_rec(vars, deg - e, cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<int>> mono_list(int vars, int deg) {
    if (vars == 0) {
        if (deg == 0) return {std::vector<int>{}};
        return {};
    }
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    mono_rec(vars, deg, cur, out);
    return out;
}

std::map<std::vector<int>, int> mono_index(const std::vector<std::vector<int>>& list) {
    std::map<std::vector<int>, int> ix;
    for (size_t t = 0; t < list.size(); ++t) ix[list[t]] = static_cast<int>(t);
    return ix;
}

// index of x_i x_j (i <= j) in mono_list(m, 2)
int pair_index(int m, int i, int j) {
    std::vector<int> e(m, 0);
    e[i] += 1;
    e[j] += 1;
    static thread_local std::map<int, std::map<std::vector<int>, int>> cache;
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, mono_index(mono_list(m, 2))).first;
    return it->second.at(e);
}

int lambda_index(int m, int i, int j) {  // i < j
    return i * (m - 1) - i * (i - 1) / 2 + (j - i - 1);
}

/* polynomial arithmetic over F_2 on exponent-vector monomials */
using Poly = std::map<std::vector<int>, bool>;

void poly_add(Poly& p, const std::vector<int>& mono) {
    auto it = p.find(mono);
    if (it == p.end())
        p[mono] = true;
    else
        p.erase(it);
}

// multiply by the linear form sum_t coeff[t] x_t (coeff over F_2)
Poly poly_mul_linear(const Poly& p, const std::vector<bool>& coeff) {
    Poly out;
    int vars = static_cast<int>(coeff.size());
    for (const auto& [e, on] : p) {
        (void)on;
        for (int t = 0; t < vars; ++t) {
            if (!coeff[t]) continue;
            std::vector<int> f = e;
            f[t] += 1;
            poly_add(out, f);
        }
    }
    return out;
}

/* ---- incremental row span ---- */

struct SpanAccum {
    int n = 0;
    F2Matrix rows;  // reduced rows, one pivot each
    std::vector<int> pivots;
    explicit SpanAccum(int ambient) : n(ambient), rows(0, ambient) {}

    F2Matrix reduce(const F2Matrix& v) const {
        F2Matrix w = v;
        for (size_t t = 0; t < pivots.size(); ++t)
            if (w.get(0, pivots[t])) w.row_xor(0, rows, static_cast<int>(t));
        return w;
    }
    bool contains(const F2Matrix& v) const { return reduce(v).is_zero(); }
    bool add(const F2Matrix& v) {
        F2Matrix w = reduce(v);
        int p = -1;
        for (int c = 0; c < n && p < 0; ++c)
            if (w.get(0, c)) p = c;
        if (p < 0) return false;
        F2Matrix grown(rows.rows() + 1, n);
        for (int r = 0; r < rows.rows(); ++r) grown.row_assign(r, rows, r);
        grown.row_assign(rows.rows(), w, 0);
        rows = std::move(grown);
        pivots.push_back(p);
        return true;
    }
    int dim() const { return rows.rows(); }
};

F2Matrix single_row(const std::vector<bool>& bits) {
    F2Matrix v(1, static_cast<int>(bits.size()));
    for (size_t c = 0; c < bits.size(); ++c)
        if (bits[c]) v.set(0, static_cast<int>(c), true);
    return v;
}

F2Matrix matrix_row(const F2Matrix& m, int r) {
    F2Matrix v(1, m.cols());
    v.row_assign(0, m, r);
    return v;
}

void xor_block(F2Matrix& dst, int r0, int c0, const F2Matrix& blk) {
    for (int r = 0; r < blk.rows(); ++r)
        for (int c = 0; c < blk.cols(); ++c)
            if (blk.get(r, c)) dst.flip(r0 + r, c0 + c);
}

/* ---- morphism encodings ---- */

uint64_t encode_mor(const F2Matrix& m) {
    uint64_t bits = 0;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            if (m.get(r, c)) bits |= uint64_t(1) << (r * m.cols() + c);
    return bits;
}

F2Matrix decode_mor(int i, int j, uint64_t bits) {
    F2Matrix m(i, j);
    for (int r = 0; r < i; ++r)
        for (int c = 0; c < j; ++c)
            if (bits >> (r * j + c) & 1) m.set(r, c, true);
    return m;
}

int hom_count(int i, int j) {
    if (i * j > 25) throw std::logic_error("truncated category: object dimensions too large");
    return 1 << (i * j);
}

struct GenKey {
    int src, dst;
    uint64_t bits;
    bool operator<(const GenKey& o) const {
        return std::tie(src, dst, bits) < std::tie(o.src, o.dst, o.bits);
    }
};

}  // namespace

/* ---------------- category plumbing ---------------- */

std::vector<F2Matrix> all_morphisms(int i, int j) {
    int n = hom_count(i, j);
    std::vector<F2Matrix> out;
    out.reserve(n);
    for (int b = 0; b < n; ++b) out.push_back(decode_mor(i, j, b));
    return out;
}

LinMor identity_mor(int k) { return LinMor{k, k, F2Matrix::identity(k)}; }

std::vector<LinMor> category_generators(int kmax) {
    std::vector<LinMor> gens;
    for (int k = 1; k <= kmax; ++k) {
        F2Matrix inc(k - 1, k);
        for (int r = 0; r < k - 1; ++r) inc.set(r, r, true);
        gens.push_back({k - 1, k, inc});
        F2Matrix prj(k, k - 1);
        for (int r = 0; r < k - 1; ++r) prj.set(r, r, true);
        gens.push_back({k, k - 1, prj});
    }
    for (int k = 2; k <= kmax; ++k) {
        for (int s = 0; s < k; ++s)
            for (int t = s + 1; t < k; ++t) {
                F2Matrix sw = F2Matrix::identity(k);
                sw.set(s, s, false);
                sw.set(t, t, false);
                sw.set(s, t, true);
                sw.set(t, s, true);
                gens.push_back({k, k, sw});
            }
        for (int s = 0; s < k; ++s)
            for (int t = 0; t < k; ++t) {
                if (s == t) continue;
                F2Matrix tv = F2Matrix::identity(k);
                tv.set(s, t, true);
                gens.push_back({k, k, tv});
            }
    }
    for (int k = 1; k <= kmax; ++k) {
        F2Matrix idem = F2Matrix::identity(k);
        idem.set(k - 1, k - 1, false);
        gens.push_back({k, k, idem});
    }
    return gens;
}

std::vector<int> factor_morphism(int i, int j, const F2Matrix& phi,
                                 const std::vector<LinMor>& gens) {
    if (phi.rows() != i || phi.cols() != j)
        throw std::invalid_argument("factor_morphism: shape mismatch");
    std::map<GenKey, int> lookup;
    int range = 0;
    for (size_t t = 0; t < gens.size(); ++t) {
        lookup[{gens[t].src, gens[t].dst, encode_mor(gens[t].mat)}] = static_cast<int>(t);
        range = std::max({range, gens[t].src, gens[t].dst});
    }
    if (i > range || j > range)
        throw std::invalid_argument("factor_morphism: object outside generator range");
    auto find_gen = [&](int s, int d, const F2Matrix& m) {
        auto it = lookup.find({s, d, encode_mor(m)});
        if (it == lookup.end()) throw std::logic_error("factor_morphism: missing generator");
        return it->second;
    };

    std::vector<int> left, middle, right;
    F2Matrix a = phi;

    // row phase: a <- E . a, recording E in application order
    int pr = 0;
    for (int c = 0; c < j && pr < i; ++c) {
        int piv = -1;
        for (int r = pr; r < i && piv < 0; ++r)
            if (a.get(r, c)) piv = r;
        if (piv < 0) continue;
        if (piv != pr) {
            F2Matrix sw = F2Matrix::identity(i);
            sw.set(pr, pr, false);
            sw.set(piv, piv, false);
            sw.set(pr, piv, true);
            sw.set(piv, pr, true);
            left.push_back(find_gen(i, i, sw));
            a = sw * a;
        }
        for (int r = 0; r < i; ++r) {
            if (r == pr || !a.get(r, c)) continue;
            F2Matrix tv = F2Matrix::identity(i);
            tv.set(r, pr, true);  // adds row pr into row r
            left.push_back(find_gen(i, i, tv));
            a = tv * a;
        }
        ++pr;
    }
    int r0 = pr;

    // column phase: a <- a . F, recording F; right factors apply reversed
    std::vector<int> colops;
    std::vector<int> pivcol(r0, -1);
    for (int t = 0; t < r0; ++t)
        for (int c = 0; c < j; ++c)
            if (a.get(t, c)) {
                pivcol[t] = c;
                break;
            }
    for (int t = 0; t < r0; ++t) {
        for (int c = 0; c < j; ++c) {
            if (c == pivcol[t] || !a.get(t, c)) continue;
            F2Matrix tv = F2Matrix::identity(j);
            tv.set(pivcol[t], c, true);  // adds column pivcol[t] into column c
            colops.push_back(find_gen(j, j, tv));
            a = a * tv;
        }
    }
    for (int t = 0; t < r0; ++t) {
        // move pivot column t into position t by swaps
        int c = -1;
        for (int cc = 0; cc < j; ++cc)
            if (a.get(t, cc)) {
                c = cc;
                break;
            }
        if (c != t) {
            F2Matrix sw = F2Matrix::identity(j);
            sw.set(t, t, false);
            sw.set(c, c, false);
            sw.set(t, c, true);
            sw.set(c, t, true);
            colops.push_back(find_gen(j, j, sw));
            a = a * sw;
        }
    }
    right.assign(colops.rbegin(), colops.rend());

    for (int t = i; t > r0; --t) {
        F2Matrix prj(t, t - 1);
        for (int r = 0; r < t - 1; ++r) prj.set(r, r, true);
        middle.push_back(find_gen(t, t - 1, prj));
    }
    for (int t = r0 + 1; t <= j; ++t) {
        F2Matrix inc(t - 1, t);
        for (int r = 0; r < t - 1; ++r) inc.set(r, r, true);
        middle.push_back(find_gen(t - 1, t, inc));
    }

    std::vector<int> word = left;
    word.insert(word.end(), middle.begin(), middle.end());
    word.insert(word.end(), right.begin(), right.end());

    F2Matrix acc = F2Matrix::identity(i);
    for (int g : word) acc = acc * gens[g].mat;
    if (acc != phi) throw std::logic_error("factor_morphism: recomposition failed");
    return word;
}

/* ---------------- impls ---------------- */

namespace {

class FormulaImpl final : public FunctorImpl {
  public:
    FormulaImpl(std::function<int(int)> dimf,
                std::function<F2Matrix(int, int, const F2Matrix&)> actf)
        : dimf_(std::move(dimf)), actf_(std::move(actf)) {}
    int dim(int k) const override { return dimf_(k); }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override { return actf_(i, j, phi); }
    bool formulaic() const override { return true; }

  private:
    std::function<int(int)> dimf_;
    std::function<F2Matrix(int, int, const F2Matrix&)> actf_;
};

class ComposeImpl final : public FunctorImpl {
  public:
    ComposeImpl(PolyFunctor g, PolyFunctor f) : g_(std::move(g)), f_(std::move(f)) {}
    int dim(int k) const override {
        int m = f_.dim(k);
        if (g_.impl->formulaic()) return g_.impl->dim(m);
        if (m > g_.kmax) throw std::out_of_range("compose_functor: inner dimension exceeds outer range");
        return g_.dim(m);
    }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        return g_.impl->act(f_.dim(i), f_.dim(j), f_.act(i, j, phi));
    }

  private:
    PolyFunctor g_, f_;
};

class ShiftImpl final : public FunctorImpl {
  public:
    ShiftImpl(PolyFunctor f, int m) : f_(std::move(f)), m_(m) {}
    int dim(int k) const override { return f_.dim(k + m_); }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        return f_.act(i + m_, j + m_, F2Matrix::dsum(phi, F2Matrix::identity(m_)));
    }

  private:
    PolyFunctor f_;
    int m_;
};

class DirectSumImpl final : public FunctorImpl {
  public:
    DirectSumImpl(PolyFunctor a, PolyFunctor b) : a_(std::move(a)), b_(std::move(b)) {}
    int dim(int k) const override { return a_.dim(k) + b_.dim(k); }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        return F2Matrix::dsum(a_.act(i, j, phi), b_.act(i, j, phi));
    }

  private:
    PolyFunctor a_, b_;
};

class SubImpl final : public FunctorImpl {
  public:
    SubImpl(PolyFunctor parent, std::vector<F2Matrix> basis)
        : parent_(std::move(parent)), basis_(std::move(basis)) {}
    int dim(int k) const override { return basis_[k].rows(); }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        if (basis_[i].rows() == 0 || basis_[j].rows() == 0)
            return F2Matrix(basis_[i].rows(), basis_[j].rows());
        auto x = solve_left(basis_[j], basis_[i] * parent_.act(i, j, phi));
        if (!x) throw std::logic_error("subfunctor: spans are not invariant");
        return *x;
    }

  private:
    PolyFunctor parent_;
    std::vector<F2Matrix> basis_;
};

class DeltaImpl final : public FunctorImpl {
  public:
    DeltaImpl(PolyFunctor parent, std::vector<F2Matrix> proj)
        : parent_(std::move(parent)), proj_(std::move(proj)) {}
    int dim(int k) const override { return proj_[k].cols(); }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        F2Matrix big = parent_.act(i + 1, j + 1, F2Matrix::dsum(phi, F2Matrix::identity(1)));
        auto x = solve_right(proj_[i], big * proj_[j]);
        if (!x) throw std::logic_error("delta_functor: projection did not descend");
        return *x;
    }

  private:
    PolyFunctor parent_;
    std::vector<F2Matrix> proj_;
};

class GenTableImpl final : public FunctorImpl {
  public:
    GenTableImpl(std::vector<int> dims, std::vector<LinMor> gens, std::vector<F2Matrix> mats)
        : dims_(std::move(dims)), gens_(std::move(gens)), mats_(std::move(mats)) {}
    int dim(int k) const override { return dims_[k]; }
    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        F2Matrix acc = F2Matrix::identity(dims_[i]);
        for (int g : factor_morphism(i, j, phi, gens_)) acc = acc * mats_[g];
        return acc;
    }

  private:
    std::vector<int> dims_;
    std::vector<LinMor> gens_;
    std::vector<F2Matrix> mats_;
};

PolyFunctor make_functor(int kmax, std::string name, std::shared_ptr<const FunctorImpl> impl) {
    PolyFunctor f;
    f.kmax = kmax;
    f.name = std::move(name);
    f.impl = std::move(impl);
    f.dims.resize(kmax + 1);
    for (int k = 0; k <= kmax; ++k) f.dims[k] = f.impl->dim(k);
    return f;
}

}  // namespace

F2Matrix PolyFunctor::act(int i, int j, const F2Matrix& phi) const {
    if (!impl) throw std::logic_error("PolyFunctor: empty impl");
    if (!impl->formulaic() && (i < 0 || j < 0 || i > kmax || j > kmax))
        throw std::out_of_range("PolyFunctor::act: object outside truncation");
    if (phi.rows() != i || phi.cols() != j)
        throw std::invalid_argument("PolyFunctor::act: morphism shape mismatch");
    return impl->act(i, j, phi);
}

bool PolyFunctor::is_zero() const {
    return std::all_of(dims.begin(), dims.end(), [](int d) { return d == 0; });
}

FunctorCheck functor_check(const PolyFunctor& f) {
    FunctorCheck out;
    for (int k = 0; k <= f.kmax; ++k) {
        if (f.act(k, k, F2Matrix::identity(k)) != F2Matrix::identity(f.dim(k))) {
            out.ok = false;
            out.why = "identity fails at object " + std::to_string(k);
            return out;
        }
    }
    for (int i = 0; i <= f.kmax; ++i)
        for (int j = 0; j <= f.kmax; ++j) {
            std::vector<std::pair<F2Matrix, F2Matrix>> first;
            for (const auto& phi : all_morphisms(i, j)) first.push_back({phi, f.act(i, j, phi)});
            for (int l = 0; l <= f.kmax; ++l)
                for (const auto& psi : all_morphisms(j, l)) {
                    F2Matrix fpsi = f.act(j, l, psi);
                    for (const auto& [phi, fphi] : first) {
                        if (f.act(i, l, phi * psi) != fphi * fpsi) {
                            out.ok = false;
                            out.why = "composition fails between objects " + std::to_string(i) +
                                      "," + std::to_string(j) + "," + std::to_string(l);
                            return out;
                        }
                    }
                }
        }
    return out;
}

/* ---------------- standard functors ---------------- */

PolyFunctor id_functor(int kmax) {
    return make_functor(kmax, "Id",
                        std::make_shared<FormulaImpl>([](int k) { return k; },
                                                      [](int, int, const F2Matrix& phi) { return phi; }));
}

PolyFunctor constant_functor(int kmax) {
    return make_functor(kmax, "F2",
                        std::make_shared<FormulaImpl>([](int) { return 1; }, [](int, int, const F2Matrix&) {
                            return F2Matrix::identity(1);
                        }));
}

PolyFunctor zero_functor(int kmax) {
    return make_functor(kmax, "0",
                        std::make_shared<FormulaImpl>([](int) { return 0; }, [](int i, int j, const F2Matrix&) {
                            (void)i;
                            (void)j;
                            return F2Matrix(0, 0);
                        }));
}

PolyFunctor tensor_power_functor(int n, int kmax) {
    if (n < 0) throw std::invalid_argument("tensor_power_functor: negative power");
    if (n == 0) return constant_functor(kmax);
    auto dimf = [n](int k) {
        int d = 1;
        for (int t = 0; t < n; ++t) d *= k;
        return d;
    };
    auto actf = [n](int, int, const F2Matrix& phi) {
        F2Matrix acc = phi;
        for (int t = 1; t < n; ++t) acc = acc.kron(phi);
        return acc;
    };
    return make_functor(kmax, "T^" + std::to_string(n),
                        std::make_shared<FormulaImpl>(dimf, actf));
}

PolyFunctor symmetric_power_functor(int n, int kmax) {
    if (n < 0 || n > 4) throw std::invalid_argument("symmetric_power_functor: supported for n <= 4");
    if (n == 0) return constant_functor(kmax);
    auto dimf = [n](int k) { return static_cast<int>(binom(k + n - 1, n)); };
    auto actf = [n](int i, int j, const F2Matrix& phi) {
        auto src = mono_list(i, n);
        auto dst = mono_list(j, n);
        auto dix = mono_index(dst);
        F2Matrix out(static_cast<int>(src.size()), static_cast<int>(dst.size()));
        for (size_t r = 0; r < src.size(); ++r) {
            Poly p;
            poly_add(p, std::vector<int>(j, 0));
            for (int s = 0; s < i; ++s) {
                std::vector<bool> coeff(j);
                for (int t = 0; t < j; ++t) coeff[t] = phi.get(s, t);
                for (int rep = 0; rep < src[r][s]; ++rep) p = poly_mul_linear(p, coeff);
            }
            for (const auto& [e, on] : p) {
                (void)on;
                out.set(static_cast<int>(r), dix.at(e), true);
            }
        }
        return out;
    };
    return make_functor(kmax, "S^" + std::to_string(n),
                        std::make_shared<FormulaImpl>(dimf, actf));
}

PolyFunctor exterior_square_functor(int kmax) {
    auto dimf = [](int k) { return static_cast<int>(binom(k, 2)); };
    auto actf = [](int i, int j, const F2Matrix& phi) {
        F2Matrix out(static_cast<int>(binom(i, 2)), static_cast<int>(binom(j, 2)));
        for (int a = 0; a < i; ++a)
            for (int b = a + 1; b < i; ++b)
                for (int t = 0; t < j; ++t)
                    for (int u = t + 1; u < j; ++u) {
                        bool v = (phi.get(a, t) && phi.get(b, u)) ^ (phi.get(a, u) && phi.get(b, t));
                        if (v) out.flip(lambda_index(i, a, b), lambda_index(j, t, u));
                    }
        return out;
    };
    return make_functor(kmax, "Lambda^2", std::make_shared<FormulaImpl>(dimf, actf));
}

PolyFunctor divided_square_functor(int kmax) {
    auto dimf = [](int k) { return static_cast<int>(binom(k + 1, 2)); };
    auto actf = [](int i, int j, const F2Matrix& phi) {
        F2Matrix out(static_cast<int>(binom(i + 1, 2)), static_cast<int>(binom(j + 1, 2)));
        for (int a = 0; a < i; ++a) {
            // e_a e_a -> sum_t A_at e_t e_t + sum_{t<u} A_at A_au (e_t e_u + e_u e_t)
            for (int t = 0; t < j; ++t)
                if (phi.get(a, t)) out.flip(pair_index(i, a, a), pair_index(j, t, t));
            for (int t = 0; t < j; ++t)
                for (int u = t + 1; u < j; ++u)
                    if (phi.get(a, t) && phi.get(a, u))
                        out.flip(pair_index(i, a, a), pair_index(j, t, u));
        }
        for (int a = 0; a < i; ++a)
            for (int b = a + 1; b < i; ++b)
                for (int t = 0; t < j; ++t)
                    for (int u = t + 1; u < j; ++u) {
                        bool v = (phi.get(a, t) && phi.get(b, u)) ^ (phi.get(a, u) && phi.get(b, t));
                        if (v) out.flip(pair_index(i, a, b), pair_index(j, t, u));
                    }
        return out;
    };
    return make_functor(kmax, "Gamma^2", std::make_shared<FormulaImpl>(dimf, actf));
}

PolyFunctor compose_functor(const PolyFunctor& g, const PolyFunctor& f) {
    auto impl = std::make_shared<ComposeImpl>(g, f);
    return make_functor(f.kmax, "(" + g.name + " o " + f.name + ")", impl);
}

PolyFunctor precompose_shift(const PolyFunctor& f, int m) {
    if (m < 0 || f.kmax - m < 0) throw std::invalid_argument("precompose_shift: no headroom");
    if (m == 0) return f;
    auto impl = std::make_shared<ShiftImpl>(f, m);
    return make_functor(f.kmax - m, "(" + f.name + " o E" + std::to_string(m) + ")", impl);
}

PolyFunctor direct_sum_functor(const PolyFunctor& a, const PolyFunctor& b) {
    if (a.kmax != b.kmax) throw std::invalid_argument("direct_sum_functor: truncation mismatch");
    auto impl = std::make_shared<DirectSumImpl>(a, b);
    return make_functor(a.kmax, "(" + a.name + " (+) " + b.name + ")", impl);
}

PolyFunctor generated_functor(std::vector<int> dims, std::vector<F2Matrix> gen_mats,
                              const std::string& name) {
    if (dims.empty()) throw std::invalid_argument("generated_functor: empty dims");
    int kmax = static_cast<int>(dims.size()) - 1;
    std::vector<LinMor> gens = category_generators(kmax);
    if (gen_mats.size() != gens.size())
        throw std::invalid_argument("generated_functor: expected " +
                                    std::to_string(gens.size()) + " generator actions");
    for (size_t t = 0; t < gens.size(); ++t)
        if (gen_mats[t].rows() != dims[gens[t].src] || gen_mats[t].cols() != dims[gens[t].dst])
            throw std::invalid_argument("generated_functor: action shape mismatch at generator " +
                                        std::to_string(t));
    auto impl = std::make_shared<GenTableImpl>(dims, std::move(gens), std::move(gen_mats));
    return make_functor(kmax, name, impl);
}

/* ---------------- component formulas ---------------- */

F2Matrix frobenius_component(int m) {
    F2Matrix out(m, static_cast<int>(binom(m + 1, 2)));
    for (int a = 0; a < m; ++a) out.set(a, pair_index(m, a, a), true);
    return out;
}

F2Matrix s2_to_lambda2_component(int m) {
    F2Matrix out(static_cast<int>(binom(m + 1, 2)), static_cast<int>(binom(m, 2)));
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            out.set(pair_index(m, a, b), lambda_index(m, a, b), true);
    return out;
}

F2Matrix norm_component(int m) {
    F2Matrix out(static_cast<int>(binom(m + 1, 2)), static_cast<int>(binom(m + 1, 2)));
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            out.set(pair_index(m, a, b), pair_index(m, a, b), true);
    return out;
}

F2Matrix gamma2_counit_component(int m) {
    F2Matrix out(static_cast<int>(binom(m + 1, 2)), m);
    for (int a = 0; a < m; ++a) out.set(pair_index(m, a, a), a, true);
    return out;
}

F2Matrix s2_to_t2_component(int m) {
    F2Matrix out(static_cast<int>(binom(m + 1, 2)), m * m);
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            out.set(pair_index(m, a, b), a * m + b, true);
            out.set(pair_index(m, a, b), b * m + a, true);
        }
    return out;
}

F2Matrix t2_to_s2_component(int m) {
    F2Matrix out(m * m, static_cast<int>(binom(m + 1, 2)));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            out.set(a * m + b, pair_index(m, std::min(a, b), std::max(a, b)), true);
    return out;
}

F2Matrix lambda2_to_t2_component(int m) {
    F2Matrix out(static_cast<int>(binom(m, 2)), m * m);
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            out.set(lambda_index(m, a, b), a * m + b, true);
            out.set(lambda_index(m, a, b), b * m + a, true);
        }
    return out;
}

F2Matrix gamma2_to_t2_component(int m) {
    F2Matrix out(static_cast<int>(binom(m + 1, 2)), m * m);
    for (int a = 0; a < m; ++a) out.set(pair_index(m, a, a), a * m + a, true);
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            out.set(pair_index(m, a, b), a * m + b, true);
            out.set(pair_index(m, a, b), b * m + a, true);
        }
    return out;
}

/* ---------------- natural transformations ---------------- */

NatTrans nat_from_components(const PolyFunctor& src, const PolyFunctor& dst,
                             std::vector<F2Matrix> comp) {
    if (src.kmax != dst.kmax) throw std::invalid_argument("nat: truncation mismatch");
    if (static_cast<int>(comp.size()) != src.kmax + 1)
        throw std::invalid_argument("nat: wrong number of components");
    for (int k = 0; k <= src.kmax; ++k)
        if (comp[k].rows() != src.dim(k) || comp[k].cols() != dst.dim(k))
            throw std::invalid_argument("nat: component shape mismatch at object " + std::to_string(k));
    return NatTrans{src, dst, std::move(comp)};
}

bool nat_is_natural(const NatTrans& t, std::string* why) {
    for (int i = 0; i <= t.src.kmax; ++i)
        for (int j = 0; j <= t.src.kmax; ++j)
            for (const auto& phi : all_morphisms(i, j)) {
                if (t.src.act(i, j, phi) * t.comp[j] != t.comp[i] * t.dst.act(i, j, phi)) {
                    if (why)
                        *why = "naturality fails against a morphism " + std::to_string(i) + " -> " +
                               std::to_string(j);
                    return false;
                }
            }
    return true;
}

NatTrans nat_compose(const NatTrans& s, const NatTrans& t) {
    if (s.dst.dims != t.src.dims) throw std::invalid_argument("nat_compose: middle functors disagree");
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= s.src.kmax; ++k) comp.push_back(s.comp[k] * t.comp[k]);
    return NatTrans{s.src, t.dst, std::move(comp)};
}

NatTrans nat_identity(const PolyFunctor& f) {
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= f.kmax; ++k) comp.push_back(F2Matrix::identity(f.dim(k)));
    return NatTrans{f, f, std::move(comp)};
}

NatTrans nat_zero(const PolyFunctor& src, const PolyFunctor& dst) {
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= src.kmax; ++k) comp.push_back(F2Matrix(src.dim(k), dst.dim(k)));
    return NatTrans{src, dst, std::move(comp)};
}

bool nat_equal(const NatTrans& a, const NatTrans& b) {
    if (a.src.dims != b.src.dims || a.dst.dims != b.dst.dims) return false;
    return a.comp == b.comp;
}

NatTrans nat_precompose_shift(const NatTrans& t, int m) {
    PolyFunctor src = precompose_shift(t.src, m);
    PolyFunctor dst = precompose_shift(t.dst, m);
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= src.kmax; ++k) comp.push_back(t.comp[k + m]);
    return NatTrans{std::move(src), std::move(dst), std::move(comp)};
}

std::vector<NatTrans> nat_transformations(const PolyFunctor& f, const PolyFunctor& g) {
    if (f.kmax != g.kmax) throw std::invalid_argument("nat_transformations: truncation mismatch");
    int kmax = f.kmax;
    std::vector<int> offset(kmax + 2, 0);
    for (int k = 0; k <= kmax; ++k) offset[k + 1] = offset[k] + f.dim(k) * g.dim(k);
    int nvars = offset[kmax + 1];
    if (nvars == 0) return {};
    auto var = [&](int k, int r, int c) { return offset[k] + r * g.dim(k) + c; };

    std::vector<F2Matrix> rows;
    for (int i = 0; i <= kmax; ++i)
        for (int j = 0; j <= kmax; ++j)
            for (const auto& phi : all_morphisms(i, j)) {
                F2Matrix fm = f.act(i, j, phi);
                F2Matrix gm = g.act(i, j, phi);
                for (int r = 0; r < f.dim(i); ++r)
                    for (int c = 0; c < g.dim(j); ++c) {
                        F2Matrix eq(1, nvars);
                        for (int t = 0; t < f.dim(j); ++t)
                            if (fm.get(r, t)) eq.flip(0, var(j, t, c));
                        for (int t = 0; t < g.dim(i); ++t)
                            if (gm.get(t, c)) eq.flip(0, var(i, r, t));
                        if (!eq.is_zero()) rows.push_back(eq);
                    }
            }
    F2Matrix sys(static_cast<int>(rows.size()), nvars);
    for (size_t r = 0; r < rows.size(); ++r) sys.row_assign(static_cast<int>(r), rows[r], 0);
    F2Matrix sols = row_space(left_kernel(sys.transposed()));

    std::vector<NatTrans> out;
    for (int s = 0; s < sols.rows(); ++s) {
        std::vector<F2Matrix> comp;
        for (int k = 0; k <= kmax; ++k) {
            F2Matrix m(f.dim(k), g.dim(k));
            for (int r = 0; r < f.dim(k); ++r)
                for (int c = 0; c < g.dim(k); ++c)
                    if (sols.get(s, var(k, r, c))) m.set(r, c, true);
            comp.push_back(std::move(m));
        }
        out.push_back(NatTrans{f, g, std::move(comp)});
    }
    return out;
}

/* ---------------- subfunctors ---------------- */

SubFunctor sub_functor(const PolyFunctor& parent, std::vector<F2Matrix> spans,
                       const std::string& name) {
    if (static_cast<int>(spans.size()) != parent.kmax + 1)
        throw std::invalid_argument("sub_functor: wrong span count");
    std::vector<F2Matrix> basis;
    for (int k = 0; k <= parent.kmax; ++k) {
        if (spans[k].cols() != parent.dim(k) && spans[k].rows() > 0)
            throw std::invalid_argument("sub_functor: span width mismatch");
        basis.push_back(spans[k].rows() ? row_space(spans[k]) : F2Matrix(0, parent.dim(k)));
    }
    for (int i = 0; i <= parent.kmax; ++i)
        for (int j = 0; j <= parent.kmax; ++j) {
            if (basis[i].rows() == 0) continue;
            for (const auto& phi : all_morphisms(i, j))
                if (!solve_left(basis[j], basis[i] * parent.act(i, j, phi)))
                    throw std::invalid_argument("sub_functor: spans are not invariant");
        }
    SubFunctor s;
    s.parent = parent;
    s.basis = basis;
    s.functor = make_functor(parent.kmax, name, std::make_shared<SubImpl>(parent, basis));
    return s;
}

SubFunctor kernel_functor(const NatTrans& f) {
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= f.src.kmax; ++k) spans.push_back(row_space(left_kernel(f.comp[k])));
    return sub_functor(f.src, std::move(spans), "ker(" + f.src.name + " -> " + f.dst.name + ")");
}

SubFunctor image_functor(const NatTrans& f) {
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= f.src.kmax; ++k) spans.push_back(row_space(f.comp[k]));
    return sub_functor(f.dst, std::move(spans), "im(" + f.src.name + " -> " + f.dst.name + ")");
}

SubFunctor intersect_sub(const SubFunctor& a, const SubFunctor& b, const std::string& name) {
    if (a.parent.dims != b.parent.dims)
        throw std::invalid_argument("intersect_sub: different parents");
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= a.parent.kmax; ++k)
        spans.push_back(intersect_row_spaces(a.basis[k], b.basis[k]));
    return sub_functor(a.parent, std::move(spans), name);
}

SubFunctor full_sub(const PolyFunctor& parent) {
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= parent.kmax; ++k) spans.push_back(F2Matrix::identity(parent.dim(k)));
    return sub_functor(parent, std::move(spans), parent.name);
}

SubFunctor zero_sub(const PolyFunctor& parent) {
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= parent.kmax; ++k) spans.push_back(F2Matrix(0, parent.dim(k)));
    return sub_functor(parent, std::move(spans), "0");
}

NatTrans sub_inclusion(const SubFunctor& s) {
    return NatTrans{s.functor, s.parent, s.basis};
}

/* ---------------- polynomial degree ---------------- */

PolyFunctor delta_functor(const PolyFunctor& f) {
    if (f.kmax < 1) throw std::invalid_argument("delta_functor: no headroom");
    std::vector<F2Matrix> proj;
    for (int k = 0; k <= f.kmax - 1; ++k) {
        F2Matrix iota(k, k + 1);
        for (int r = 0; r < k; ++r) iota.set(r, r, true);
        F2Matrix img = row_space(f.act(k, k + 1, iota));
        proj.push_back(quotient_space(img, f.dim(k + 1)).proj);
    }
    auto impl = std::make_shared<DeltaImpl>(f, std::move(proj));
    return make_functor(f.kmax - 1, "Delta(" + f.name + ")", impl);
}

PolyDegree poly_degree(const PolyFunctor& f) {
    PolyFunctor g = f;
    int count = 0;
    while (!g.is_zero()) {
        if (g.kmax == 0) return PolyDegree{count, false};
        g = delta_functor(g);
        ++count;
    }
    return PolyDegree{count - 1, true};
}

/* ---------------- exact sequences ---------------- */

ExactCheck ses_is_exact(const FunctorSES& e) {
    ExactCheck out;
    std::string why;
    if (!nat_is_natural(e.i, &why) || !nat_is_natural(e.p, &why)) {
        out.exact = false;
        out.why = why;
        return out;
    }
    for (int k = 0; k <= e.b.kmax; ++k) {
        if (!(e.i.comp[k] * e.p.comp[k]).is_zero()) {
            out.exact = false;
            out.why = "i;p nonzero at object " + std::to_string(k);
            return out;
        }
        int ri = rank(e.i.comp[k]), rp = rank(e.p.comp[k]);
        if (ri != e.a.dim(k) || rp != e.c.dim(k) || ri + rp != e.b.dim(k)) {
            out.exact = false;
            out.why = "rank defect at object " + std::to_string(k);
            return out;
        }
    }
    return out;
}

ExactCheck two_ext_is_exact(const YonedaTwoExt& x) {
    ExactCheck out;
    std::string why;
    if (!nat_is_natural(x.f, &why) || !nat_is_natural(x.g, &why) || !nat_is_natural(x.h, &why)) {
        out.exact = false;
        out.why = why;
        return out;
    }
    for (int k = 0; k <= x.a.kmax; ++k) {
        if (!(x.f.comp[k] * x.g.comp[k]).is_zero() || !(x.g.comp[k] * x.h.comp[k]).is_zero()) {
            out.exact = false;
            out.why = "composite nonzero at object " + std::to_string(k);
            return out;
        }
        int rf = rank(x.f.comp[k]), rg = rank(x.g.comp[k]), rh = rank(x.h.comp[k]);
        if (rf != x.a.dim(k) || rh != x.c.dim(k) || rf + rg != x.b1.dim(k) ||
            rg + rh != x.b2.dim(k)) {
            out.exact = false;
            out.why = "rank defect at object " + std::to_string(k);
            return out;
        }
    }
    return out;
}

FunctorSES frobenius_ses(int kmax) {
    FunctorSES e;
    e.a = id_functor(kmax);
    e.b = symmetric_power_functor(2, kmax);
    e.c = exterior_square_functor(kmax);
    std::vector<F2Matrix> ic, pc;
    for (int k = 0; k <= kmax; ++k) {
        ic.push_back(frobenius_component(k));
        pc.push_back(s2_to_lambda2_component(k));
    }
    e.i = nat_from_components(e.a, e.b, std::move(ic));
    e.p = nat_from_components(e.b, e.c, std::move(pc));
    return e;
}

namespace {

YonedaTwoExt e1_like(const PolyFunctor& f, bool tilde) {
    // component dimensions are those of F at each object
    YonedaTwoExt x;
    int kmax = f.kmax;
    PolyFunctor s2 = symmetric_power_functor(2, kmax);
    x.a = f;
    x.b1 = compose_functor(s2, f);
    if (tilde) {
        x.b2 = compose_functor(tensor_power_functor(2, kmax), f);
        x.c = compose_functor(s2, f);
    } else {
        x.b2 = compose_functor(divided_square_functor(kmax), f);
        x.c = f;
    }
    std::vector<F2Matrix> fc, gc, hc;
    for (int k = 0; k <= kmax; ++k) {
        int m = f.dim(k);
        fc.push_back(frobenius_component(m));
        gc.push_back(tilde ? s2_to_t2_component(m) : norm_component(m));
        hc.push_back(tilde ? t2_to_s2_component(m) : gamma2_counit_component(m));
    }
    x.f = nat_from_components(x.a, x.b1, std::move(fc));
    x.g = nat_from_components(x.b1, x.b2, std::move(gc));
    x.h = nat_from_components(x.b2, x.c, std::move(hc));
    return x;
}

}  // namespace

YonedaTwoExt e1_class(int kmax) { return e1_like(id_functor(kmax), false); }
YonedaTwoExt e1_tilde_class(int kmax) { return e1_like(id_functor(kmax), true); }
YonedaTwoExt e1_composed(const PolyFunctor& f) { return e1_like(f, false); }
YonedaTwoExt e1_tilde_composed(const PolyFunctor& f) { return e1_like(f, true); }

FunctorSES ses_pullback(const FunctorSES& e, const NatTrans& t) {
    if (t.dst.dims != e.c.dims) throw std::invalid_argument("ses_pullback: target mismatch");
    int kmax = e.b.kmax;
    PolyFunctor amb = direct_sum_functor(e.b, t.src);
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= kmax; ++k)
        spans.push_back(row_space(left_kernel(F2Matrix::vstack(e.p.comp[k], t.comp[k]))));
    SubFunctor pb = sub_functor(amb, std::move(spans), "pb(" + e.b.name + ", " + t.src.name + ")");

    std::vector<F2Matrix> ic, pc;
    for (int k = 0; k <= kmax; ++k) {
        F2Matrix wide = F2Matrix::hstack(e.i.comp[k], F2Matrix(e.a.dim(k), t.src.dim(k)));
        auto x = solve_left(pb.basis[k], wide);
        if (!x) throw std::logic_error("ses_pullback: section does not land in the pullback");
        ic.push_back(*x);
        std::vector<int> xcols(t.src.dim(k));
        std::iota(xcols.begin(), xcols.end(), e.b.dim(k));
        pc.push_back(pb.basis[k].submatrix_cols(xcols));
    }
    FunctorSES out;
    out.a = e.a;
    out.b = pb.functor;
    out.c = t.src;
    out.i = nat_from_components(out.a, out.b, std::move(ic));
    out.p = nat_from_components(out.b, out.c, std::move(pc));
    return out;
}

YonedaTwoExt two_ext_pullback(const YonedaTwoExt& x, const NatTrans& t) {
    if (t.dst.dims != x.c.dims) throw std::invalid_argument("two_ext_pullback: target mismatch");
    int kmax = x.b2.kmax;
    PolyFunctor amb = direct_sum_functor(x.b2, t.src);
    std::vector<F2Matrix> spans;
    for (int k = 0; k <= kmax; ++k)
        spans.push_back(row_space(left_kernel(F2Matrix::vstack(x.h.comp[k], t.comp[k]))));
    SubFunctor pb = sub_functor(amb, std::move(spans), "pb(" + x.b2.name + ", " + t.src.name + ")");

    std::vector<F2Matrix> gc, hc;
    for (int k = 0; k <= kmax; ++k) {
        F2Matrix wide = F2Matrix::hstack(x.g.comp[k], F2Matrix(x.b1.dim(k), t.src.dim(k)));
        auto s = solve_left(pb.basis[k], wide);
        if (!s) throw std::logic_error("two_ext_pullback: middle map misses the pullback");
        gc.push_back(*s);
        std::vector<int> xcols(t.src.dim(k));
        std::iota(xcols.begin(), xcols.end(), x.b2.dim(k));
        hc.push_back(pb.basis[k].submatrix_cols(xcols));
    }
    YonedaTwoExt out;
    out.a = x.a;
    out.b1 = x.b1;
    out.b2 = pb.functor;
    out.c = t.src;
    out.f = x.f;
    out.g = nat_from_components(out.b1, out.b2, std::move(gc));
    out.h = nat_from_components(out.b2, out.c, std::move(hc));
    return out;
}

SplitResult ses_splits(const FunctorSES& e) {
    SplitResult out;
    int kmax = e.b.kmax;
    std::vector<int> offset(kmax + 2, 0);
    for (int k = 0; k <= kmax; ++k) offset[k + 1] = offset[k] + e.b.dim(k) * e.a.dim(k);
    int nvars = offset[kmax + 1];
    auto var = [&](int k, int r, int c) { return offset[k] + r * e.a.dim(k) + c; };

    std::vector<F2Matrix> rows;
    std::vector<bool> rhs;
    for (int k = 0; k <= kmax; ++k)
        for (int r = 0; r < e.a.dim(k); ++r)
            for (int c = 0; c < e.a.dim(k); ++c) {
                F2Matrix eq(1, nvars);
                for (int t = 0; t < e.b.dim(k); ++t)
                    if (e.i.comp[k].get(r, t)) eq.flip(0, var(k, t, c));
                rows.push_back(eq);
                rhs.push_back(r == c);
            }
    for (int i = 0; i <= kmax; ++i)
        for (int j = 0; j <= kmax; ++j)
            for (const auto& phi : all_morphisms(i, j)) {
                F2Matrix bm = e.b.act(i, j, phi);
                F2Matrix am = e.a.act(i, j, phi);
                for (int r = 0; r < e.b.dim(i); ++r)
                    for (int c = 0; c < e.a.dim(j); ++c) {
                        F2Matrix eq(1, nvars);
                        for (int t = 0; t < e.b.dim(j); ++t)
                            if (bm.get(r, t)) eq.flip(0, var(j, t, c));
                        for (int t = 0; t < e.a.dim(i); ++t)
                            if (am.get(t, c)) eq.flip(0, var(i, r, t));
                        if (!eq.is_zero()) {
                            rows.push_back(eq);
                            rhs.push_back(false);
                        }
                    }
            }
    F2Matrix cm(nvars, static_cast<int>(rows.size()));
    F2Matrix b(1, static_cast<int>(rows.size()));
    for (size_t t = 0; t < rows.size(); ++t) {
        for (int v = 0; v < nvars; ++v)
            if (rows[t].get(0, v)) cm.set(v, static_cast<int>(t), true);
        if (rhs[t]) b.set(0, static_cast<int>(t), true);
    }
    auto sol = solve_left(cm, b);
    if (!sol) {
        out.splits = false;
        out.note = "no natural retraction over the truncated category";
        return out;
    }
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= kmax; ++k) {
        F2Matrix m(e.b.dim(k), e.a.dim(k));
        for (int r = 0; r < e.b.dim(k); ++r)
            for (int c = 0; c < e.a.dim(k); ++c)
                if (sol->get(0, var(k, r, c))) m.set(r, c, true);
        comp.push_back(std::move(m));
    }
    out.splits = true;
    out.retraction = nat_from_components(e.b, e.a, std::move(comp));
    return out;
}

/* ---------------- resolutions and Ext^2 ---------------- */

std::vector<int> Resolution::proj_dims_at(int k) const {
    std::vector<int> out;
    for (const auto& lvl : levels) {
        int d = 0;
        for (int j : lvl) d += hom_count(j, k);
        out.push_back(d);
    }
    return out;
}

namespace {

// P^l(phi): P^l(a) -> P^l(k) on the representable basis
F2Matrix p_action(const std::vector<int>& objs, int a, int k, const F2Matrix& phi) {
    int rows = 0, cols = 0;
    for (int j : objs) {
        rows += hom_count(j, a);
        cols += hom_count(j, k);
    }
    F2Matrix out(rows, cols);
    int roff = 0, coff = 0;
    for (int j : objs) {
        int n = hom_count(j, a);
        for (int idx = 0; idx < n; ++idx) {
            F2Matrix psi = decode_mor(j, a, idx);
            out.flip(roff + idx, coff + static_cast<int>(encode_mor(psi * phi)));
        }
        roff += n;
        coff += hom_count(j, k);
    }
    return out;
}

/* matrix of the natural transformation P^l -> A with Yoneda data u_t in
 * A(j_t), evaluated at the object k */
F2Matrix rep_eval(const std::vector<int>& objs, const std::vector<F2Matrix>& u,
                  const PolyFunctor& a, int k) {
    int rows = 0;
    for (int j : objs) rows += hom_count(j, k);
    F2Matrix out(rows, a.dim(k));
    int roff = 0;
    for (size_t t = 0; t < objs.size(); ++t) {
        int n = hom_count(objs[t], k);
        for (int idx = 0; idx < n; ++idx) {
            F2Matrix row = u[t] * a.act(objs[t], k, decode_mor(objs[t], k, idx));
            out.row_assign(roff + idx, row, 0);
        }
        roff += n;
    }
    return out;
}

}  // namespace

F2Matrix resolution_diff_at(const Resolution& r, int l, int k) {
    if (l < 1 || l >= static_cast<int>(r.levels.size()))
        throw std::out_of_range("resolution_diff_at: level out of range");
    const auto& up = r.levels[l];
    const auto& down = r.levels[l - 1];
    int rows = 0, cols = 0;
    for (int j : up) rows += hom_count(j, k);
    for (int j : down) cols += hom_count(j, k);
    F2Matrix out(rows, cols);
    int roff = 0;
    for (size_t s = 0; s < up.size(); ++s) {
        int n = hom_count(up[s], k);
        for (int idx = 0; idx < n; ++idx) {
            F2Matrix psi = decode_mor(up[s], k, idx);
            int coff = 0;
            for (size_t t = 0; t < down.size(); ++t) {
                const F2Matrix& elt = r.diff[l][s][t];
                for (int ci = 0; ci < elt.cols(); ++ci)
                    if (elt.get(0, ci)) {
                        F2Matrix chi = decode_mor(down[t], up[s], ci);
                        out.flip(roff + idx, coff + static_cast<int>(encode_mor(chi * psi)));
                    }
                coff += hom_count(down[t], k);
            }
        }
        roff += n;
    }
    return out;
}

Resolution resolve(const PolyFunctor& f, int levels) {
    Resolution r;
    r.kmax = f.kmax;
    r.target = f;
    r.diff.resize(levels + 1);

    // level 0: cover F by representables on a minimal set of generators
    {
        std::vector<int> objs;
        std::vector<F2Matrix> gen;
        for (int j = 0; j <= f.kmax; ++j) {
            SpanAccum span(f.dim(j));
            for (size_t t = 0; t < objs.size(); ++t)
                for (const auto& phi : all_morphisms(objs[t], j))
                    span.add(gen[t] * f.act(objs[t], j, phi));
            for (int rbas = 0; rbas < f.dim(j) && span.dim() < f.dim(j); ++rbas) {
                F2Matrix e(1, f.dim(j));
                e.set(0, rbas, true);
                if (!span.contains(e)) {
                    objs.push_back(j);
                    gen.push_back(e);
                    for (const auto& phi : all_morphisms(j, j))
                        span.add(e * f.act(j, j, phi));
                }
            }
        }
        r.levels.push_back(objs);
        r.gens.push_back(gen);
    }

    for (int l = 1; l <= levels; ++l) {
        const std::vector<int> prev = r.levels[l - 1];  // copied: r.levels grows below
        // kernel of the previous map, evaluated at every object
        std::vector<F2Matrix> ker(f.kmax + 1);
        for (int k = 0; k <= f.kmax; ++k) {
            F2Matrix d = (l == 1) ? rep_eval(prev, r.gens[0], f, k) : resolution_diff_at(r, l - 1, k);
            ker[k] = row_space(left_kernel(d));
        }
        std::vector<int> objs;
        std::vector<F2Matrix> gen;
        for (int j = 0; j <= f.kmax; ++j) {
            int amb = 0;
            for (int o : prev) amb += hom_count(o, j);
            SpanAccum span(amb);
            for (size_t t = 0; t < objs.size(); ++t)
                for (const auto& phi : all_morphisms(objs[t], j))
                    span.add(gen[t] * p_action(prev, objs[t], j, phi));
            for (int rbas = 0; rbas < ker[j].rows() && span.dim() < ker[j].rows(); ++rbas) {
                F2Matrix w = matrix_row(ker[j], rbas);
                if (!span.contains(w)) {
                    objs.push_back(j);
                    gen.push_back(w);
                    for (const auto& phi : all_morphisms(j, j))
                        span.add(w * p_action(prev, j, j, phi));
                }
            }
        }
        r.levels.push_back(objs);
        r.gens.push_back(gen);
        // slice the generators into formal blocks over the previous level
        std::vector<std::vector<F2Matrix>> blocks;
        for (size_t s = 0; s < objs.size(); ++s) {
            std::vector<F2Matrix> row;
            int off = 0;
            for (int o : prev) {
                int n = hom_count(o, objs[s]);
                F2Matrix elt(1, n);
                for (int ci = 0; ci < n; ++ci)
                    if (gen[s].get(0, off + ci)) elt.set(0, ci, true);
                row.push_back(std::move(elt));
                off += n;
            }
            blocks.push_back(std::move(row));
        }
        r.diff[l] = std::move(blocks);
    }
    return r;
}

F2Matrix cochain_coboundary(const Resolution& r, int l, const PolyFunctor& a) {
    if (l + 1 >= static_cast<int>(r.levels.size()))
        throw std::out_of_range("cochain_coboundary: level out of range");
    const auto& low = r.levels[l];
    const auto& up = r.levels[l + 1];
    std::vector<int> roff(low.size() + 1, 0), coff(up.size() + 1, 0);
    for (size_t t = 0; t < low.size(); ++t) roff[t + 1] = roff[t] + a.dim(low[t]);
    for (size_t s = 0; s < up.size(); ++s) coff[s + 1] = coff[s] + a.dim(up[s]);
    F2Matrix out(roff[low.size()], coff[up.size()]);
    for (size_t s = 0; s < up.size(); ++s)
        for (size_t t = 0; t < low.size(); ++t) {
            const F2Matrix& elt = r.diff[l + 1][s][t];
            for (int ci = 0; ci < elt.cols(); ++ci)
                if (elt.get(0, ci))
                    xor_block(out, roff[t], coff[s],
                              a.act(low[t], up[s], decode_mor(low[t], up[s], ci)));
        }
    return out;
}

Ext2Certificate ext2_nonzero(const YonedaTwoExt& x) {
    Ext2Certificate cert;
    ExactCheck ec = two_ext_is_exact(x);
    if (!ec.exact) throw std::invalid_argument("ext2_nonzero: sequence not exact: " + ec.why);

    Resolution r = resolve(x.c, 3);
    for (const auto& lvl : r.levels) cert.level_sizes.push_back(static_cast<int>(lvl.size()));

    // phi_0: lift the augmentation through h
    std::vector<F2Matrix> u;
    for (size_t t = 0; t < r.levels[0].size(); ++t) {
        auto s = solve_left(x.h.comp[r.levels[0][t]], r.gens[0][t]);
        if (!s) throw std::logic_error("ext2_nonzero: augmentation does not lift through h");
        u.push_back(*s);
    }
    // phi_1: lift phi_0 . d_1 through g
    std::vector<F2Matrix> y;
    for (size_t s = 0; s < r.levels[1].size(); ++s) {
        int a = r.levels[1][s];
        F2Matrix w = r.gens[1][s] * rep_eval(r.levels[0], u, x.b2, a);
        if (!(w * x.h.comp[a]).is_zero())
            throw std::logic_error("ext2_nonzero: chain failed to land in ker h");
        auto sol = solve_left(x.g.comp[a], w);
        if (!sol) throw std::logic_error("ext2_nonzero: lift through g failed");
        y.push_back(*sol);
    }
    // phi_2: pull phi_1 . d_2 back through the monomorphism f; this is the cocycle
    std::vector<F2Matrix> z;
    std::vector<int> czoff(r.levels[2].size() + 1, 0);
    for (size_t t = 0; t < r.levels[2].size(); ++t) {
        int c = r.levels[2][t];
        F2Matrix w = r.gens[2][t] * rep_eval(r.levels[1], y, x.b1, c);
        auto sol = solve_left(x.f.comp[c], w);
        if (!sol) throw std::logic_error("ext2_nonzero: cocycle not in the image of f");
        z.push_back(*sol);
        czoff[t + 1] = czoff[t] + x.a.dim(c);
    }
    F2Matrix cocycle(1, czoff[r.levels[2].size()]);
    for (size_t t = 0; t < z.size(); ++t)
        for (int c = 0; c < z[t].cols(); ++c)
            if (z[t].get(0, c)) cocycle.set(0, czoff[t] + c, true);

    F2Matrix d2 = cochain_coboundary(r, 1, x.a);
    F2Matrix d3 = cochain_coboundary(r, 2, x.a);
    cert.cochain_dims = {0, d2.rows(), d2.cols(), d3.cols()};
    {
        int c0 = 0;
        for (int j : r.levels[0]) c0 += x.a.dim(j);
        cert.cochain_dims[0] = c0;
    }
    if (!(cocycle * d3).is_zero()) throw std::logic_error("ext2_nonzero: cocycle condition failed");
    cert.nonzero = !solve_left(d2, cocycle).has_value();
    cert.note = cert.nonzero ? "cocycle escapes the coboundary image"
                             : "cocycle is a coboundary over the truncated category";
    return cert;
}

/* ---------------- detection chains ---------------- */

DetectionChain detection_functor(const NatTrans& f, int d) {
    DetectionChain out;
    out.d = d;
    if (d <= 0) {
        out.note = "degree must be positive";
        return out;
    }
    PolyDegree d1 = poly_degree(f.src), d2 = poly_degree(f.dst);
    if (!d1.certified || d1.degree != d || !d2.certified || d2.degree != d) {
        out.note = "endpoints are not certified of exact degree " + std::to_string(d);
        return out;
    }
    PolyDegree di = poly_degree(image_functor(f).functor);
    if (!di.certified || di.degree != d) {
        out.note = "image is not certified of exact degree " + std::to_string(d);
        return out;
    }
    int m = d - 1;
    if (f.src.kmax - m < 1) {
        out.note = "no headroom for the shift";
        return out;
    }
    out.f1_shift = precompose_shift(f.src, m);
    out.f2_shift = precompose_shift(f.dst, m);
    NatTrans fe = nat_precompose_shift(f, m);
    PolyFunctor idk = id_functor(out.f1_shift.kmax);

    auto idnat = nat_transformations(idk, idk);
    if (idnat.size() > 1) throw std::logic_error("detection_functor: Nat(Id,Id) too large");

    auto intos = nat_transformations(idk, out.f1_shift);
    auto ontos = nat_transformations(out.f2_shift, idk);
    NatTrans idid = nat_identity(idk);
    for (const auto& io : intos) {
        for (const auto& on : ontos) {
            NatTrans c = nat_compose(nat_compose(io, fe), on);
            if (nat_equal(c, idid)) {
                out.found = true;
                out.into = io;
                out.shifted = fe;
                out.onto = on;
                out.composite_is_identity = true;
                return out;
            }
        }
    }
    out.note = "no splitting pair over the truncated category";
    return out;
}

/* ---------------- localization ---------------- */

namespace {

GModPtr build_poly_algebra(int k, int hi, const std::vector<int>& sq_sources) {
    GradedModule p(0, hi);
    p.complete = true;
    p.trust = kTrustComplete;
    if (k == 0) {
        p.set_dim(0, 1);
        return std::make_shared<const GradedModule>(std::move(p));
    }
    std::vector<std::vector<std::vector<int>>> monos(hi + 1);
    std::vector<std::map<std::vector<int>, int>> index(hi + 1);
    for (int d = 0; d <= hi; ++d) {
        monos[d] = mono_list(k, d);
        index[d] = mono_index(monos[d]);
        p.set_dim(d, static_cast<int>(monos[d].size()));
    }
    // total square distributions: Sq^i(prod u_s^{a_s}) via per-variable Cartan
    for (int d : sq_sources) {
        if (d < 0 || d > hi) continue;
        for (int i = 1; d + i <= hi; i *= 2) {
            F2Matrix mat(static_cast<int>(monos[d].size()), static_cast<int>(monos[d + i].size()));
            for (size_t r = 0; r < monos[d].size(); ++r) {
                const auto& a = monos[d][r];
                // distribute i among the variables, j_s <= a_s, parity by Lucas
                std::vector<int> j(k, 0);
                std::function<void(int, int)> rec = [&](int s, int rem) {
                    if (s == k - 1) {
                        if (rem > a[s] || !binom_odd(a[s], rem)) return;
                        j[s] = rem;
                        std::vector<int> tgt(k);
                        for (int t = 0; t < k; ++t) tgt[t] = a[t] + j[t];
                        mat.flip(static_cast<int>(r), index[d + i].at(tgt));
                        j[s] = 0;
                        return;
                    }
                    for (int js = 0; js <= std::min(rem, a[s]); ++js) {
                        if (!binom_odd(a[s], js)) continue;
                        j[s] = js;
                        rec(s + 1, rem - js);
                        j[s] = 0;
                    }
                };
                rec(0, i);
            }
            p.set_sq(i, d, mat);
        }
    }
    return std::make_shared<const GradedModule>(std::move(p));
}

struct FlatBasis {
    std::vector<std::pair<int, std::pair<int, int>>> blocks;  // degree -> (mdim, pdim)
    int len = 0;
    F2Matrix basis;  // one row per hom basis element
};

FlatBasis flatten_homs(const GradedModule& m, const GradedModule& p,
                       const std::vector<ModuleMap>& basis) {
    FlatBasis fb;
    for (int d = m.dmin; d <= m.dmax; ++d) {
        int md = m.dim(d), pd = p.dim(d);
        if (md == 0 || pd == 0) continue;
        fb.blocks.push_back({d, {md, pd}});
        fb.len += md * pd;
    }
    fb.basis = F2Matrix(static_cast<int>(basis.size()), std::max(fb.len, 0));
    for (size_t r = 0; r < basis.size(); ++r) {
        int off = 0;
        for (const auto& [d, sz] : fb.blocks) {
            F2Matrix mt = basis[r].mat(d);
            for (int a = 0; a < sz.first; ++a)
                for (int b = 0; b < sz.second; ++b)
                    if (mt.get(a, b)) fb.basis.set(static_cast<int>(r), off + a * sz.second + b, true);
            off += sz.first * sz.second;
        }
    }
    return fb;
}

F2Matrix flatten_mats(const FlatBasis& fb, const std::function<F2Matrix(int)>& mat_at) {
    F2Matrix row(1, std::max(fb.len, 0));
    int off = 0;
    for (const auto& [d, sz] : fb.blocks) {
        F2Matrix mt = mat_at(d);
        for (int a = 0; a < sz.first; ++a)
            for (int b = 0; b < sz.second; ++b)
                if (mt.get(a, b)) row.set(0, off + a * sz.second + b, true);
        off += sz.first * sz.second;
    }
    return row;
}

class LocImpl final : public FunctorImpl {
  public:
    LocImpl(GModPtr m, std::vector<GModPtr> palg, std::vector<HomSpace> homs)
        : m_(std::move(m)), palg_(std::move(palg)), homs_(std::move(homs)) {
        for (size_t k = 0; k < homs_.size(); ++k)
            flats_.push_back(flatten_homs(*m_, *palg_[k], homs_[k].basis));
    }
    int dim(int k) const override { return static_cast<int>(homs_[k].basis.size()); }

    F2Matrix act(int i, int j, const F2Matrix& phi) const override {
        uint64_t key = (uint64_t(i) << 40) | (uint64_t(j) << 32) | encode_mor(phi);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        int hi = dim(i), hj = dim(j);
        F2Matrix t(hj, std::max(flats_[i].len, 0));
        if (hj > 0 && flats_[i].len > 0) {
            // substitution matrices of H^*(B phi): P_j -> P_i at the source degrees
            std::map<int, F2Matrix> subst;
            for (const auto& [d, sz] : flats_[i].blocks) {
                (void)sz;
                subst[d] = substitution_at(i, j, phi, d);
            }
            for (int r = 0; r < hj; ++r) {
                const ModuleMap& g = homs_[j].basis[r];
                F2Matrix row = flatten_mats(flats_[i], [&](int d) {
                    F2Matrix gm = g.mat(d);
                    return gm.rows() ? gm * subst.at(d) : F2Matrix(m_->dim(d), palg_[i]->dim(d));
                });
                t.row_assign(r, row, 0);
            }
        }
        F2Matrix tcoords(hj, hi);
        if (hj > 0 && hi > 0) {
            auto sol = solve_left(flats_[i].basis, t);
            if (!sol) throw std::logic_error("localize: composite escapes the hom space");
            tcoords = *sol;
        }
        F2Matrix out = tcoords.transposed();
        cache_.emplace(key, out);
        return out;
    }

    // monomial substitution u'_t -> sum_s phi[s][t] u_s on degree-d parts
    F2Matrix substitution_at(int i, int j, const F2Matrix& phi, int d) const {
        auto src = mono_list(j, d);
        auto dst = mono_list(i, d);
        auto dix = mono_index(dst);
        F2Matrix out(static_cast<int>(src.size()), static_cast<int>(dst.size()));
        for (size_t r = 0; r < src.size(); ++r) {
            Poly pl;
            poly_add(pl, std::vector<int>(i, 0));
            for (int t = 0; t < j; ++t) {
                std::vector<bool> coeff(i);
                for (int s = 0; s < i; ++s) coeff[s] = phi.get(s, t);
                for (int rep = 0; rep < src[r][t]; ++rep) pl = poly_mul_linear(pl, coeff);
            }
            for (const auto& [e, on] : pl) {
                (void)on;
                out.set(static_cast<int>(r), dix.at(e), true);
            }
        }
        return out;
    }

    const FlatBasis& flat(int k) const { return flats_[k]; }
    const GModPtr& palg(int k) const { return palg_[k]; }

  private:
    GModPtr m_;
    std::vector<GModPtr> palg_;
    std::vector<HomSpace> homs_;
    std::vector<FlatBasis> flats_;
    mutable std::map<uint64_t, F2Matrix> cache_;
};

const LocImpl& loc_impl(const Localization& l) {
    auto p = dynamic_cast<const LocImpl*>(l.functor.impl.get());
    if (!p) throw std::invalid_argument("expected a localization functor");
    return *p;
}

}  // namespace

GModPtr polynomial_algebra_module(int k, Window w) {
    std::vector<int> all;
    for (int d = 0; d <= w.hi; ++d) all.push_back(d);
    return build_poly_algebra(k, w.hi, all);
}

Localization localize(const GModPtr& m, int kmax) {
    if (!m) throw std::invalid_argument("localize: null module");
    Localization out;
    out.m = m;
    out.kmax = kmax;
    out.exact = m->complete;
    int hi = std::max(2 * std::max(m->dmax, 0), 0);
    std::vector<int> support;
    for (int d = m->dmin; d <= m->dmax; ++d)
        if (m->dim(d) > 0) support.push_back(d);
    std::vector<GModPtr> palg;
    for (int k = 0; k <= kmax; ++k) palg.push_back(build_poly_algebra(k, hi, support));
    for (int k = 0; k <= kmax; ++k) out.homs.push_back(hom_unstable(*m, *palg[k]));
    for (const auto& h : out.homs) out.exact = out.exact && h.exact;
    auto impl = std::make_shared<LocImpl>(m, palg, out.homs);
    out.functor = make_functor(kmax, "l(M)", impl);
    return out;
}

NatTrans localize_map(const Localization& la, const Localization& lb, const ModuleMap& f) {
    if (f.shift != 0) throw std::invalid_argument("localize_map: shift must be 0");
    const LocImpl& ia = loc_impl(la);
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= la.kmax; ++k) {
        int ha = la.functor.dim(k), hb = lb.functor.dim(k);
        F2Matrix t(hb, std::max(ia.flat(k).len, 0));
        for (int r = 0; r < hb; ++r) {
            ModuleMap c = compose(f, lb.homs[k].basis[r]);
            t.row_assign(r, flatten_mats(ia.flat(k), [&](int d) {
                             F2Matrix mt = c.mat(d);
                             return mt;
                         }),
                         0);
        }
        F2Matrix coords(hb, ha);
        if (hb > 0 && ha > 0) {
            auto sol = solve_left(ia.flat(k).basis, t);
            if (!sol) throw std::logic_error("localize_map: composite escapes the hom space");
            coords = *sol;
        }
        comp.push_back(coords.transposed());
    }
    return nat_from_components(la.functor, lb.functor, std::move(comp));
}

NatTrans localize_phi_twisted(const Localization& la, const Localization& lb,
                              const ModuleMap& f) {
    if (f.shift != 0) throw std::invalid_argument("localize_phi_twisted: shift must be 0");
    const LocImpl& ia = loc_impl(la);
    const GradedModule& a = *la.m;
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= la.kmax; ++k) {
        int ha = la.functor.dim(k), hb = lb.functor.dim(k);
        const GradedModule& pk = *ia.palg(k);
        F2Matrix t(hb, std::max(ia.flat(k).len, 0));
        for (int r = 0; r < hb; ++r) {
            ModuleMap c = compose(f, lb.homs[k].basis[r]);
            // untwist along the squaring injection P^d -> P^{2d}
            t.row_assign(r, flatten_mats(ia.flat(k), [&](int d) {
                             F2Matrix cm = c.mat(2 * d);
                             if (cm.rows() != a.dim(d))
                                 throw std::logic_error("localize_phi_twisted: source is not Phi-shaped");
                             if (cm.rows() == 0 || cm.cols() == 0 || pk.dim(d) == 0)
                                 return F2Matrix(a.dim(d), pk.dim(d));
                             // squaring matrix on monomials
                             auto src = mono_list(k, d);
                             auto dst = mono_list(k, 2 * d);
                             auto dix = mono_index(dst);
                             F2Matrix q(static_cast<int>(src.size()), static_cast<int>(dst.size()));
                             for (size_t s = 0; s < src.size(); ++s) {
                                 std::vector<int> e = src[s];
                                 for (auto& x : e) x *= 2;
                                 q.set(static_cast<int>(s), dix.at(e), true);
                             }
                             auto u = solve_left(q, cm);
                             if (!u) throw std::logic_error("localize_phi_twisted: image is not a square");
                             return *u;
                         }),
                         0);
        }
        F2Matrix coords(hb, ha);
        if (hb > 0 && ha > 0) {
            auto sol = solve_left(ia.flat(k).basis, t);
            if (!sol) throw std::logic_error("localize_phi_twisted: untwist escapes the hom space");
            coords = *sol;
        }
        comp.push_back(coords.transposed());
    }
    return nat_from_components(la.functor, lb.functor, std::move(comp));
}

NatTrans localize_square_map(const Localization& la, const Localization& lb,
                             const ModuleMap& mu) {
    if (mu.shift != 0) throw std::invalid_argument("localize_square_map: shift must be 0");
    const LocImpl& ia = loc_impl(la);
    const GradedModule& a = *la.m;
    GModPtr t2a = tensor_product(a, a);
    {
        ModuleMap tau = tau_map(mu.src, la.m);
        if (!maps_equal(compose(tau, mu), mu))
            throw std::invalid_argument("localize_square_map: product is not symmetric");
    }
    PolyFunctor src = compose_functor(symmetric_power_functor(2, la.kmax), la.functor);
    std::vector<F2Matrix> comp;
    for (int k = 0; k <= la.kmax; ++k) {
        int h = la.functor.dim(k), hb = lb.functor.dim(k);
        const GradedModule& pk = *ia.palg(k);
        // flatten candidates over the support of the tensor square, clipped to
        // the window where the target hom space is meaningful
        std::vector<std::pair<int, std::pair<int, int>>> blocks;
        int len = 0;
        int ecap = std::min(t2a->dmax, 2 * std::max(lb.m->dmax, 0));
        for (int e = t2a->dmin; e <= ecap; ++e) {
            int md = t2a->dim(e), pd = pk.dim(e);
            if (md == 0 || pd == 0) continue;
            blocks.push_back({e, {md, pd}});
            len += md * pd;
        }
        auto flatten_t2 = [&](const std::function<F2Matrix(int)>& mat_at) {
            F2Matrix row(1, std::max(len, 0));
            int off = 0;
            for (const auto& [e, sz] : blocks) {
                F2Matrix mt = mat_at(e);
                for (int r = 0; r < sz.first; ++r)
                    for (int c = 0; c < sz.second; ++c)
                        if (mt.get(r, c)) row.set(0, off + r * sz.second + c, true);
                off += sz.first * sz.second;
            }
            return row;
        };
        // multiplication matrices P^p tensor P^q -> P^{p+q}
        auto mult_mat = [&](int p, int q) {
            auto mp = mono_list(k, p), mq = mono_list(k, q);
            auto tgt = mono_index(mono_list(k, p + q));
            F2Matrix mm(static_cast<int>(mp.size() * mq.size()), static_cast<int>(tgt.size()));
            for (size_t r1 = 0; r1 < mp.size(); ++r1)
                for (size_t r2 = 0; r2 < mq.size(); ++r2) {
                    std::vector<int> e(k);
                    for (int t = 0; t < k; ++t) e[t] = mp[r1][t] + mq[r2][t];
                    mm.set(static_cast<int>(r1 * mq.size() + r2), tgt.at(e), true);
                }
            return mm;
        };
        auto xi_row = [&](int r1, int r2) {
            const ModuleMap& f1 = la.homs[k].basis[r1];
            const ModuleMap& f2 = la.homs[k].basis[r2];
            return flatten_t2([&](int e) {
                F2Matrix mt(t2a->dim(e), pk.dim(e));
                for (const auto& tb : tensor_blocks(a, a, e)) {
                    F2Matrix f1m = f1.mat(tb.p), f2m = f2.mat(tb.q);
                    if (pk.dim(tb.p) == 0 || pk.dim(tb.q) == 0) continue;
                    xor_block(mt, tb.offset, 0, f1m.kron(f2m) * mult_mat(tb.p, tb.q));
                }
                return mt;
            });
        };
        // symmetrized pairing rows, indexed like the S^2 monomial basis
        F2Matrix xi(src.dim(k), std::max(len, 0));
        for (int a1 = 0; a1 < h; ++a1)
            for (int a2 = a1; a2 < h; ++a2) {
                F2Matrix row = xi_row(a1, a2);
                if (a1 != a2) row.row_xor(0, xi_row(a2, a1), 0);
                xi.row_assign(pair_index(h, a1, a2), row, 0);
            }

        F2Matrix ck(src.dim(k), hb);
        for (int r = 0; r < hb; ++r) {
            ModuleMap theta = compose(mu, lb.homs[k].basis[r]);
            F2Matrix th = flatten_t2([&](int e) { return theta.mat(e); });
            auto sol = solve_left(xi, th);
            if (!sol)
                throw std::logic_error(
                    "localize_square_map: pairing not solvable (window too small?)");
            for (int c = 0; c < src.dim(k); ++c)
                if (sol->get(0, c)) ck.set(c, r, true);
        }
        comp.push_back(std::move(ck));
    }
    return nat_from_components(src, lb.functor, std::move(comp));
}

/* ---------------- obstruction pipeline ---------------- */

ObstructionReport obstruction(int n, const PolyFunctor& f1, const SubFunctor& k) {
    ObstructionReport rep;
    rep.n = n;
    rep.f1_name = f1.name;
    rep.f1_dims = f1.dims;
    rep.k_name = k.functor.name;
    rep.k_dims = k.functor.dims;
    rep.omega = (n == 1) ? "j*(e1-tilde o F1), certified through i*(e1 o F1) on K meet F1"
                         : "i*(e1 o F1)";

    if (n == 1) {
        std::vector<int> expect;
        for (int kk = 0; kk <= f1.kmax; ++kk)
            expect.push_back(static_cast<int>(binom(f1.dim(kk) + 1, 2)));
        if (k.parent.dims != expect)
            throw std::invalid_argument("obstruction: K does not sit inside S^2 o F1");
    } else {
        if (k.parent.dims != f1.dims)
            throw std::invalid_argument("obstruction: K does not sit inside F1");
    }

    PolyDegree d = poly_degree(f1);
    if (!d.certified) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "degree of F1 exceeds the truncation";
        return rep;
    }
    rep.d = d.degree;
    if (d.degree <= 0) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "F1 must have positive polynomial degree";
        return rep;
    }

    // the test subfunctor: K itself for n >= 2, K meet F1 under Frobenius for n = 1
    SubFunctor test = k;
    NatTrans incl = sub_inclusion(k);
    if (n == 1) {
        std::vector<F2Matrix> fr;
        for (int kk = 0; kk <= f1.kmax; ++kk) fr.push_back(row_space(frobenius_component(f1.dim(kk))));
        SubFunctor frob = sub_functor(k.parent, std::move(fr), "F1 (squares)");
        test = intersect_sub(k, frob, "K meet F1");
        std::vector<F2Matrix> ic;
        for (int kk = 0; kk <= f1.kmax; ++kk) {
            auto x = solve_left(frobenius_component(f1.dim(kk)), test.basis[kk]);
            if (!x) throw std::logic_error("obstruction: intersection escapes the Frobenius image");
            ic.push_back(*x);
        }
        incl = nat_from_components(test.functor, f1, std::move(ic));
    }

    PolyDegree kd = poly_degree(test.functor);
    if (!kd.certified) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "degree of the test subfunctor exceeds the truncation";
        return rep;
    }
    rep.k_degree = kd.degree;
    if (kd.degree < d.degree) {
        rep.verdict = "consistent";
        rep.note = "test subfunctor drops degree";
        return rep;
    }

    rep.verdict = "fires";
    DetectionChain chain = detection_functor(incl, d.degree);
    rep.detection_certificate = chain.found && chain.composite_is_identity;
    YonedaTwoExt pulled = two_ext_pullback(e1_composed(f1), incl);
    Ext2Certificate cert = ext2_nonzero(pulled);
    rep.ext2_certificate = cert.nonzero;
    rep.note = "test subfunctor keeps exact degree " + std::to_string(d.degree);
    if (!rep.detection_certificate) rep.note += "; detection chain not found: " + chain.note;
    if (!rep.ext2_certificate) rep.note += "; truncated Ext^2 class vanished: " + cert.note;
    return rep;
}

ObstructionReport obstruction_from_module(const GModPtr& m, int n, int kmax) {
    if (n < 2) throw std::invalid_argument("obstruction_from_module: requires n >= 2");
    ObstructionReport rep;
    rep.n = n;
    NilCertificate nc = in_nil_s(m, n);
    if (nc.verdict != Verdict::Yes) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "module not certified to lie in Nil_" + std::to_string(n) + " (" +
                   verdict_name(nc.verdict) + ")";
        return rep;
    }
    NilFiltration filt = nil_filtration(m, n + 2);
    DeltaData dd = delta_n(m, filt, n);
    Localization la = localize(dd.rho_n.rho, kmax);
    Localization lb = localize(dd.rho_n1.rho, kmax);
    NatTrans ldelta = localize_phi_twisted(la, lb, dd.delta);
    SubFunctor k = kernel_functor(ldelta);
    rep = obstruction(n, la.functor, k);
    rep.n = n;
    rep.f1_name = "l(rho_" + std::to_string(n) + ")";
    rep.k_name = "ker(l(delta_" + std::to_string(n) + "))";
    if (!la.exact || !lb.exact) rep.note += "; localization windowed (module incomplete)";
    if (!m->complete)
        rep.note += "; nil filtration forced by the window through degree " +
                    std::to_string(filt.trust);
    return rep;
}

RealizabilityReport realizability(const UnstableAlgebra& alg, int kmax) {
    RealizabilityReport rep;
    AlgebraReport ar = validate_algebra(alg);
    if (!ar.ok) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "not a valid unstable algebra";
        if (!ar.problems.empty()) rep.note += ": " + ar.problems.front();
        return rep;
    }
    const GModPtr& m = alg.module;
    if (m->bottom_degree() < 2) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "augmentation ideal is not 1-connected";
        return rep;
    }
    NilFiltration filt = nil_filtration(m, 3);
    RhoLayer r1 = rho_layer(m, filt, 1);
    if (r1.rho->total_dim() == 0) {
        rep.verdict = "hypothesis-not-met";
        rep.note = "rho_1 vanishes";
        return rep;
    }
    Localization la = localize(r1.rho, kmax);
    PolyDegree d = poly_degree(la.functor);
    if (!d.certified || d.degree <= 0) {
        rep.verdict = "hypothesis-not-met";
        rep.note = d.certified ? "l(rho_1) has degree 0" : "degree of l(rho_1) exceeds the truncation";
        return rep;
    }
    rep.hypotheses_ok = true;
    rep.d = d.degree;

    // cup-square map Phi M -> M / nil_3
    GModPtr pm = phi(m);
    ModuleMap s0{pm, m, 0, {}};
    for (int dd = std::max(1, m->dmin); 2 * dd <= m->dmax; ++dd) {
        if (m->dim(dd) == 0 || m->dim(2 * dd) == 0) continue;
        s0.set_mat(2 * dd, m->sq(dd, dd));
    }
    QuotientProjection q3 = quotient_by(m, trusted_part(m, filt, 3));
    ModuleMap gate_map = compose(s0, q3.proj);
    SubInclusion img = submodule(q3.module, image_spans(gate_map));
    Localization lim = localize(img.module, kmax);
    PolyDegree di = poly_degree(lim.functor);
    if (!di.certified) {
        rep.verdict = "inconclusive";
        rep.note = "degree of the cup-square image exceeds the truncation";
        return rep;
    }
    rep.image_degree = di.degree;
    rep.gate = di.degree < d.degree;
    if (!rep.gate) {
        rep.verdict = "inconclusive";
        rep.note = "cup-square image keeps full degree; the gate does not apply";
        return rep;
    }
    rep.verdict = "not-realizable";

    // n = 1 certificate: K = ker(S^2 o l(rho_1) -> l(rho_2))
    RhoLayer r2 = rho_layer(m, filt, 2);
    Localization lb = localize(r2.rho, kmax);

    GModPtr t2r = tensor_product(*r1.rho, *r1.rho);
    ModuleMap mu{t2r, r2.rho, 0, {}};
    for (int e = t2r->dmin; e <= t2r->dmax; ++e) {
        int rows = t2r->dim(e);
        if (rows == 0 || r2.rho->dim(e) == 0) continue;
        F2Matrix mt(rows, r2.rho->dim(e));
        bool any = false;
        for (const auto& tb : tensor_blocks(*r1.rho, *r1.rho, e)) {
            // lift both factors into nil_1, multiply, project to the second layer
            auto sec = [&](int deg) -> std::optional<F2Matrix> {
                F2Matrix pr = r1.layer_q.proj.mat(deg + 1);
                auto s = solve_left(pr, F2Matrix::identity(pr.cols()));
                if (!s) return std::nullopt;
                return *s * r1.sub.incl.mat(deg + 1);
            };
            auto sp = sec(tb.p), sq = sec(tb.q);
            if (!sp || !sq) continue;
            F2Matrix big(tb.dim_a * tb.dim_b, alg.t2->dim(e + 2));
            int moff = -1;
            for (const auto& mb : tensor_blocks(*m, *m, e + 2))
                if (mb.p == tb.p + 1 && mb.q == tb.q + 1) moff = mb.offset;
            if (moff < 0) continue;
            xor_block(big, 0, moff, sp->kron(*sq));
            F2Matrix prod = big * alg.product.mat(e + 2);
            auto in2 = solve_left(r2.sub.incl.mat(e + 2), prod);
            if (!in2)
                throw std::logic_error("realizability: products do not respect the nil filtration");
            F2Matrix down = *in2 * r2.layer_q.proj.mat(e + 2);
            xor_block(mt, tb.offset, 0, down);
            any = any || !down.is_zero();
        }
        if (any) mu.set_mat(e, mt);
    }
    NatTrans sq2 = localize_square_map(la, lb, mu);
    SubFunctor k = kernel_functor(sq2);
    rep.obstruction = obstruction(1, la.functor, k);
    rep.obstruction.f1_name = "l(rho_1)";
    rep.obstruction.k_name = "ker(S^2 o l(rho_1) -> l(rho_2))";
    if (!m->complete)
        rep.note = "nil filtration forced by the window through degree " +
                   std::to_string(filt.trust);
    return rep;
}

}  // namespace nilops
