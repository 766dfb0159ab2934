#include "nilops/f2.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace nilops {

F2Matrix F2Matrix::identity(int n) {
    F2Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.set(i, i, true);
    return m;
}

bool F2Matrix::row_zero(int r) const {
    for (int k = 0; k < wpr_; ++k)
        if (w_[idx(r) + k]) return false;
    return true;
}

bool F2Matrix::is_zero() const {
    for (uint64_t word : w_)
        if (word) return false;
    return true;
}

void F2Matrix::row_xor(int dst, const F2Matrix& src, int srow) {
    for (int k = 0; k < wpr_; ++k) w_[idx(dst) + k] ^= src.w_[src.idx(srow) + k];
}

void F2Matrix::row_assign(int dst, const F2Matrix& src, int srow) {
    for (int k = 0; k < wpr_; ++k) w_[idx(dst) + k] = src.w_[src.idx(srow) + k];
}

F2Matrix F2Matrix::operator*(const F2Matrix& o) const {
    if (cols_ != o.rows_) throw std::logic_error("F2Matrix: dimension mismatch in product");
    F2Matrix out(rows_, o.cols_);
    for (int r = 0; r < rows_; ++r) {
        for (int k = 0; k < wpr_; ++k) {
            uint64_t word = w_[idx(r) + k];
            while (word) {
                int c = (k << 6) + __builtin_ctzll(word);
                word &= word - 1;
                out.row_xor(r, o, c);
            }
        }
    }
    return out;
}

F2Matrix F2Matrix::operator+(const F2Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw std::logic_error("F2Matrix: dimension mismatch in sum");
    F2Matrix out = *this;
    for (size_t i = 0; i < out.w_.size(); ++i) out.w_[i] ^= o.w_[i];
    return out;
}

F2Matrix F2Matrix::transposed() const {
    F2Matrix out(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
        for (int k = 0; k < wpr_; ++k) {
            uint64_t word = w_[idx(r) + k];
            while (word) {
                int c = (k << 6) + __builtin_ctzll(word);
                word &= word - 1;
                out.set(c, r, true);
            }
        }
    return out;
}

F2Matrix F2Matrix::kron(const F2Matrix& o) const {
    F2Matrix out(rows_ * o.rows_, cols_ * o.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < o.rows_; ++j) {
            int r = i * o.rows_ + j;
            for (int c1 = 0; c1 < cols_; ++c1) {
                if (!get(i, c1)) continue;
                for (int k = 0; k < o.wpr_; ++k) {
                    uint64_t word = o.w_[o.idx(j) + k];
                    while (word) {
                        int c2 = (k << 6) + __builtin_ctzll(word);
                        word &= word - 1;
                        out.set(r, c1 * o.cols_ + c2, true);
                    }
                }
            }
        }
    return out;
}

F2Matrix F2Matrix::submatrix_rows(const std::vector<int>& rows) const {
    F2Matrix out((int)rows.size(), cols_);
    for (size_t i = 0; i < rows.size(); ++i) out.row_assign((int)i, *this, rows[i]);
    return out;
}

F2Matrix F2Matrix::submatrix_cols(const std::vector<int>& cols) const {
    F2Matrix out(rows_, (int)cols.size());
    for (int r = 0; r < rows_; ++r)
        for (size_t j = 0; j < cols.size(); ++j)
            if (get(r, cols[j])) out.set(r, (int)j, true);
    return out;
}

F2Matrix F2Matrix::vstack(const F2Matrix& a, const F2Matrix& b) {
    if (a.cols_ != b.cols_) throw std::logic_error("F2Matrix: vstack column mismatch");
    F2Matrix out(a.rows_ + b.rows_, a.cols_);
    for (int r = 0; r < a.rows_; ++r) out.row_assign(r, a, r);
    for (int r = 0; r < b.rows_; ++r) out.row_assign(a.rows_ + r, b, r);
    return out;
}

F2Matrix F2Matrix::hstack(const F2Matrix& a, const F2Matrix& b) {
    if (a.rows_ != b.rows_) throw std::logic_error("F2Matrix: hstack row mismatch");
    F2Matrix out(a.rows_, a.cols_ + b.cols_);
    for (int r = 0; r < a.rows_; ++r) {
        for (int c = 0; c < a.cols_; ++c) if (a.get(r, c)) out.set(r, c, true);
        for (int c = 0; c < b.cols_; ++c) if (b.get(r, c)) out.set(r, a.cols_ + c, true);
    }
    return out;
}

F2Matrix F2Matrix::dsum(const F2Matrix& a, const F2Matrix& b) {
    F2Matrix out(a.rows_ + b.rows_, a.cols_ + b.cols_);
    for (int r = 0; r < a.rows_; ++r)
        for (int c = 0; c < a.cols_; ++c) if (a.get(r, c)) out.set(r, c, true);
    for (int r = 0; r < b.rows_; ++r)
        for (int c = 0; c < b.cols_; ++c) if (b.get(r, c)) out.set(a.rows_ + r, a.cols_ + c, true);
    return out;
}

std::string F2Matrix::row_string(int r) const {
    std::string s(cols_, '0');
    for (int c = 0; c < cols_; ++c)
        if (get(r, c)) s[c] = '1';
    return s;
}

std::optional<F2Matrix> F2Matrix::from_row_strings(const std::vector<std::string>& rows) {
    int nc = rows.empty() ? 0 : (int)rows[0].size();
    F2Matrix out((int)rows.size(), nc);
    for (size_t r = 0; r < rows.size(); ++r) {
        if ((int)rows[r].size() != nc) return std::nullopt;
        for (int c = 0; c < nc; ++c) {
            if (rows[r][c] == '1') out.set((int)r, c, true);
            else if (rows[r][c] != '0') return std::nullopt;
        }
    }
    return out;
}

size_t F2Matrix::hash() const {
    // FNV-1a over the packed words plus the shape.
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix((uint64_t)rows_ << 32 | (uint32_t)cols_);
    for (uint64_t word : w_) mix(word);
    return (size_t)h;
}

Echelon echelon_form(const F2Matrix& a) {
    Echelon e;
    e.rref = a;
    e.transform = F2Matrix::identity(a.rows());
    int r = 0;
    for (int c = 0; c < a.cols() && r < a.rows(); ++c) {
        int piv = -1;
        for (int i = r; i < a.rows(); ++i)
            if (e.rref.get(i, c)) { piv = i; break; }
        if (piv < 0) continue;
        if (piv != r) {
            // swap rows piv and r in both matrices
            F2Matrix tmp(1, a.cols());
            tmp.row_assign(0, e.rref, r);
            e.rref.row_assign(r, e.rref, piv);
            e.rref.row_assign(piv, tmp, 0);
            F2Matrix tmpt(1, a.rows());
            tmpt.row_assign(0, e.transform, r);
            e.transform.row_assign(r, e.transform, piv);
            e.transform.row_assign(piv, tmpt, 0);
        }
        for (int i = 0; i < a.rows(); ++i) {
            if (i != r && e.rref.get(i, c)) {
                e.rref.row_xor(i, e.rref, r);
                e.transform.row_xor(i, e.transform, r);
            }
        }
        e.pivots.push_back(c);
        ++r;
    }
    e.rank = r;
    return e;
}

int rank(const F2Matrix& a) { return echelon_form(a).rank; }

F2Matrix row_space(const F2Matrix& a) {
    Echelon e = echelon_form(a);
    std::vector<int> keep(e.rank);
    for (int i = 0; i < e.rank; ++i) keep[i] = i;
    return e.rref.submatrix_rows(keep);
}

F2Matrix left_kernel(const F2Matrix& a) {
    Echelon e = echelon_form(a);
    std::vector<int> zero_rows;
    for (int i = e.rank; i < a.rows(); ++i) zero_rows.push_back(i);
    return row_space(e.transform.submatrix_rows(zero_rows));
}

std::optional<F2Matrix> solve_left(const F2Matrix& a, const F2Matrix& b) {
    if (b.cols() != a.cols()) return std::nullopt;
    Echelon e = echelon_form(a);
    F2Matrix x(b.rows(), a.rows());
    F2Matrix residue = b;
    for (int r = 0; r < b.rows(); ++r) {
        for (int i = 0; i < e.rank; ++i) {
            if (residue.get(r, e.pivots[i])) {
                residue.row_xor(r, e.rref, i);
                x.row_xor(r, e.transform, i);
            }
        }
        if (!residue.row_zero(r)) return std::nullopt;
    }
    return x;
}

std::optional<F2Matrix> solve_right(const F2Matrix& a, const F2Matrix& b) {
    if (b.rows() != a.rows()) return std::nullopt;
    auto xt = solve_left(a.transposed(), b.transposed());
    if (!xt) return std::nullopt;
    return xt->transposed();
}

bool rows_contained(const F2Matrix& a, const F2Matrix& b) {
    return solve_left(b, a).has_value();
}

F2Matrix intersect_row_spaces(const F2Matrix& a, const F2Matrix& b) {
    // Zassenhaus: kernel of [A; B] -> F2^n applied to the A block.
    F2Matrix ra = row_space(a), rb = row_space(b);
    if (ra.rows() == 0 || rb.rows() == 0) return F2Matrix(0, a.cols());
    F2Matrix stacked = F2Matrix::vstack(ra, rb);
    F2Matrix ker = left_kernel(stacked);  // rows (x|y) with x*ra + y*rb = 0
    F2Matrix xpart = ker.submatrix_cols([&] {
        std::vector<int> c(ra.rows());
        for (int i = 0; i < ra.rows(); ++i) c[i] = i;
        return c;
    }());
    return row_space(xpart * ra);
}

QuotientSpace quotient_space(const F2Matrix& subspace_basis, int ambient_dim) {
    QuotientSpace q;
    Echelon e = echelon_form(subspace_basis);
    std::vector<bool> is_pivot(ambient_dim, false);
    for (int p : e.pivots) is_pivot[p] = true;
    for (int c = 0; c < ambient_dim; ++c)
        if (!is_pivot[c]) q.coords.push_back(c);
    q.dim = (int)q.coords.size();
    q.proj = F2Matrix(ambient_dim, q.dim);
    for (int c = 0; c < ambient_dim; ++c) {
        // reduce e_c modulo the subspace, read off non-pivot coordinates
        F2Matrix v(1, ambient_dim);
        v.set(0, c, true);
        for (int i = 0; i < e.rank; ++i)
            if (v.get(0, e.pivots[i])) v.row_xor(0, e.rref, i);
        for (int j = 0; j < q.dim; ++j)
            if (v.get(0, q.coords[j])) q.proj.set(c, j, true);
    }
    q.lift = F2Matrix(q.dim, ambient_dim);
    for (int j = 0; j < q.dim; ++j) q.lift.set(j, q.coords[j], true);
    return q;
}

std::vector<F2Matrix> all_subspaces(int n) {
    if (n > 5) throw std::logic_error("all_subspaces: ambient dimension too large");
    std::vector<F2Matrix> out;
    // Enumerate reduced echelon forms directly: choose the pivot columns,
    // then all assignments of the free entries.
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> piv;
        for (int c = 0; c < n; ++c)
            if (mask & (1 << c)) piv.push_back(c);
        int k = (int)piv.size();
        // free positions: entries (row i, col c) with c > piv[i], c not a pivot
        std::vector<std::pair<int, int>> freepos;
        for (int i = 0; i < k; ++i)
            for (int c = piv[i] + 1; c < n; ++c)
                if (!(mask & (1 << c))) freepos.emplace_back(i, c);
        for (int fm = 0; fm < (1 << freepos.size()); ++fm) {
            F2Matrix b(k, n);
            for (int i = 0; i < k; ++i) b.set(i, piv[i], true);
            for (size_t t = 0; t < freepos.size(); ++t)
                if (fm & (1 << t)) b.set(freepos[t].first, freepos[t].second, true);
            out.push_back(b);
        }
    }
    return out;
}

int thread_count() {
    static int n = [] {
        const char* env = std::getenv("NILOPS_THREADS");
        if (!env) return 1;
        int v = std::atoi(env);
        if (v < 1) return 1;
        return std::min(v, (int)std::thread::hardware_concurrency());
    }();
    return n;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
    int nt = thread_count();
    if (nt <= 1 || n < 2 * nt) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace nilops
