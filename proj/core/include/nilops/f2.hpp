#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace nilops {

/* Dense matrix over F2 with rows packed into 64-bit words.
 *
 * Convention used throughout the library: linear maps act on row vectors,
 * v -> v * A.  Row r of an action matrix is the image of the r-th basis
 * vector, and applying f then g is the product A_f * A_g.  All reduced
 * echelon computations scan columns left to right, so every derived basis
 * (kernel, image, quotient) is canonical and runs are byte-reproducible.
 */
class F2Matrix {
public:
    F2Matrix() : rows_(0), cols_(0), wpr_(0) {}
    F2Matrix(int rows, int cols)
        : rows_(rows), cols_(cols), wpr_(words_for(cols)), w_((size_t)rows * wpr_, 0) {}

    static F2Matrix identity(int n);
    static F2Matrix zero(int rows, int cols) { return F2Matrix(rows, cols); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    bool get(int r, int c) const {
        return (w_[idx(r) + (size_t)(c >> 6)] >> (c & 63)) & 1u;
    }
    void set(int r, int c, bool v) {
        uint64_t& word = w_[idx(r) + (size_t)(c >> 6)];
        uint64_t bit = uint64_t(1) << (c & 63);
        if (v) word |= bit; else word &= ~bit;
    }
    void flip(int r, int c) { w_[idx(r) + (size_t)(c >> 6)] ^= uint64_t(1) << (c & 63); }

    bool row_zero(int r) const;
    bool is_zero() const;
    bool operator==(const F2Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && w_ == o.w_; }
    bool operator!=(const F2Matrix& o) const { return !(*this == o); }

    void row_xor(int dst, const F2Matrix& src, int srow);
    void row_assign(int dst, const F2Matrix& src, int srow);

    F2Matrix operator*(const F2Matrix& o) const;
    F2Matrix operator+(const F2Matrix& o) const;
    F2Matrix transposed() const;

    // Kronecker product: basis (i,j) of the domain, ordered i-major, maps by
    // row i of *this tensored with row j of o.  Matches the basis order used
    // for tensor products of graded modules.
    F2Matrix kron(const F2Matrix& o) const;

    F2Matrix submatrix_rows(const std::vector<int>& rows) const;
    F2Matrix submatrix_cols(const std::vector<int>& cols) const;

    // Stack on top of each other / side by side.
    static F2Matrix vstack(const F2Matrix& a, const F2Matrix& b);
    static F2Matrix hstack(const F2Matrix& a, const F2Matrix& b);
    // Block diagonal.
    static F2Matrix dsum(const F2Matrix& a, const F2Matrix& b);

    std::string row_string(int r) const;              // "0110..." length cols()
    static std::optional<F2Matrix> from_row_strings(const std::vector<std::string>& rows);

    size_t hash() const;

private:
    static int words_for(int cols) { return (cols + 63) >> 6; }
    size_t idx(int r) const { return (size_t)r * wpr_; }

    int rows_, cols_, wpr_;
    std::vector<uint64_t> w_;
};

/* Reduced row echelon form together with the transform that produced it:
 * transform * input == rref (transform is square and invertible). */
struct Echelon {
    F2Matrix rref;
    F2Matrix transform;
    std::vector<int> pivots;   // pivot column of each nonzero rref row, increasing
    int rank = 0;
};

Echelon echelon_form(const F2Matrix& a);
int rank(const F2Matrix& a);

// Canonical basis (rref rows) of the row space.
F2Matrix row_space(const F2Matrix& a);

// Canonical basis of {x : x a = 0}.
F2Matrix left_kernel(const F2Matrix& a);

// One solution x of x a = b, if any.
std::optional<F2Matrix> solve_left(const F2Matrix& a, const F2Matrix& b);

// One solution x of a x = b, if any.
std::optional<F2Matrix> solve_right(const F2Matrix& a, const F2Matrix& b);

// Do the rows of a lie in the row space of b?
bool rows_contained(const F2Matrix& a, const F2Matrix& b);

// Canonical basis of rowspace(a) `intersect` rowspace(b).
F2Matrix intersect_row_spaces(const F2Matrix& a, const F2Matrix& b);

/* Quotient of F2^n by a subspace, with the canonical complement given by the
 * non-pivot coordinates of the subspace rref.  `proj` is n x dim and sends a
 * vector to its class, `lift` is dim x n and picks the reduced representative. */
struct QuotientSpace {
    F2Matrix proj;
    F2Matrix lift;
    std::vector<int> coords;   // the non-pivot coordinates used as basis
    int dim = 0;
};

QuotientSpace quotient_space(const F2Matrix& subspace_basis, int ambient_dim);

/* All subspaces of F2^n, each as a canonical rref basis.  Exponential; used
 * by the small brute-force oracles only. */
std::vector<F2Matrix> all_subspaces(int n);

// Deterministic chunked parallel loop honouring NILOPS_THREADS (default 1).
void parallel_for(int n, const std::function<void(int)>& fn);

int thread_count();

}  // namespace nilops
