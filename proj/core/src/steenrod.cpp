#include "nilops/steenrod.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace nilops {

int word_degree(const SqWord& w) { return std::accumulate(w.begin(), w.end(), 0); }

bool is_admissible(const SqWord& w) {
    for (size_t j = 0; j + 1 < w.size(); ++j)
        if (w[j] < 2 * w[j + 1]) return false;
    return true;
}

int excess(const SqWord& w) {
    if (w.empty()) return 0;
    return 2 * w[0] - word_degree(w);
}

bool binom2(long long a, long long b) {
    if (b < 0) return false;
    if (a >= 0) {
        if (b > a) return false;
        return (a & b) == b;
    }
    // lift: binom(a, b) == binom(a + 2^N, b) mod 2 once 2^N > b and a + 2^N >= 0
    long long lift = 1;
    while (lift <= b || a + lift < 0) lift <<= 1;
    long long aa = a + lift;
    return (aa & b) == b;
}

static void insert_term(std::vector<SqWord>& terms, const SqWord& w) {
    auto it = std::lower_bound(terms.begin(), terms.end(), w);
    if (it != terms.end() && *it == w)
        terms.erase(it);   // mod 2 cancellation
    else
        terms.insert(it, w);
}

OperationSum operation_sum_add(const OperationSum& a, const OperationSum& b) {
    if (!a.terms.empty() && !b.terms.empty() && a.degree != b.degree)
        throw std::logic_error("operation_sum_add: degree mismatch");
    OperationSum out = a;
    if (out.terms.empty()) out.degree = b.degree;
    for (const SqWord& w : b.terms) insert_term(out.terms, w);
    return out;
}

OperationSum adem_normalize(const SqWord& w) {
    static std::map<SqWord, OperationSum> memo;
    static std::mutex memo_mutex;
    for (int e : w)
        if (e <= 0) throw std::logic_error("adem_normalize: letters must be positive");
    {
        std::lock_guard<std::mutex> lk(memo_mutex);
        auto it = memo.find(w);
        if (it != memo.end()) return it->second;
    }
    OperationSum out;
    out.degree = word_degree(w);
    size_t bad = w.size();
    for (size_t j = 0; j + 1 < w.size(); ++j)
        if (w[j] < 2 * w[j + 1]) { bad = j; break; }
    if (bad == w.size()) {
        out.terms.push_back(w);
    } else {
        int a = w[bad], b = w[bad + 1];
        for (int c = 0; c <= a / 2; ++c) {
            if (!binom2(b - c - 1, a - 2 * c)) continue;
            SqWord next(w.begin(), w.begin() + bad);
            next.push_back(a + b - c);
            if (c > 0) next.push_back(c);
            next.insert(next.end(), w.begin() + bad + 2, w.end());
            out = operation_sum_add(out, adem_normalize(next));
        }
    }
    std::lock_guard<std::mutex> lk(memo_mutex);
    memo.emplace(w, out);
    return out;
}

static void admissible_rec(int degree, int max_first, int max_excess_first,
                           SqWord& prefix, std::vector<SqWord>& out) {
    if (degree == 0) {
        out.push_back(prefix);
        return;
    }
    for (int t = 1; t <= std::min(degree, max_first); ++t) {
        if (prefix.empty() && 2 * t - /*total*/ degree > max_excess_first) continue;
        prefix.push_back(t);
        admissible_rec(degree - t, t / 2, max_excess_first, prefix, out);
        prefix.pop_back();
    }
}

std::vector<SqWord> admissible_words(int degree, int max_excess) {
    if (degree < 0) return {};
    std::vector<SqWord> out;
    if (degree == 0) {
        out.push_back({});
        return out;
    }
    if (max_excess <= 0) return out;   // nonempty admissible words have excess >= 1
    SqWord prefix;
    admissible_rec(degree, degree, max_excess, prefix, out);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace nilops
