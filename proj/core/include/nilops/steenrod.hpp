#pragma once

#include <vector>

namespace nilops {

/* Words in the mod 2 Steenrod operations.  A word {i1, i2, ..., ik} denotes
 * the composite Sq^{i1} Sq^{i2} ... Sq^{ik}; the rightmost letter acts first.
 * Entries are positive, Sq^0 is the empty word.  A word is admissible when
 * i_j >= 2 i_{j+1} for all j. */
using SqWord = std::vector<int>;

int word_degree(const SqWord& w);
bool is_admissible(const SqWord& w);
// excess = i1 - (i2 + ... + ik) = 2 i1 - degree; 0 for the empty word.
int excess(const SqWord& w);

/* Binomial coefficient mod 2.  Nonnegative upper index uses Lucas
 * ((a & b) == b); a negative upper index is lifted by a large power of two,
 * matching the coefficients of the 2-adic expansion of (1+t)^a.  Needed for
 * the Sq action on negative powers of the Laurent generator. */
bool binom2(long long a, long long b);

/* A sum of admissible words, all of one degree, stored sorted and deduplicated
 * (mod 2: repeated words cancel). */
struct OperationSum {
    int degree = 0;
    std::vector<SqWord> terms;

    bool operator==(const OperationSum& o) const { return degree == o.degree && terms == o.terms; }
};

/* Rewrite an arbitrary word into its admissible normal form by repeatedly
 * expanding the leftmost inadmissible pair with the Adem relation
 *   Sq^a Sq^b = sum_c binom(b-c-1, a-2c) Sq^{a+b-c} Sq^c   (a < 2b).
 * Deterministic and memoized on the whole word. */
OperationSum adem_normalize(const SqWord& w);

// XOR two admissible sums of the same degree.
OperationSum operation_sum_add(const OperationSum& a, const OperationSum& b);

/* All admissible words of the given degree with excess <= max_excess,
 * in lexicographically increasing order.  Degree 0 yields the empty word. */
std::vector<SqWord> admissible_words(int degree, int max_excess);

}  // namespace nilops
