#pragma once

#include <string>

#include "json.hpp"
#include "nilops/emodel.hpp"
#include "nilops/gmod.hpp"
#include "nilops/polyfunc.hpp"

namespace nilops {

using json = nlohmann::ordered_json;

/* Matrices travel as arrays of "0101" row strings; empty dimensions are
 * encoded through the surrounding shape fields, never guessed. */
json matrix_to_json(const F2Matrix& m);
F2Matrix matrix_from_json(const json& j, int rows, int cols);

/* module file:
 *   { "window": [lo, hi], "complete": bool, "trust": int?,
 *     "dims": { "<degree>": dim, ... },
 *     "sq": [ { "i": i, "d": d, "mat": [rows] }, ... ] }
 * sq entries are keyed by source degree d (target d + i); zero blocks are
 * omitted on write and may be omitted in files. */
json module_to_json(const GradedModule& m);
GModPtr module_from_json(const json& j, bool validate = true);

/* algebra file: module fields plus
 *   "product": [ { "d": e, "mat": [rows] }, ... ]
 * where the block at e maps (M tensor M)_e -> M_e in the tensor basis of
 * tensor_product(M, M). */
json algebra_to_json(const UnstableAlgebra& a);
UnstableAlgebra algebra_from_json(const json& j);

/* functor file:
 *   { "kmax": k, "name": str?, "dims": [d_0..d_k],
 *     "actions": [ [rows], ... ] }
 * actions follow category_generators(kmax) order; coherence is verified
 * with functor_check unless check = false. */
json functor_to_json(const PolyFunctor& f);
PolyFunctor functor_from_json(const json& j, bool check = true);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);
// Canonical bytes for reports: two-space indent, trailing newline.
std::string dump_json(const json& j);

}  // namespace nilops
