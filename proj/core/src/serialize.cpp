#include "nilops/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace nilops {

json matrix_to_json(const F2Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) rows.push_back(m.row_string(r));
    return rows;
}

F2Matrix matrix_from_json(const json& j, int rows, int cols) {
    if (!j.is_array()) throw std::invalid_argument("matrix: expected an array of row strings");
    std::vector<std::string> rs;
    for (const auto& r : j) rs.push_back(r.get<std::string>());
    if (static_cast<int>(rs.size()) != rows)
        throw std::invalid_argument("matrix: expected " + std::to_string(rows) + " rows, got " +
                                    std::to_string(rs.size()));
    if (rows == 0) return F2Matrix(0, cols);
    auto m = F2Matrix::from_row_strings(rs);
    if (!m || m->cols() != cols)
        throw std::invalid_argument("matrix: rows must be 01-strings of length " +
                                    std::to_string(cols));
    return *m;
}

json module_to_json(const GradedModule& m) {
    json j;
    j["window"] = {m.dmin, m.dmax};
    j["complete"] = m.complete;
    if (!m.complete) j["trust"] = m.trust;
    json dims = json::object();
    for (int d = m.dmin; d <= m.dmax; ++d)
        if (m.dim(d) > 0) dims[std::to_string(d)] = m.dim(d);
    j["dims"] = dims;
    json sq = json::array();
    for (int d = m.dmin; d <= m.dmax; ++d)
        for (int i = 1; d + i <= m.dmax; ++i) {
            if (m.dim(d) == 0 || m.dim(d + i) == 0) continue;
            F2Matrix blk = m.sq(i, d);
            if (blk.is_zero()) continue;
            json e;
            e["i"] = i;
            e["from_degree"] = d;
            e["rows"] = matrix_to_json(blk);
            sq.push_back(e);
        }
    j["sq"] = sq;
    return j;
}

GModPtr module_from_json(const json& j, bool check) {
    if (!j.contains("window") || !j["window"].is_array() || j["window"].size() != 2)
        throw std::invalid_argument("module: missing window [lo, hi]");
    int lo = j["window"][0].get<int>();
    int hi = j["window"][1].get<int>();
    if (lo > hi) throw std::invalid_argument("module: empty window");
    GradedModule m(lo, hi);
    m.complete = j.value("complete", false);
    m.trust = m.complete ? kTrustComplete : j.value("trust", m.dmax);
    if (!j.contains("dims") || !j["dims"].is_object())
        throw std::invalid_argument("module: missing dims object");
    for (const auto& [key, val] : j["dims"].items()) {
        int d = std::stoi(key);
        if (d < m.dmin || d > m.dmax)
            throw std::invalid_argument("module: degree " + key + " outside the window");
        int n = val.get<int>();
        if (n < 0) throw std::invalid_argument("module: negative dimension at degree " + key);
        m.set_dim(d, n);
    }
    for (const auto& e : j.value("sq", json::array())) {
        int i = e.at("i").get<int>();
        int d = e.at("from_degree").get<int>();
        if (i < 1) throw std::invalid_argument("module: sq block with i < 1");
        if (d < m.dmin || d + i > m.dmax)
            throw std::invalid_argument("module: sq block outside the window");
        m.set_sq(i, d, matrix_from_json(e.at("rows"), m.dim(d), m.dim(d + i)));
    }
    auto out = std::make_shared<const GradedModule>(std::move(m));
    if (check) {
        ValidationReport rep = validate(*out, /*check_unstable=*/true);
        if (!rep.ok) {
            std::string why = rep.violations.empty() ? "invalid module" : rep.violations.front();
            throw std::invalid_argument("module: " + why);
        }
    }
    return out;
}

json algebra_to_json(const UnstableAlgebra& a) {
    json j = module_to_json(*a.module);
    json prod = json::array();
    for (const auto& [d, blk] : a.product.mats) {
        if (blk.is_zero()) continue;
        json e;
        e["from_degree"] = d;
        e["rows"] = matrix_to_json(blk);
        prod.push_back(e);
    }
    j["product"] = prod;
    return j;
}

UnstableAlgebra algebra_from_json(const json& j) {
    GModPtr m = module_from_json(j);
    GModPtr t2 = tensor_product(*m, *m);
    ModuleMap product{t2, m, 0, {}};
    for (const auto& e : j.value("product", json::array())) {
        int d = e.at("from_degree").get<int>();
        if (d < t2->dmin || d > t2->dmax)
            throw std::invalid_argument("algebra: product block outside the window");
        product.set_mat(d, matrix_from_json(e.at("rows"), t2->dim(d), m->dim(d)));
    }
    return algebra_from_product(m, product);
}

json functor_to_json(const PolyFunctor& f) {
    json j;
    j["kmax"] = f.kmax;
    if (!f.name.empty()) j["name"] = f.name;
    j["dims"] = f.dims;
    json actions = json::array();
    for (const auto& g : category_generators(f.kmax))
        actions.push_back(matrix_to_json(f.act(g.src, g.dst, g.mat)));
    j["actions"] = actions;
    return j;
}

PolyFunctor functor_from_json(const json& j, bool check) {
    int kmax = j.at("kmax").get<int>();
    if (kmax < 0 || kmax > 6) throw std::invalid_argument("functor: kmax out of range");
    std::vector<int> dims = j.at("dims").get<std::vector<int>>();
    if (static_cast<int>(dims.size()) != kmax + 1)
        throw std::invalid_argument("functor: dims must have kmax + 1 entries");
    auto gens = category_generators(kmax);
    const json& actions = j.at("actions");
    if (actions.size() != gens.size())
        throw std::invalid_argument("functor: expected " + std::to_string(gens.size()) +
                                    " generator actions");
    std::vector<F2Matrix> mats;
    for (size_t t = 0; t < gens.size(); ++t)
        mats.push_back(matrix_from_json(actions[t], dims[gens[t].src], dims[gens[t].dst]));
    PolyFunctor f = generated_functor(std::move(dims), std::move(mats),
                                      j.value("name", std::string{"F"}));
    if (check) {
        FunctorCheck fc = functor_check(f);
        if (!fc.ok) throw std::invalid_argument("functor: " + fc.why);
    }
    return f;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << dump_json(j);
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace nilops
