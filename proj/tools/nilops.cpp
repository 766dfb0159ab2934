/* nilops: batch front-end for the library.  Parses module / algebra /
 * functor presentations, runs one operation, and prints a deterministic
 * report (text by default, canonical JSON with --json).
 *
 * Exit status: 0 = computed, 2 = hypothesis not met or inconclusive,
 * 1 = input error. */

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "nilops/emodel.hpp"
#include "nilops/functors.hpp"
#include "nilops/gmod.hpp"
#include "nilops/nilfilt.hpp"
#include "nilops/polyfunc.hpp"
#include "nilops/serialize.hpp"
#include "nilops/singer.hpp"

namespace {

using nilops::json;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kInconclusive = 2;

nilops::Window parse_window(const std::string& s) {
    auto pos = s.find(':');
    if (pos == std::string::npos)
        throw std::invalid_argument("--window expects lo:hi");
    return {std::stoi(s.substr(0, pos)), std::stoi(s.substr(pos + 1))};
}

json window_json(const nilops::Window& w) { return json::array({w.lo, w.hi}); }

json dims_json(const nilops::GradedModule& m) {
    json dims = json::object();
    for (int d = m.dmin; d <= m.dmax; ++d)
        if (m.dim(d) > 0) dims[std::to_string(d)] = m.dim(d);
    return dims;
}

json module_summary(const nilops::GradedModule& m) {
    json j;
    j["window"] = json::array({m.dmin, m.dmax});
    j["complete"] = m.complete;
    if (!m.complete) j["trust"] = m.trust;
    j["total_dim"] = m.total_dim();
    j["dims"] = dims_json(m);
    return j;
}

json map_json(const nilops::ModuleMap& f) {
    json j;
    j["shift"] = f.shift;
    json blocks = json::array();
    for (const auto& [d, mat] : f.mats) {
        if (mat.rows() == 0 || mat.cols() == 0 || mat.is_zero()) continue;
        json e;
        e["from_degree"] = d;
        e["rows"] = nilops::matrix_to_json(mat);
        blocks.push_back(e);
    }
    j["blocks"] = blocks;
    return j;
}

bool map_is_zero(const nilops::ModuleMap& f) {
    for (const auto& [d, mat] : f.mats)
        if (!mat.is_zero()) return false;
    return true;
}

json spans_json(const nilops::DegreewiseSpans& s) {
    json j = json::object();
    for (const auto& [d, mat] : s)
        if (mat.rows() > 0) j[std::to_string(d)] = mat.rows();
    return j;
}

void print_text(const json& j, int indent) {
    std::string pad(static_cast<size_t>(indent) * 2, ' ');
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            if (v.is_object() || (v.is_array() && !v.empty() && v[0].is_structured())) {
                fmt::print("{}{}:\n", pad, k);
                print_text(v, indent + 1);
            } else {
                fmt::print("{}{}: {}\n", pad, k, v.dump());
            }
        }
    } else if (j.is_array()) {
        for (const auto& v : j) {
            if (v.is_structured()) {
                fmt::print("{}-\n", pad);
                print_text(v, indent + 1);
            } else {
                fmt::print("{}- {}\n", pad, v.dump());
            }
        }
    } else {
        fmt::print("{}{}\n", pad, j.dump());
    }
}

struct Opts {
    bool as_json = false;
    std::string trust_policy = "warn";
    std::string window;
    int smax = 6;
    int n = 2;
    int kmax = 3;
    int t = 1;
    int d = 2;
    bool tilde = false;
    std::string file, file2;
    std::string verb, subverb;
    std::string f1name = "id", kname = "full";
    std::string modfile;
};

int emit(json out, int code, const Opts& o) {
    if (o.trust_policy == "strict" && out.contains("trust") &&
        out.contains("requested_hi") && out["trust"].is_number() &&
        out["trust"].get<int>() < out["requested_hi"].get<int>()) {
        out["trust_policy"] = "strict: trust degree below the requested window";
        if (code == kOk) code = kInconclusive;
    }
    out["exit"] = code;
    if (o.as_json)
        fmt::print("{}", nilops::dump_json(out));
    else
        print_text(out, 0);
    return code;
}

nilops::GModPtr load_module(const std::string& path) {
    return nilops::module_from_json(nilops::load_json_file(path));
}

nilops::PolyFunctor named_functor(const std::string& name, int kmax) {
    using namespace nilops;
    if (name == "id") return id_functor(kmax);
    if (name == "const") return constant_functor(kmax);
    if (name == "zero") return zero_functor(kmax);
    if (name == "s2") return symmetric_power_functor(2, kmax);
    if (name == "s3") return symmetric_power_functor(3, kmax);
    if (name == "t2") return tensor_power_functor(2, kmax);
    if (name == "lambda2") return exterior_square_functor(kmax);
    if (name == "gamma2") return divided_square_functor(kmax);
    if (name.rfind("file:", 0) == 0)
        return functor_from_json(load_json_file(name.substr(5)));
    if (name.rfind("loc:", 0) == 0)
        return localize(load_module(name.substr(4)), kmax).functor;
    throw std::invalid_argument(
        "unknown functor '" + name +
        "' (expected id|const|zero|s2|s3|t2|lambda2|gamma2|file:PATH|loc:PATH)");
}

json functor_dims(const nilops::PolyFunctor& f) {
    json j;
    if (!f.name.empty()) j["name"] = f.name;
    j["kmax"] = f.kmax;
    j["dims"] = f.dims;
    return j;
}

/* ---------------- subcommand bodies ---------------- */

int run_check_module(const Opts& o) {
    json doc = nilops::load_json_file(o.file);
    nilops::GModPtr m = nilops::module_from_json(doc, /*validate=*/false);
    nilops::ValidationReport rep = nilops::validate(*m, /*check_unstable=*/true);
    json out;
    out["ok"] = rep.ok;
    out["unstable_checked"] = rep.unstable_checked;
    out["violations"] = rep.violations;
    out["module"] = module_summary(*m);
    return emit(out, rep.ok ? kOk : kInputError, o);
}

int run_op(const Opts& o) {
    using namespace nilops;
    json out;
    out["op"] = o.subverb;
    if (o.subverb == "f2u") {
        Window w = o.window.empty() ? Window{0, 32} : parse_window(o.window);
        GModPtr m = free_unstable(o.n, w);
        out["module"] = o.as_json ? module_to_json(*m) : module_summary(*m);
        return emit(out, kOk, o);
    }
    GModPtr m = load_module(o.file);
    auto put = [&](const char* key, const GModPtr& r) {
        out[key] = o.as_json ? module_to_json(*r) : module_summary(*r);
    };
    if (o.subverb == "phi") {
        put("module", phi(m));
    } else if (o.subverb == "s2" || o.subverb == "lambda2" || o.subverb == "gamma2") {
        QuadraticParts qp = quadratic_parts(m);
        if (o.subverb == "s2") put("module", qp.s2.module);
        if (o.subverb == "lambda2") put("module", qp.lambda2.module);
        if (o.subverb == "gamma2") put("module", qp.gamma2.module);
    } else if (o.subverb == "tensor") {
        GModPtr b = load_module(o.file2);
        put("module", tensor_product(*m, *b));
    } else if (o.subverb == "suspend") {
        put("module", suspend(m, o.t));
    } else if (o.subverb == "loops") {
        LoopsData ld = loops(m);
        put("omega", ld.omega);
        put("omega1", ld.omega1);
    } else if (o.subverb == "destab") {
        Destabilization ds = destabilize(m);
        put("module", ds.module);
        out["unit"] = map_json(ds.unit);
    } else {
        throw std::invalid_argument("unknown op " + o.subverb);
    }
    return emit(out, kOk, o);
}

int run_singer(const Opts& o) {
    using namespace nilops;
    GModPtr m = load_module(o.file);
    Window w = o.window.empty() ? Window{std::min(0, m->dmin), 2 * std::max(m->dmax, 0)}
                                : parse_window(o.window);
    json out;
    out["requested_hi"] = w.hi;
    if (o.subverb == "r1") {
        R1Data r = r1_module(m, w);
        out["module"] = o.as_json ? module_to_json(*r.r1.module) : module_summary(*r.r1.module);
        out["trust"] = r.r1.module->complete ? w.hi : r.r1.module->trust;
    } else if (o.subverb == "r1n") {
        SingerTower t = singer_tower(m, o.n, w);
        GModPtr q = t.quots.at(o.n - 1).module;
        out["n"] = o.n;
        out["module"] = o.as_json ? module_to_json(*q) : module_summary(*q);
        json layers = json::array();
        for (int i = 0; i < o.n; ++i) {
            UAdicLayer l = u_adic_layer(t.base, i);
            json e;
            e["i"] = i;
            e["dims"] = dims_json(*l.layer);
            e["iso_sigma_i_phi"] = l.iso;
            layers.push_back(e);
        }
        out["u_adic_layers"] = layers;
        out["trust"] = q->complete ? w.hi : q->trust;
    } else if (o.subverb == "d1n") {
        ResidueData r = residue_differential(m, o.n, w);
        out["n"] = o.n;
        out["source"] = module_summary(*r.tower.quots.at(o.n - 1).module);
        out["target"] = module_summary(*r.target);
        out["d"] = map_json(r.d);
        out["nonzero"] = !map_is_zero(r.d);
    } else {
        throw std::invalid_argument("unknown singer subcommand " + o.subverb);
    }
    return emit(out, kOk, o);
}

int run_emodel(const Opts& o) {
    using namespace nilops;
    json out;
    out["n"] = o.n;
    if (o.subverb == "build") {
        GModPtr m = load_module(o.file);
        EModel e = e_model(m, o.n);
        out["module"] = o.as_json ? module_to_json(*e.module) : module_summary(*e.module);
        if (o.n >= 2) {
            out["ses_exact"] = e.ses_exact;
            if (!e.ses_exact) out["ses_why"] = e.ses_why;
        }
        return emit(out, kOk, o);
    }
    UnstableAlgebra alg = algebra_from_json(load_json_file(o.file));
    if (o.subverb == "d1") {
        AlgebraicD1 d1 = algebraic_d1(alg, o.n);
        out["legs_compatible"] = d1.legs_compatible;
        if (!d1.why.empty()) out["why"] = d1.why;
        out["source"] = module_summary(*d1.em.module);
        out["target"] = module_summary(*d1.target);
        out["d1"] = map_json(d1.d1);
        out["nonzero"] = !map_is_zero(d1.d1);
        return emit(out, d1.legs_compatible ? kOk : kInconclusive, o);
    }
    if (o.subverb == "two-column") {
        TwoColumnPage p = two_column_page(alg, o.n);
        out["kbar_in_nil_n"] = verdict_name(p.kbar_in_nil_n);
        out["connected_enough"] = p.connected_enough;
        out["layer_solved"] = p.layer_solved;
        if (o.n >= 2) {
            out["factors_phi"] = p.factors_phi;
            out["matches_delta"] = p.matches_delta;
            out["r_leg_matches_delta"] = p.r_leg_matches_delta;
        }
        out["einf_col1"] = module_summary(*p.einf_col1);
        out["rho0_col1_matches"] = p.rho0_col1_matches;
        out["rho0_col2_matches"] = p.rho0_col2_matches;
        if (!p.notes.empty()) out["notes"] = p.notes;
        bool hyp = p.kbar_in_nil_n == Verdict::Yes && p.connected_enough && p.layer_solved;
        return emit(out, hyp ? kOk : kInconclusive, o);
    }
    throw std::invalid_argument("unknown emodel subcommand " + o.subverb);
}

int run_nilfilt(const Opts& o) {
    using namespace nilops;
    GModPtr m = load_module(o.file);
    NilFiltration filt = nil_filtration(m, o.smax);
    json out;
    out["smax"] = filt.smax;
    if (filt.trust < kTrustComplete) {
        out["trust"] = filt.trust;
        out["requested_hi"] = m->dmax;
    }
    json nil = json::array();
    for (int s = 0; s <= filt.smax; ++s) {
        json e;
        e["s"] = s;
        e["dims"] = spans_json(filt.nil[s]);
        e["total_dim"] = spans_total_dim(filt.nil[s]);
        if (filt.level_trust[s] < kTrustComplete) e["trust"] = filt.level_trust[s];
        nil.push_back(e);
    }
    out["nil"] = nil;
    json rho = json::array();
    for (int s = 0; s < filt.smax; ++s) {
        RhoLayer l = rho_layer(m, filt, s);
        json e;
        e["s"] = s;
        e["dims"] = dims_json(*l.rho);
        if (l.trust < kTrustComplete) e["trust"] = l.trust;
        rho.push_back(e);
    }
    out["rho"] = rho;
    return emit(out, kOk, o);
}

int run_delta(const Opts& o) {
    using namespace nilops;
    GModPtr m = load_module(o.file);
    DeltaData dd = delta_n(m, o.n);
    json out;
    out["n"] = o.n;
    out["rho_n"] = module_summary(*dd.rho_n.rho);
    out["rho_n1"] = module_summary(*dd.rho_n1.rho);
    out["delta"] = map_json(dd.delta);
    out["nonzero"] = !map_is_zero(dd.delta);
    if (dd.trust < kTrustComplete) {
        out["trust"] = dd.trust;
        out["requested_hi"] = m->dmax;
    }
    return emit(out, kOk, o);
}

int run_almost(const Opts& o) {
    using namespace nilops;
    GModPtr m = load_module(o.file);
    AUVerdict v = certify_almost_unstable(m);
    json out;
    out["state"] = verdict_name(v.state);
    out["reason"] = v.reason;
    json w = json::array();
    for (const auto& layer : v.witness) {
        json e;
        e["t"] = layer.t;
        e["dims"] = spans_json(layer.step);
        w.push_back(e);
    }
    out["witness"] = w;
    return emit(out, v.state == Verdict::Inconclusive ? kInconclusive : kOk, o);
}

int run_localize(const Opts& o) {
    using namespace nilops;
    GModPtr m = load_module(o.file);
    Localization l = localize(m, o.kmax);
    json out;
    out["kmax"] = o.kmax;
    out["dims"] = l.functor.dims;
    out["exact"] = l.exact;
    if (o.as_json) out["functor"] = functor_to_json(l.functor);
    return emit(out, kOk, o);
}

int run_functor(const Opts& o) {
    using namespace nilops;
    json out;
    out["kmax"] = o.kmax;
    if (o.subverb == "degree") {
        PolyFunctor f = named_functor(o.f1name, o.kmax);
        PolyDegree pd = poly_degree(f);
        out["functor"] = functor_dims(f);
        out["degree"] = pd.degree;
        out["certified"] = pd.certified;
        return emit(out, pd.certified ? kOk : kInconclusive, o);
    }
    if (o.subverb == "delta") {
        PolyFunctor f = named_functor(o.f1name, o.kmax);
        PolyFunctor df = delta_functor(f);
        out["functor"] = functor_dims(f);
        out["delta"] = functor_dims(df);
        return emit(out, kOk, o);
    }
    if (o.subverb == "split") {
        FunctorSES e = frobenius_ses(o.kmax);
        SplitResult s = ses_splits(e);
        ExactCheck ec = ses_is_exact(e);
        out["sequence"] = "0 -> Id -> S^2 -> Lambda^2 -> 0";
        out["exact"] = ec.exact;
        out["splits"] = s.splits;
        out["note"] = s.note;
        return emit(out, kOk, o);
    }
    if (o.subverb == "ext2") {
        YonedaTwoExt x = o.tilde ? e1_tilde_class(o.kmax) : e1_class(o.kmax);
        Ext2Certificate c = ext2_nonzero(x);
        out["sequence"] = o.tilde ? "0 -> Id -> S^2 -> T^2 -> S^2 -> 0"
                                  : "0 -> Id -> S^2 -> Gamma^2 -> Id -> 0";
        out["nonzero"] = c.nonzero;
        out["level_sizes"] = c.level_sizes;
        out["cochain_dims"] = c.cochain_dims;
        out["note"] = c.note;
        return emit(out, kOk, o);
    }
    if (o.subverb == "detect") {
        PolyFunctor l2 = exterior_square_functor(o.kmax);
        PolyFunctor t2 = tensor_power_functor(2, o.kmax);
        std::vector<F2Matrix> comp;
        for (int k = 0; k <= o.kmax; ++k) comp.push_back(lambda2_to_t2_component(k));
        NatTrans f = nat_from_components(l2, t2, std::move(comp));
        DetectionChain dc = detection_functor(f, o.d);
        out["map"] = "Lambda^2 -> T^2";
        out["d"] = dc.d;
        out["found"] = dc.found;
        out["composite_is_identity"] = dc.composite_is_identity;
        out["note"] = dc.note;
        return emit(out, dc.found ? kOk : kInconclusive, o);
    }
    throw std::invalid_argument("unknown functor subcommand " + o.subverb);
}

json obstruction_json(const nilops::ObstructionReport& r) {
    json out;
    out["n"] = r.n;
    out["f1"] = r.f1_name;
    out["f1_dims"] = r.f1_dims;
    out["k"] = r.k_name;
    out["k_dims"] = r.k_dims;
    out["omega"] = r.omega;
    out["verdict"] = r.verdict;
    out["d"] = r.d;
    out["k_degree"] = r.k_degree;
    out["ext2_certificate"] = r.ext2_certificate;
    out["detection_certificate"] = r.detection_certificate;
    out["note"] = r.note;
    return out;
}

int run_obstruction(const Opts& o) {
    using namespace nilops;
    ObstructionReport r;
    if (!o.modfile.empty()) {
        r = obstruction_from_module(load_module(o.modfile), o.n, o.kmax);
    } else {
        PolyFunctor f1 = named_functor(o.f1name, o.kmax);
        PolyFunctor parent = (o.n == 1)
            ? compose_functor(symmetric_power_functor(2, o.kmax + 1), f1)
            : f1;
        SubFunctor k;
        if (o.kname == "full" || o.kname == "id")
            k = full_sub(parent);
        else if (o.kname == "zero" || o.kname == "0")
            k = zero_sub(parent);
        else
            throw std::invalid_argument("--k expects full|id|zero");
        r = obstruction(o.n, f1, k);
    }
    json out = obstruction_json(r);
    return emit(out, r.verdict == "hypothesis-not-met" ? kInconclusive : kOk, o);
}

int run_realizability(const Opts& o) {
    using namespace nilops;
    UnstableAlgebra alg = algebra_from_json(load_json_file(o.file));
    RealizabilityReport r = realizability(alg, o.kmax);
    json out;
    out["hypotheses_ok"] = r.hypotheses_ok;
    out["d"] = r.d;
    out["image_degree"] = r.image_degree;
    out["gate"] = r.gate;
    out["verdict"] = r.verdict;
    out["note"] = r.note;
    if (r.gate) out["obstruction"] = obstruction_json(r.obstruction);
    return emit(out, r.verdict == "not-realizable" ? kOk : kInconclusive, o);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact computations with unstable modules over the mod 2 Steenrod algebra"};
    app.require_subcommand(1);
    Opts o;

    auto add_common = [&](CLI::App* c) {
        c->add_flag("--json", o.as_json, "emit the canonical JSON report");
        c->add_option("--trust-policy", o.trust_policy, "strict|warn (default warn)")
            ->check(CLI::IsMember({"strict", "warn"}));
        c->add_option("--window", o.window, "degree window lo:hi");
    };

    auto* check = app.add_subcommand("check-module", "validate a module presentation");
    check->add_option("file", o.file, "module JSON")->required();
    add_common(check);

    auto* op = app.add_subcommand("op", "apply one module operation");
    op->add_option("verb", o.subverb, "phi|s2|lambda2|gamma2|tensor|suspend|loops|destab|f2u")
        ->required();
    op->add_option("file", o.file, "module JSON");
    op->add_option("file2", o.file2, "second module JSON (tensor)");
    op->add_option("--t", o.t, "suspension shift (suspend)");
    op->add_option("--n", o.n, "generator degree (f2u)");
    add_common(op);

    auto* singer = app.add_subcommand("singer", "Singer functor computations");
    singer->add_option("verb", o.subverb, "r1|r1n|d1n")->required();
    singer->add_option("file", o.file, "module JSON")->required();
    singer->add_option("--n", o.n, "truncation depth");
    add_common(singer);

    auto* emodel = app.add_subcommand("emodel", "second extended-power model");
    emodel->add_option("verb", o.subverb, "build|d1|two-column")->required();
    emodel->add_option("file", o.file, "module JSON (build) or algebra JSON (d1, two-column)")
        ->required();
    emodel->add_option("--n", o.n, "model depth");
    add_common(emodel);

    auto* nilfilt = app.add_subcommand("nilfilt", "nilpotent filtration");
    nilfilt->add_option("file", o.file, "module JSON")->required();
    nilfilt->add_option("--smax", o.smax, "filtration depth (default 6)");
    add_common(nilfilt);

    auto* delta = app.add_subcommand("delta", "the natural map Phi rho_n -> rho_{n+1}");
    delta->add_option("file", o.file, "module JSON")->required();
    delta->add_option("--n", o.n, "layer index");
    add_common(delta);

    auto* almost = app.add_subcommand("almost", "almost-unstable certification");
    almost->add_option("file", o.file, "module JSON")->required();
    add_common(almost);

    auto* loc = app.add_subcommand("localize", "the functor l(M) on the truncated category");
    loc->add_option("file", o.file, "module JSON")->required();
    loc->add_option("--kmax", o.kmax, "truncation (default 3)");
    add_common(loc);

    auto* fun = app.add_subcommand("functor", "functor-category computations");
    fun->add_option("verb", o.subverb, "degree|delta|split|ext2|detect")->required();
    fun->add_option("name", o.f1name, "functor name (degree, delta)");
    fun->add_option("--kmax", o.kmax, "truncation (default 3)");
    fun->add_option("--d", o.d, "detection degree (detect, default 2)");
    fun->add_flag("--tilde", o.tilde, "use the tensor-square 2-extension (ext2)");
    add_common(fun);

    auto* obs = app.add_subcommand("obstruction", "the functor-category obstruction class");
    obs->add_option("--n", o.n, "suspension index")->required();
    obs->add_option("--module", o.modfile, "module JSON (module front end, n >= 2)");
    obs->add_option("--f1", o.f1name, "functor name (functor front end)");
    obs->add_option("--k", o.kname, "test subfunctor: full|zero");
    obs->add_option("--kmax", o.kmax, "truncation (default 3)");
    add_common(obs);

    auto* real = app.add_subcommand("realizability", "cup-square gate plus obstruction");
    real->add_option("file", o.file, "algebra JSON")->required();
    real->add_option("--kmax", o.kmax, "truncation (default 3)");
    add_common(real);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kInputError;
    }

    try {
        if (check->parsed()) return run_check_module(o);
        if (op->parsed()) return run_op(o);
        if (singer->parsed()) return run_singer(o);
        if (emodel->parsed()) return run_emodel(o);
        if (nilfilt->parsed()) return run_nilfilt(o);
        if (delta->parsed()) return run_delta(o);
        if (almost->parsed()) return run_almost(o);
        if (loc->parsed()) return run_localize(o);
        if (fun->parsed()) return run_functor(o);
        if (obs->parsed()) return run_obstruction(o);
        if (real->parsed()) return run_realizability(o);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kInputError;
    }
    return kInputError;
}
