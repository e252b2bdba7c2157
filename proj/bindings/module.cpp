// Python bindings: numpy complex128 matrices in and out, evolution families
// as an opaque handle, plus the report-producing entry points.
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <string>
#include <vector>

#include "opcalc/errors.hpp"
#include "opcalc/evolution.hpp"
#include "opcalc/functional_calculus.hpp"
#include "opcalc/linalg.hpp"
#include "opcalc/log_representation.hpp"
#include "opcalc/operator_algebra.hpp"
#include "opcalc/scenario.hpp"

namespace py = pybind11;
using namespace opcalc;

namespace {

using CArray = py::array_t<std::complex<double>>;

ComplexMatrix to_matrix(const CArray& arr) {
    py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> a(arr);
    if (a.ndim() != 2 || a.shape(0) != a.shape(1))
        throw py::value_error("expected a square 2-d array");
    const int n = static_cast<int>(a.shape(0));
    ComplexMatrix m(n);
    auto r = a.unchecked<2>();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = r(i, j);
    return m;
}

CArray to_array(const ComplexMatrix& m) {
    const int n = m.dim();
    CArray out({n, n});
    auto w = out.mutable_unchecked<2>();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = m(i, j);
    return out;
}

Coefficient parse_coefficient(const std::string& kind, const py::object& param) {
    if (kind == "const")
        return Coefficient::constant(param.is_none() ? 1.0 : param.cast<double>());
    if (kind == "sin") return Coefficient::sine();
    if (kind == "cos") return Coefficient::cosine();
    if (kind == "poly") return Coefficient::poly(param.cast<std::vector<double>>());
    throw py::value_error("coefficient kind must be const, sin, cos, or poly");
}

GeneratorSpec build_spec(int dim, double horizon, const py::list& terms) {
    GeneratorSpec spec;
    spec.dim = dim;
    spec.T = horizon;
    for (const auto& item : terms) {
        py::tuple t = item.cast<py::tuple>();
        if (t.size() != 3) throw py::value_error("each term is (kind, param, matrix)");
        spec.terms.push_back({parse_coefficient(t[0].cast<std::string>(), t[1].cast<py::object>()),
                              to_matrix(t[2].cast<CArray>())});
    }
    spec.validate();
    return spec;
}

py::dict identity_dict(const IdentityResult& r) {
    py::dict d;
    d["residual"] = r.residual;
    d["scale"] = r.scale;
    d["wrap_flag"] = r.wrap_flag;
    d["defect_eigenvalues"] = r.defect_eigenvalues;
    return d;
}

}  // namespace

PYBIND11_MODULE(_opcalc, m) {
    m.doc() = "logarithmic representations of evolution families on finite matrices";

    // error kinds surface as ValueError subtypes keyed by kind()
    static py::exception<Error> exc(m, "OpcalcError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(exc, (std::string(e.kind()) + ": " + e.what()).c_str());
        }
    });

    py::class_<EvolutionFamily>(m, "EvolutionFamily")
        .def_property_readonly("dim", &EvolutionFamily::dim)
        .def_property_readonly("horizon", &EvolutionFamily::horizon)
        .def_property_readonly("id", &EvolutionFamily::id)
        .def("__call__",
             [](const EvolutionFamily& f, double t, double s) { return to_array(f(t, s)); },
             py::arg("t"), py::arg("s"))
        .def("generator",
             [](const EvolutionFamily& f, double t) { return to_array(f.generator(t)); },
             py::arg("t"));

    m.def(
        "closed_form_family",
        [](int dim, double horizon, const py::list& terms, const std::string& id) {
            return EvolutionFamily::closed_form(build_spec(dim, horizon, terms), id);
        },
        py::arg("dim"), py::arg("horizon"), py::arg("terms"), py::arg("id") = "",
        "Evolution family exp(sum_k int coef_k M_k) for commuting terms; each term is "
        "(kind, param, matrix) with kind in {const, sin, cos, poly}.");
    m.def(
        "rk4_family",
        [](int dim, double horizon, const py::list& terms, double step, const std::string& id) {
            return EvolutionFamily::rk4(build_spec(dim, horizon, terms), step, id);
        },
        py::arg("dim"), py::arg("horizon"), py::arg("terms"), py::arg("step") = 0.0,
        py::arg("id") = "", "Evolution family integrated by fixed-step RK4.");
    m.def(
        "product_family",
        [](const EvolutionFamily& a, const EvolutionFamily& b) { return product_family(a, b); },
        py::arg("f1"), py::arg("f2"));

    m.def("matrix_exp", [](const CArray& a) { return to_array(matrix_exp(to_matrix(a))); },
          py::arg("a"));
    m.def("spectral_norm", [](const CArray& a) { return spectral_norm(to_matrix(a)); },
          py::arg("a"));
    m.def(
        "eig",
        [](const CArray& a) {
            EigenDecomposition d = eig(to_matrix(a));
            return py::make_tuple(d.values, to_array(d.vectors), d.condition);
        },
        py::arg("a"), "Right eigenpairs as (values, vectors, condition).");

    m.def(
        "principal_log",
        [](const CArray& a, int nodes) {
            return to_array(principal_log_full(to_matrix(a), std::nullopt, nodes).value);
        },
        py::arg("a"), py::arg("nodes") = kDefaultNodes,
        "Principal branch logarithm through the contour quadrature.");
    m.def("eigendecomposition_log",
          [](const CArray& a) { return to_array(eigendecomposition_log(to_matrix(a))); },
          py::arg("a"), "Independent eigendecomposition route to the same logarithm.");
    m.def(
        "choose_kappa",
        [](const CArray& u) { return choose_kappa(to_matrix(u)).kappa; },
        py::arg("u"), "Smallest admissible shift from the standard ladder.");

    m.def(
        "compute_a",
        [](const EvolutionFamily& fam, double t, double s, const py::object& kappa, int nodes) {
            LogRepresentation rep =
                kappa.is_none() ? compute_a_auto(fam, t, s, nodes)
                                : compute_a(fam, t, s, kappa.cast<Complex>(), nodes);
            py::dict d;
            d["a"] = to_array(rep.a);
            d["kappa"] = rep.kappa;
            d["t"] = rep.t;
            d["s"] = rep.s;
            return d;
        },
        py::arg("family"), py::arg("t"), py::arg("s"), py::arg("kappa") = py::none(),
        py::arg("nodes") = kDefaultNodes,
        "Log(U(t,s) + kappa I); kappa=None picks the shift from the ladder.");
    m.def(
        "reconstruct_u",
        [](const CArray& a, Complex kappa) {
            ComplexMatrix value = matrix_exp(to_matrix(a));
            return to_array(value - kappa * ComplexMatrix::identity(value.dim()));
        },
        py::arg("a"), py::arg("kappa"), "matrix_exp(a) - kappa I.");
    m.def(
        "generator_from_logrep",
        [](const EvolutionFamily& fam, double t, double s, Complex kappa, double h, int nodes) {
            return to_array(generator_from_logrep(fam, t, s, kappa, h, nodes));
        },
        py::arg("family"), py::arg("t"), py::arg("s"), py::arg("kappa"), py::arg("h") = 0.0,
        py::arg("nodes") = kDefaultNodes,
        "Second-order central-difference recovery of the generator at t.");
    m.def(
        "integral_representation_check",
        [](const EvolutionFamily& fam, double t, double s, Complex kappa, int nodes) {
            IntegralCheckReport r = integral_representation_check(fam, t, s, kappa, nodes);
            py::dict d;
            d["discrepancy"] = r.discrepancy;
            d["wrap_flag"] = r.wrap_flag;
            d["defect_eigenvalues"] = r.defect_eigenvalues;
            return d;
        },
        py::arg("family"), py::arg("t"), py::arg("s"), py::arg("kappa"),
        py::arg("nodes") = kDefaultNodes);

    m.def(
        "sum_chain_identity",
        [](const EvolutionFamily& fam, double t, double r, double s, int nodes) {
            return identity_dict(sum_chain_identity(fam, t, r, s, nodes));
        },
        py::arg("family"), py::arg("t"), py::arg("r"), py::arg("s"),
        py::arg("nodes") = kDefaultNodes);
    m.def(
        "sum_commuting_identity",
        [](const EvolutionFamily& f1, const EvolutionFamily& f2, double t, double r, int nodes) {
            return identity_dict(sum_commuting_identity(f1, f2, t, r, nodes));
        },
        py::arg("f1"), py::arg("f2"), py::arg("t"), py::arg("r"),
        py::arg("nodes") = kDefaultNodes);
    m.def(
        "shifted_chain_identity",
        [](const EvolutionFamily& fam, double t, double r, double s, const CArray& k_shift,
           int nodes) {
            return identity_dict(shifted_chain_identity(fam, t, r, s, to_matrix(k_shift), nodes));
        },
        py::arg("family"), py::arg("t"), py::arg("r"), py::arg("s"), py::arg("k_shift"),
        py::arg("nodes") = kDefaultNodes);
    m.def(
        "shifted_commuting_identity",
        [](const EvolutionFamily& f1, const EvolutionFamily& f2, double t, double r,
           const CArray& k_shift, int nodes) {
            return identity_dict(
                shifted_commuting_identity(f1, f2, t, r, to_matrix(k_shift), nodes));
        },
        py::arg("f1"), py::arg("f2"), py::arg("t"), py::arg("r"), py::arg("k_shift"),
        py::arg("nodes") = kDefaultNodes);
    m.def(
        "branch_wrap_detect",
        [](const std::vector<CArray>& factors) {
            std::vector<ComplexMatrix> ms;
            ms.reserve(factors.size());
            for (const CArray& f : factors) ms.push_back(to_matrix(f));
            WrapReport r = branch_wrap_detect(ms);
            py::dict d;
            d["wrap_flag"] = r.wrap_flag;
            d["argument_sums"] = r.argument_sums;
            d["wrapped_directions"] = r.wrapped_directions;
            return d;
        },
        py::arg("factors"), "Joint-eigendirection argument sums for commuting factors.");

    m.def(
        "run_config",
        [](const std::string& config, const std::string& out_dir, int workers, bool strict_wrap) {
            RunResult res = run_config(config, out_dir, workers, strict_wrap);
            py::dict d;
            d["exit_code"] = res.exit_code;
            d["report"] = res.report_path.string();
            d["summary"] = res.summary_path.string();
            d["rows"] = res.rows.size();
            return d;
        },
        py::arg("config"), py::arg("out_dir"), py::arg("workers") = 0,
        py::arg("strict_wrap") = false,
        "Run every scenario in a config; writes report.csv and summary.json.");
    m.def(
        "generate_ensemble",
        [](uint64_t seed, int count, int dim, const std::string& profile,
           const std::string& out_dir) {
            EnsembleOptions opt;
            opt.seed = seed;
            opt.count = count;
            opt.dim = dim;
            opt.profile = profile;
            std::vector<std::string> out;
            for (const auto& p : generate_ensemble(opt, out_dir)) out.push_back(p.string());
            return out;
        },
        py::arg("seed"), py::arg("count"), py::arg("dim"), py::arg("profile"),
        py::arg("out_dir"), "Write a seeded scenario ensemble; returns the file list.");

    m.attr("default_nodes") = kDefaultNodes;
    m.attr("__version__") = "1.0.0";
}
