#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <string>
#include <vector>

#include "homstokes/cell.hpp"
#include "homstokes/coefficient.hpp"
#include "homstokes/config.hpp"
#include "homstokes/errors.hpp"
#include "homstokes/norms.hpp"
#include "homstokes/study.hpp"

namespace py = pybind11;
using namespace homstokes;

namespace {

// a[i][j][alpha][beta]
using Nested = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

Nested nested(const Tensor4& t) {
    Nested out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) out[i][j][a][b] = t(i, j, a, b);
    return out;
}

CoefficientTensor coefficient(const std::string& family, const std::vector<double>& params) {
    return build_coefficient(parse_family(family), params);
}

py::dict study_dict(const RateReport& r) {
    py::dict d;
    py::list rows;
    for (const RateRow& row : r.rows) {
        py::dict x;
        x["epsilon"] = row.epsilon;
        x["M"] = row.M;
        for (int k = 0; k < 5; ++k) x[kErrorColumns[k]] = row.column(k);
        x["bl_const"] = row.bl_const;
        x["z_h1"] = row.z_h1;
        x["warnings"] = row.warnings;
        rows.append(x);
    }
    d["rows"] = rows;
    py::dict slopes;
    for (int k = 0; k < 5; ++k) slopes[kErrorColumns[k]] = r.fits[k] ? py::cast(r.fits[k]->slope) : py::none();
    d["slopes"] = slopes;
    d["effective"] = nested(r.effective.a);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Periodic homogenization of Stokes systems";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    m.def(
        "coefficient",
        [](const std::string& family, const std::vector<double>& params, double y1, double y2) {
            return nested(coefficient(family, params).evaluate({y1, y2}));
        },
        py::arg("family"), py::arg("params") = std::vector<double>{}, py::arg("y1") = 0.0, py::arg("y2") = 0.0);

    m.def(
        "ellipticity",
        [](const std::string& family, const std::vector<double>& params, int resolution) {
            const auto rep = verify_ellipticity(coefficient(family, params), resolution);
            py::dict d;
            d["lower"] = rep.lower;
            d["upper"] = rep.upper;
            d["declared_mu"] = rep.declared_mu;
            d["pass"] = rep.pass;
            return d;
        },
        py::arg("family"), py::arg("params") = std::vector<double>{}, py::arg("resolution") = 16);

    m.def(
        "effective_tensor",
        [](const std::string& family, const std::vector<double>& params, int N, double tol) {
            const CoefficientTensor A = coefficient(family, params);
            py::gil_scoped_release release;
            const EffectiveTensor e = compute_effective_tensor(A, compute_correctors(A, CellGrid::make(N), tol, false));
            return nested(e.a);
        },
        py::arg("family"), py::arg("params") = std::vector<double>{}, py::arg("N") = 64, py::arg("tol") = 1e-9);

    m.def(
        "fit_rate",
        [](const std::vector<std::pair<double, double>>& pts) {
            const RateFit f = fit_rate(pts);
            return py::make_tuple(f.slope, f.intercept, f.r2);
        },
        py::arg("points"));

    m.def(
        "mms",
        [](const std::string& family, const std::vector<double>& params, double eps, const std::vector<int>& grids,
           double tol) {
            std::optional<CoefficientTensor> A;
            if (family != "identity") A = coefficient(family, params);
            MmsReport r;
            {
                py::gil_scoped_release release;
                r = run_mms_study(A, eps, grids, tol);
            }
            std::vector<double> errors;
            for (const auto& row : r.rows) errors.push_back(row.l2_u);
            return py::make_tuple(r.velocity.slope, errors);
        },
        py::arg("family"), py::arg("params") = std::vector<double>{}, py::arg("epsilon") = 0.25,
        py::arg("grids") = std::vector<int>{32, 64}, py::arg("tol") = 1e-9);

    m.def(
        "run_study",
        [](const std::string& config_text) {
            const StudyConfig c = parse_config_text(config_text);
            RateReport r;
            {
                py::gil_scoped_release release;
                r = run_convergence_study(c, {});
            }
            return study_dict(r);
        },
        py::arg("config_text"));

    m.def("validate_config", [](const std::string& text) { (void)parse_config_text(text); }, py::arg("config_text"));
}
