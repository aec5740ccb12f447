#include "dses/engines.hpp"
#include "dses/errors.hpp"
#include "dses/harness.hpp"
#include "dses/oracle_check.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace dses;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

PointCloud to_cloud(const Eigen::Ref<const Points>& m) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) pts.emplace_back(m(i, 0), m(i, 1), m(i, 2));
    return PointCloud(std::move(pts));
}

Points to_array(const PointCloud& c) {
    Points m(static_cast<Eigen::Index>(c.size()), 3);
    for (std::size_t i = 0; i < c.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = c[i].transpose();
    return m;
}

Eigen::Matrix4d to_homogeneous(const RigidTransform& t) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
    h.topLeftCorner<3, 3>() = t.rotation;
    h.topRightCorner<3, 1>() = t.translation;
    return h;
}

// Configs cross the boundary as JSON text so Python dicts map onto the same
// schema the CLI reads.
nlohmann::json parse(const std::string& text) {
    if (text.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(text);
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Direct semi-exhaustive search for rigid point cloud registration";

    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<SearchTooLargeError>(m, "SearchTooLargeError", PyExc_RuntimeError);
    py::register_exception<NoCandidateError>(m, "NoCandidateError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "rotation_from_euler",
        [](double theta, double phi, double xi) { return rotation_from_euler({theta, phi, xi}); },
        py::arg("theta"), py::arg("phi"), py::arg("xi"), "R = Rz(xi) Ry(phi) Rx(theta), angles in radians.");

    m.def(
        "mode_translation",
        [](const Eigen::Ref<const Points>& source, const Eigen::Ref<const Points>& reference, const Mat3& rotation,
           double bin) {
            const ModeResult r = mode_translation(to_cloud(source), to_cloud(reference), rotation, bin);
            py::dict out;
            out["t_star"] = Vec3(r.t_star);
            out["count"] = r.count;
            out["bin"] = r.bin;
            out["num_tied_bins"] = r.num_tied_bins;
            return out;
        },
        py::arg("source"), py::arg("reference"), py::arg("rotation"), py::arg("bin"));

    m.def(
        "register_clouds",
        [](const Eigen::Ref<const Points>& source, const Eigen::Ref<const Points>& reference,
           const std::string& search_json, bool exhaustive) {
            const SearchConfig search = search_from_json(parse(search_json));
            const PointCloud src = to_cloud(source);
            const PointCloud ref = to_cloud(reference);
            RegisterReport report;
            {
                py::gil_scoped_release release;
                report = register_clouds(src, ref, search, exhaustive ? EngineKind::Exhaustive : EngineKind::Dses);
            }
            py::dict out = to_python(register_report_to_json(report));
            out["matrix"] = to_homogeneous(report.result.best);
            return out;
        },
        py::arg("source"), py::arg("reference"), py::arg("search_json") = "", py::arg("exhaustive") = false);

    m.def(
        "make_instance",
        [](const std::string& scenario_json, std::uint64_t seed) {
            ScenarioConfig cfg = scenario_from_json(parse(scenario_json));
            cfg.rng_seed = seed;
            const ScenarioInstance inst = make_instance(cfg);
            return py::make_tuple(to_array(inst.source), to_array(inst.reference),
                                  to_homogeneous(inst.ground_truth));
        },
        py::arg("scenario_json"), py::arg("seed"),
        "Returns (source, reference, ground_truth 4x4); ground_truth maps source onto reference.");

    m.def(
        "run_batch",
        [](const std::string& scenario_json, const std::string& search_json, int trials, std::uint64_t seed,
           bool local, double relaxed_rot_deg, double relaxed_trans) {
            const ScenarioConfig scenario = scenario_from_json(parse(scenario_json));
            const SearchConfig search = search_from_json(parse(search_json));
            BatchOptions opt;
            opt.local = local;
            opt.relaxed = {relaxed_rot_deg, relaxed_trans};
            BatchResult batch;
            {
                py::gil_scoped_release release;
                batch = run_batch(scenario, search, trials, seed, opt);
            }
            std::ostringstream csv;
            write_batch_csv(csv, batch);
            return py::make_tuple(to_python(batch_to_json(batch)), csv.str());
        },
        py::arg("scenario_json"), py::arg("search_json"), py::arg("trials"), py::arg("seed"),
        py::arg("local") = false, py::arg("relaxed_rot_deg") = kRecallRotationDeg,
        py::arg("relaxed_trans") = kRecallTranslation, "Returns (report dict, CSV text).");

    m.def(
        "oracle_check",
        [](std::size_t trials, std::uint64_t seed) {
            const OracleReport r = run_oracle_check(trials, seed);
            py::dict out;
            out["mode_instances"] = r.mode_instances;
            out["mode_violations"] = r.mode_violations;
            out["search_instances"] = r.search_instances;
            out["search_violations"] = r.search_violations;
            out["messages"] = r.messages;
            out["passed"] = r.passed();
            return out;
        },
        py::arg("trials") = 200, py::arg("seed") = 1);
}
