#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <vector>

#include "cloudheight/errors.hpp"
#include "cloudheight/estimator.hpp"
#include "cloudheight/scene.hpp"
#include "cloudheight/simstudy.hpp"

namespace py = pybind11;
using namespace cloudheight;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

Raster to_raster(const Array2& a, double pitch)
{
    if (a.ndim() != 2)
        throw py::value_error("images must be 2-D arrays");
    const auto r = a.unchecked<2>();
    Raster out(r.shape(0), r.shape(1), pitch);
    for (py::ssize_t i = 0; i < r.shape(0); ++i)
        for (py::ssize_t j = 0; j < r.shape(1); ++j)
            out(i, j) = r(i, j);
    return out;
}

std::vector<Raster> to_rasters(const std::vector<Array2>& images, double pitch)
{
    std::vector<Raster> out;
    for (const auto& a : images)
        out.push_back(to_raster(a, pitch));
    return out;
}

py::array_t<double> to_array(const Raster& r)
{
    py::array_t<double> out({r.rows, r.cols});
    std::copy(r.values.begin(), r.values.end(), out.mutable_data());
    return out;
}

template <class T>
py::array_t<T> grid_array(const std::vector<T>& v, long rows, long cols)
{
    py::array_t<T> out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// N x 2 (row, col) coordinates plus values split into equal consecutive blocks.
SuperImage make_super(const Eigen::MatrixXd& coords, const Eigen::VectorXd& values, std::size_t cameras)
{
    if (coords.cols() != 2 || coords.rows() != values.size())
        throw py::value_error("coords must be N x 2 with one row per value");
    if (cameras == 0 || static_cast<std::size_t>(values.size()) % cameras != 0)
        throw py::value_error("values must split into equal camera blocks");
    const Eigen::Index m = values.size() / static_cast<Eigen::Index>(cameras);
    std::vector<Patch> patches(cameras);
    for (std::size_t k = 0; k < cameras; ++k) {
        const Eigen::Index off = static_cast<Eigen::Index>(k) * m;
        for (Eigen::Index i = 0; i < m; ++i)
            patches[k].coords.push_back({coords(off + i, 0), coords(off + i, 1)});
        patches[k].values = values.segment(off, m);
    }
    return interlace(patches);
}

std::vector<Point2> to_points(const Eigen::MatrixXd& coords)
{
    if (coords.cols() != 2)
        throw py::value_error("coords must be N x 2");
    std::vector<Point2> pts;
    for (Eigen::Index i = 0; i < coords.rows(); ++i)
        pts.push_back({coords(i, 0), coords(i, 1)});
    return pts;
}

}  // namespace

PYBIND11_MODULE(_cloudheight, m)
{
    m.doc() = "Stereo cloud-top height estimation from multi-angle imagery";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
    py::register_exception<OutOfRasterError>(m, "OutOfRasterError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    py::enum_<Mode>(m, "Mode").value("low", Mode::low).value("high", Mode::high).value("baseline", Mode::baseline);
    py::enum_<Method>(m, "Method")
        .value("full", Method::full)
        .value("pairwise", Method::pairwise)
        .value("no_newton", Method::no_newton)
        .value("baseline", Method::baseline)
        .value("wrong_nu", Method::wrong_nu);
    py::enum_<Rejection>(m, "Rejection")
        .value("none", Rejection::none)
        .value("all_invalid", Rejection::all_invalid)
        .value("few_valid", Rejection::few_valid)
        .value("boundary", Rejection::boundary)
        .value("flat", Rejection::flat);
    py::enum_<SigmaDivisor>(m, "SigmaDivisor").value("m", SigmaDivisor::m).value("m_minus_3", SigmaDivisor::m_minus_3);

    py::class_<CameraSpec>(m, "Camera")
        .def(py::init([](std::string name, double theta, double delay) { return CameraSpec{std::move(name), theta, delay}; }),
             py::arg("name"), py::arg("theta_deg"), py::arg("delay_s") = 0.0)
        .def_readwrite("name", &CameraSpec::name)
        .def_readwrite("theta_deg", &CameraSpec::theta_deg)
        .def_readwrite("delay_s", &CameraSpec::delay_s)
        .def("__repr__", [](const CameraSpec& c) {
            return "Camera('" + c.name + "', " + std::to_string(c.theta_deg) + ", " + std::to_string(c.delay_s) + ")";
        });

    py::class_<HeightWind>(m, "HeightWind")
        .def(py::init([](double h, double v1, double v2) { return HeightWind{h, v1, v2}; }), py::arg("h"),
             py::arg("v1") = 0.0, py::arg("v2") = 0.0)
        .def_readwrite("h", &HeightWind::h)
        .def_readwrite("v1", &HeightWind::v1)
        .def_readwrite("v2", &HeightWind::v2);

    py::class_<PixelShift>(m, "PixelShift")
        .def_readonly("along", &PixelShift::along)
        .def_readonly("across", &PixelShift::across)
        .def_readonly("int_along", &PixelShift::int_along)
        .def_readonly("int_across", &PixelShift::int_across)
        .def_readonly("frac_along", &PixelShift::frac_along)
        .def_readonly("frac_across", &PixelShift::frac_across);

    py::class_<MaternParams>(m, "MaternParams")
        .def(py::init([](double sigma, double rho, double nu) { return MaternParams{sigma, rho, nu}; }),
             py::arg("sigma") = 1.0, py::arg("rho") = 4.0, py::arg("nu") = 4.0 / 3.0)
        .def_readwrite("sigma", &MaternParams::sigma)
        .def_readwrite("rho", &MaternParams::rho)
        .def_readwrite("nu", &MaternParams::nu);

    py::class_<SearchGrid>(m, "SearchGrid")
        .def(py::init([](double h_min, double h_max, double h_step, std::vector<double> v1, std::vector<double> v2) {
                 SearchGrid g{h_min, h_max, h_step, std::move(v1), std::move(v2)};
                 validate(g);
                 return g;
             }),
             py::arg("h_min") = 0.0, py::arg("h_max") = 3.0e4, py::arg("h_step") = 100.0,
             py::arg("v1") = std::vector<double>{0.0}, py::arg("v2") = std::vector<double>{0.0})
        .def_readwrite("h_min", &SearchGrid::h_min)
        .def_readwrite("h_max", &SearchGrid::h_max)
        .def_readwrite("h_step", &SearchGrid::h_step)
        .def_readwrite("v1", &SearchGrid::v1)
        .def_readwrite("v2", &SearchGrid::v2)
        .def("heights", &SearchGrid::heights)
        .def("candidates", &SearchGrid::candidates);

    py::class_<EstimatorConfig>(m, "EstimatorConfig")
        .def(py::init([](std::vector<CameraSpec> cameras, Mode mode, MaternParams params, double pitch, unsigned workers) {
                 EstimatorConfig c;
                 c.cameras = std::move(cameras);
                 c.mode = mode;
                 c.params = params;
                 c.pitch = pitch;
                 c.workers = workers;
                 validate(c);
                 return c;
             }),
             py::arg("cameras"), py::arg("mode") = Mode::low, py::arg("params") = MaternParams{},
             py::arg("pitch") = kMisrPitchMeters, py::arg("workers") = 1u)
        .def_readwrite("cameras", &EstimatorConfig::cameras)
        .def_readwrite("mode", &EstimatorConfig::mode)
        .def_readwrite("params", &EstimatorConfig::params)
        .def_readwrite("pitch", &EstimatorConfig::pitch)
        .def_readwrite("nugget", &EstimatorConfig::nugget)
        .def_readwrite("divisor", &EstimatorConfig::divisor)
        .def_readwrite("tau_flat", &EstimatorConfig::tau_flat)
        .def_readwrite("min_valid_fraction", &EstimatorConfig::min_valid_fraction)
        .def_readwrite("workers", &EstimatorConfig::workers);

    py::class_<LikelihoodProfile>(m, "LikelihoodProfile")
        .def_readonly("candidates", &LikelihoodProfile::candidates)
        .def_readonly("loglik", &LikelihoodProfile::loglik)
        .def_readonly("candidate_valid", &LikelihoodProfile::candidate_valid)
        .def_readonly("best", &LikelihoodProfile::best)
        .def_readonly("valid_count", &LikelihoodProfile::valid_count)
        .def_readonly("flatness", &LikelihoodProfile::flatness)
        .def_readonly("valid", &LikelihoodProfile::valid)
        .def_readonly("rejection", &LikelihoodProfile::rejection)
        .def_property_readonly("best_candidate", &LikelihoodProfile::best_candidate);

    py::class_<SimConfig>(m, "SimConfig")
        .def(py::init<>())
        .def_readwrite("strip2_gain", &SimConfig::strip2_gain)
        .def_readwrite("patch_gain", &SimConfig::patch_gain)
        .def_readwrite("patch_anchor", &SimConfig::patch_anchor)
        .def_readwrite("kappa", &SimConfig::kappa)
        .def_readwrite("d_min", &SimConfig::d_min)
        .def_readwrite("d_max", &SimConfig::d_max)
        .def_readwrite("d_step", &SimConfig::d_step)
        .def_readwrite("params", &SimConfig::params)
        .def_readwrite("wrong_nu", &SimConfig::wrong_nu);

    m.attr("MISR_PITCH_M") = kMisrPitchMeters;
    m.attr("DEFAULT_NUGGET") = kDefaultNugget;

    m.def("misr_cameras", &misr_camera_bank);
    m.def("along_track_parallax", &along_track_parallax, py::arg("hw"), py::arg("cam_i"), py::arg("cam_j"));
    m.def("across_track_parallax", &across_track_parallax, py::arg("hw"), py::arg("cam_i"), py::arg("cam_j"));
    m.def("shift_for_camera", &shift_for_camera, py::arg("hw"), py::arg("cam"), py::arg("ref"),
          py::arg("pitch_m") = kMisrPitchMeters);

    m.def("bessel_k", py::vectorize(&bessel_k), py::arg("nu"), py::arg("x"));
    m.def(
        "matern", [](double r, const MaternParams& p) { return matern(r, p); }, py::arg("r"),
        py::arg("params") = MaternParams{});
    m.def(
        "cov_matrix",
        [](const Eigen::MatrixXd& coords, const MaternParams& p, double nugget) {
            return cov_matrix(to_points(coords), p, nugget);
        },
        py::arg("coords"), py::arg("params") = MaternParams{}, py::arg("nugget") = kDefaultNugget);

    m.def(
        "low_cloud_loglik",
        [](const Eigen::MatrixXd& coords, const Eigen::VectorXd& values, std::size_t cameras, const MaternParams& p,
           bool newton, double nugget, SigmaDivisor divisor) {
            LowCloudOptions o;
            o.newton = newton;
            o.nugget = nugget;
            o.divisor = divisor;
            return low_cloud_loglik(make_super(coords, values, cameras), p, o);
        },
        py::arg("coords"), py::arg("values"), py::arg("cameras"), py::arg("params") = MaternParams{},
        py::arg("newton") = true, py::arg("nugget") = kDefaultNugget, py::arg("divisor") = SigmaDivisor::m);
    m.def(
        "high_cloud_loglik",
        [](const Eigen::MatrixXd& coords, const Eigen::VectorXd& values, std::size_t cameras, const MaternParams& p,
           double nugget) { return high_cloud_loglik(make_super(coords, values, cameras), p, nugget); },
        py::arg("coords"), py::arg("values"), py::arg("cameras"), py::arg("params") = MaternParams{},
        py::arg("nugget") = kDefaultNugget);

    m.def(
        "simulate_scene",
        [](std::vector<CameraSpec> cameras, long rows, long cols, const HeightWind& truth, const MaternParams& p,
           std::uint64_t seed) {
            SceneConfig sc;
            sc.cameras = std::move(cameras);
            sc.rows = rows;
            sc.cols = cols;
            sc.truth = truth;
            sc.params = p;
            std::vector<py::array_t<double>> out;
            for (const auto& r : simulate_scene(sc, seed))
                out.push_back(to_array(r));
            return out;
        },
        py::arg("cameras"), py::arg("rows") = 48, py::arg("cols") = 16, py::arg("truth") = HeightWind{5000.0, 0.0, 0.0},
        py::arg("params") = MaternParams{}, py::arg("seed") = 0);

    m.def(
        "stabilize",
        [](const std::vector<Array2>& images, long col_begin, long col_end, std::size_t reference) {
            const auto rasters = to_rasters(images, kMisrPitchMeters);
            const long end = col_end < 0 ? rasters.at(0).cols : col_end;
            const auto map = stabilize(rasters, ColumnRange{col_begin, end}, reference);
            std::vector<std::pair<double, double>> gains;
            for (const auto& g : map.cameras)
                gains.emplace_back(g.gain, g.offset);
            std::vector<py::array_t<double>> out;
            for (const auto& r : apply_stabilization(map, rasters))
                out.push_back(to_array(r));
            return py::make_tuple(out, gains);
        },
        py::arg("images"), py::arg("col_begin") = 0, py::arg("col_end") = -1, py::arg("reference") = 0);

    m.def(
        "search",
        [](const std::vector<Array2>& images, std::pair<long, long> origin, std::pair<long, long> size,
           const SearchGrid& grid, const EstimatorConfig& cfg) {
            const auto rasters = to_rasters(images, cfg.pitch);
            py::gil_scoped_release release;
            return search(rasters, Window{{origin.first, origin.second}, {size.first, size.second}}, grid, cfg);
        },
        py::arg("images"), py::arg("origin"), py::arg("size") = std::pair<long, long>{15, 16},
        py::arg("grid") = SearchGrid{}, py::arg("config"));

    m.def(
        "height_map",
        [](const std::vector<Array2>& images, std::pair<long, long> size, long stride, const SearchGrid& grid,
           const EstimatorConfig& cfg) {
            const auto rasters = to_rasters(images, cfg.pitch);
            HeightMap map;
            {
                py::gil_scoped_release release;
                map = sliding_height_map(rasters, {size.first, size.second}, stride, grid, cfg);
            }
            std::vector<std::uint8_t> rej;
            for (const auto r : map.rejection)
                rej.push_back(static_cast<std::uint8_t>(r));
            py::dict out;
            out["height"] = grid_array(map.height, map.rows, map.cols);
            out["valid"] = grid_array(map.valid, map.rows, map.cols).attr("astype")("bool");
            out["flatness"] = grid_array(map.flatness, map.rows, map.cols);
            out["rejection"] = grid_array(rej, map.rows, map.cols);
            out["stride"] = map.stride;
            out["coverage"] = map.coverage();
            return out;
        },
        py::arg("images"), py::arg("size") = std::pair<long, long>{15, 16}, py::arg("stride") = 1,
        py::arg("grid") = SearchGrid{}, py::arg("config"));

    m.def("rep_seed", &rep_seed, py::arg("master_seed"), py::arg("rep"));
    m.def(
        "simulate_strip", [](const SimConfig& cfg, std::uint64_t seed) { return to_array(simulate_strip(cfg, seed)); },
        py::arg("config") = SimConfig{}, py::arg("seed") = 0);
    m.def(
        "run_table1",
        [](std::size_t reps, std::uint64_t seed, std::vector<Method> methods, unsigned workers, const SimConfig& cfg) {
            std::vector<MethodResult> res;
            {
                py::gil_scoped_release release;
                res = run_table1(cfg, methods, reps, seed, workers);
            }
            py::list out;
            for (const auto& r : res) {
                py::dict d;
                d["method"] = std::string(to_string(r.method));
                d["mean"] = r.mean;
                d["rmse"] = r.rmse;
                d["estimates"] = r.estimates;
                out.append(d);
            }
            return out;
        },
        py::arg("reps") = 100, py::arg("seed") = 1,
        py::arg("methods") = std::vector<Method>(kAllMethods.begin(), kAllMethods.end()), py::arg("workers") = 1u,
        py::arg("config") = SimConfig{});
}
