#include "svr/curve.hpp"
#include "svr/estimator.hpp"
#include "svr/experiments.hpp"
#include "svr/io.hpp"
#include "svr/key_value.hpp"
#include "svr/model_io.hpp"
#include "svr/synthesis.hpp"
#include "svr/tuning.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace svr;

namespace {

py::object bound_to_py(const Bound& b) {
  return b.is_unbounded() ? py::object(py::none()) : py::object(py::float_(b.value()));
}

py::dict curve_info(const std::string& kind, int d, double kappa, double length, std::optional<double> normalize_reach,
                    long long grid) {
  CurveSpec spec;
  spec.kind = parse_curve_kind(kind);
  spec.d = d;
  spec.kappa = kappa;
  spec.length = length;
  DiscretizedCurve curve = build_curve(spec, grid);
  if (normalize_reach) curve = normalize_to_reach(curve, *normalize_reach);
  const CurveGeometryReport r = geometry_report(curve);
  py::dict out;
  out["kind"] = kind;
  out["d"] = r.d;
  out["len"] = r.len;
  out["reach"] = bound_to_py(r.reach);
  out["max_curvature"] = r.max_curvature;
  out["srank_sum"] = r.stable_rank_sum;
  out["srank_count"] = r.stable_rank_count;
  out["complexity"] = r.regression_complexity;
  return out;
}

// Parses a flat key-value document and rejects keys the reader did not consume.
ModelSpec model_from_text(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  const ModelConfig cfg = read_model_config(kv);
  kv.check_all_used();
  return build_model(cfg);
}

FitConfig fit_config(int l, int j, int m, const std::string& partition, const std::string& distance,
                     double heavy_threshold_factor, bool strict_zero_fallback) {
  FitConfig fc;
  fc.l = l;
  fc.j = j;
  fc.m = m;
  fc.partition = parse_partition_mode(partition);
  fc.distance = parse_distance_mode(distance);
  fc.heavy_threshold_factor = heavy_threshold_factor;
  fc.strict_zero_fallback = strict_zero_fallback;
  return fc;
}

py::dict row_to_dict(const MetricsRow& r) {
  py::dict out;
  out["experiment_id"] = r.experiment_id;
  out["curve_kind"] = r.curve_kind;
  out["d"] = r.d;
  out["n"] = r.n;
  out["rep"] = r.rep;
  out["sigma_zeta"] = r.sigma_zeta;
  out["sigma_gamma"] = r.sigma_gamma;
  out["l"] = r.l;
  out["j"] = r.j;
  out["m"] = r.m;
  out["mse"] = r.mse;
  out["rel_mse"] = r.rel_mse;
  out["center_err"] = r.center_err;
  out["vec_err"] = r.vec_err;
  out["h_mean"] = r.h_mean;
  out["misclass2"] = r.misclass2;
  out["fit_ms"] = r.fit_ms;
  out["pred_ms"] = r.pred_ms;
  out["failed"] = r.failed;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Single-index regression along a curve: curves, sampling, fitting and experiments";
  py::register_exception<Error>(mod, "SvrError", PyExc_ValueError);

  mod.def("curve_info", &curve_info, py::arg("kind"), py::arg("d"), py::arg("kappa") = 0.0,
          py::arg("length") = 1.0, py::arg("normalize_reach") = std::nullopt, py::arg("grid") = 4000,
          "Geometry of a built curve; reach is None when unbounded.");

  py::class_<ModelSpec>(mod, "Model")
      .def(py::init(&model_from_text), py::arg("config_text"), "Build from key-value config text.")
      .def_static("load", [](const std::string& path) {
        const KeyValueConfig kv = KeyValueConfig::load(path);
        const ModelConfig cfg = read_model_config(kv);
        kv.check_all_used();
        return build_model(cfg);
      }, py::arg("path"))
      .def_property_readonly("d", &ModelSpec::dim)
      .def_property_readonly("sigma_gamma", &ModelSpec::sigma_gamma)
      .def_property_readonly("sigma_zeta", &ModelSpec::sigma_zeta)
      .def_property_readonly("length", [](const ModelSpec& m) { return m.curve().length(); })
      .def_property_readonly("reach", [](const ModelSpec& m) { return bound_to_py(m.reach()); })
      .def("link", [](const ModelSpec& m, double t) { return m.link()(t); }, py::arg("t"))
      .def("sample", [](const ModelSpec& m, Index n, std::uint64_t seed) {
        const Dataset ds = sample_dataset(m, n, seed);
        return py::make_tuple(ds.X, ds.Y, *ds.oracle_t);
      }, py::arg("n"), py::arg("seed"), "Returns (X, Y, t).");

  py::class_<SvrModel>(mod, "Estimator")
      .def_static("fit", [](const PointMatrix& X, const Vector& Y, int l, int j, int m, const std::string& partition,
                            const std::string& distance, double factor, bool strict) {
        return fit(X, Y, fit_config(l, j, m, partition, distance, factor, strict));
      }, py::arg("X"), py::arg("Y"), py::arg("l"), py::arg("j") = 1, py::arg("m") = 1,
         py::arg("partition") = "uniform", py::arg("distance") = "anisotropic", py::arg("heavy_threshold_factor") = 1.0,
         py::arg("strict_zero_fallback") = false)
      .def("predict", [](const SvrModel& m, const PointMatrix& X, unsigned threads) { return predict(m, X, threads); },
           py::arg("X"), py::arg("threads") = 0)
      .def("assign", [](const SvrModel& m, const PointMatrix& X) { return predict_detailed(m, X, 1).slices; },
           py::arg("X"), "Nearest heavy slice per row.")
      .def_property_readonly("d", [](const SvrModel& m) { return m.d; })
      .def_property_readonly("l", [](const SvrModel& m) { return m.config.l; })
      .def_property_readonly("heavy", [](const SvrModel& m) { return m.heavy; })
      .def_property_readonly("knots", [](const SvrModel& m) { return m.partition.knots; })
      .def_property_readonly("H", [](const SvrModel& m) {
        std::vector<double> out;
        for (const SliceStats& s : m.slices) out.push_back(s.H);
        return out;
      })
      .def("to_json", [](const SvrModel& m) { return model_to_json(m).dump(); })
      .def_static("from_json", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); },
                  py::arg("text"));

  py::class_<Selection>(mod, "Selection")
      .def_readonly("l", &Selection::l)
      .def_readonly("j", &Selection::j)
      .def_property_readonly("regime", [](const Selection& s) { return to_string(s.regime); });

  mod.def("tune", [](const std::string& config_text, long long n, const std::string& regime) {
    const KeyValueConfig kv = KeyValueConfig::parse(config_text);
    const ModelConfig cfg = read_model_config(kv);
    const AbsoluteConstants abs = AbsoluteConstants::from_config(kv, "abs.");
    const double rho = kv.get_double("theory.seminorm_rho", 0.0);
    kv.check_all_used();
    const TheoryConstants tc = theory_constants_for(build_model(cfg), abs, rho);
    if (regime == "noisy") return select_noisy(tc, n);
    if (regime == "noiseless") return select_noiseless(tc, n);
    if (regime == "wide") return select_wide(tc);
    throw Error("unknown regime '" + regime + "'");
  }, py::arg("config_text"), py::arg("n"), py::arg("regime") = "noisy");

  mod.def("run_experiment", [](const std::string& config_text) {
    const std::vector<MetricsRow> rows = run_experiment(read_experiment_config(KeyValueConfig::parse(config_text)));
    py::list out;
    for (const MetricsRow& r : rows) out.append(row_to_dict(r));
    return out;
  }, py::arg("config_text"),
     "Rows as dicts keyed by the metrics CSV columns.");

  mod.def("write_experiment_csv", [](const std::string& config_text, const std::string& path) {
    write_metrics_csv(path, run_experiment(read_experiment_config(KeyValueConfig::parse(config_text))));
  }, py::arg("config_text"), py::arg("path"));

  mod.def("fit_rate", [](const std::string& csv_path, const std::string& y_field, double n_lo, double n_hi) {
    return fit_rate(read_metrics_csv(csv_path), "n", y_field, n_lo, n_hi);
  }, py::arg("csv_path"), py::arg("y_field"), py::arg("n_lo"), py::arg("n_hi"));

  mod.attr("METRICS_HEADER") = [] {
    std::ostringstream s;
    write_metrics_csv(s, {});
    std::string h = s.str();
    h.pop_back();
    return h;
  }();
}
