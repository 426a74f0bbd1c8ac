#include "svr/curve.hpp"
#include "svr/estimator.hpp"
#include "svr/experiments.hpp"
#include "svr/io.hpp"
#include "svr/model_io.hpp"
#include "svr/tuning.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

using namespace svr;

std::string bound_text(const Bound& b) { return b.is_unbounded() ? "unbounded" : format_double(b.value()); }

int curve_info(const std::string& kind, int d, double kappa, double length, std::optional<double> target,
               long long grid) {
  CurveSpec spec;
  spec.kind = parse_curve_kind(kind);
  spec.d = d;
  spec.kappa = kappa;
  spec.length = length;
  DiscretizedCurve curve = build_curve(spec, grid);
  if (target) curve = normalize_to_reach(curve, *target);
  const CurveGeometryReport r = geometry_report(curve);
  std::cout << "kind,d,len,reach,max_curvature,srank_sum,srank_count,complexity\n"
            << kind << ',' << r.d << ',' << format_double(r.len) << ',' << bound_text(r.reach) << ','
            << format_double(r.max_curvature) << ',' << format_double(r.stable_rank_sum) << ','
            << r.stable_rank_count << ',' << format_double(r.regression_complexity) << '\n';
  return 0;
}

int synth(const std::string& model_path, long long n, long long seed, const std::string& out) {
  const KeyValueConfig kv = KeyValueConfig::load(model_path);
  const ModelConfig cfg = read_model_config(kv);
  kv.check_all_used();
  const ModelSpec model = build_model(cfg);
  write_dataset(sample_dataset(model, n, static_cast<std::uint64_t>(seed)), out);
  return 0;
}

int fit_cmd(const std::string& data_path, const std::string& config_path, const std::string& out) {
  const KeyValueConfig kv = KeyValueConfig::load(config_path);
  const FitConfig cfg = read_fit_config(kv);
  kv.check_all_used();
  save_model(fit(read_dataset(data_path), cfg), out);
  return 0;
}

int predict_cmd(const std::string& model_path, const std::string& data_path, const std::string& out_path) {
  const SvrModel model = load_model(model_path);
  const Dataset data = read_dataset(data_path);
  const PredictionBatch pred = predict_detailed(model, data.X);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot open '" + out_path + "' for writing");
  out << "index,prediction,slice\n";
  for (Index i = 0; i < pred.values.size(); ++i)
    out << i << ',' << format_double(pred.values(i)) << ',' << pred.slices[static_cast<std::size_t>(i)] << '\n';
  if (!out) throw Error("failed writing '" + out_path + "'");
  return 0;
}

int tune(const std::string& model_path, long long n, const std::string& regime) {
  const KeyValueConfig kv = KeyValueConfig::load(model_path);
  const ModelConfig cfg = read_model_config(kv);
  const AbsoluteConstants abs = AbsoluteConstants::from_config(kv, "abs.");
  const double rho = kv.get_double("theory.seminorm_rho", 0.0);
  kv.check_all_used();
  const TheoryConstants tc = theory_constants_for(build_model(cfg), abs, rho);
  Selection sel;
  long long n_min = 0;
  const AssumptionReport rep = assumption_report(tc);
  if (regime == "noisy") {
    sel = select_noisy(tc, n);
    n_min = rep.n_min_noisy;
  } else if (regime == "noiseless") {
    sel = select_noiseless(tc, n);
    n_min = rep.n_min_noiseless;
  } else if (regime == "wide") {
    sel = select_wide(tc);
    n_min = rep.n_min_noisy;
  } else {
    throw Error("unknown regime '" + regime + "'");
  }
  const DerivedConstants dc = derived_constants(tc);
  std::cout << "l,j,regime,C_gamma_f,M_star,l_max,n_min\n"
            << sel.l << ',' << sel.j << ',' << to_string(sel.regime) << ',' << format_double(dc.C_gamma_f) << ','
            << (dc.M_star ? format_double(*dc.M_star) : std::string("none")) << ',' << bound_text(dc.l_max) << ','
            << n_min << '\n';
  return 0;
}

int experiment(const std::string& config_path, const std::string& out) {
  write_metrics_csv(out, run_experiment(load_experiment_config(config_path)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Significant vector regression toolkit"};
  app.require_subcommand(1);

  auto* ci = app.add_subcommand("curve-info", "Print geometry of a built curve as CSV");
  std::string kind;
  int d = 2;
  double kappa = 0.0, length = 1.0;
  std::optional<double> target;
  long long grid = 4000;
  ci->add_option("--kind", kind, "line | arc | meyer-staircase | meyer-helix")->required();
  ci->add_option("--d", d, "ambient dimension")->required();
  ci->add_option("--kappa", kappa, "arc curvature");
  ci->add_option("--length", length, "line/arc length");
  ci->add_option("--normalize-reach", target, "rescale so the reach equals this value");
  ci->add_option("--grid", grid, "arc-length grid size");

  auto* sy = app.add_subcommand("synth", "Sample a dataset from a model config");
  std::string model_path, out;
  long long n = 0, seed = 0;
  sy->add_option("--model", model_path)->required();
  sy->add_option("--n", n)->required();
  sy->add_option("--seed", seed)->required();
  sy->add_option("--out", out)->required();

  auto* fi = app.add_subcommand("fit", "Fit an estimator to a dataset");
  std::string data_path, config_path;
  fi->add_option("--data", data_path)->required();
  fi->add_option("--config", config_path)->required();
  fi->add_option("--out", out)->required();

  auto* pr = app.add_subcommand("predict", "Predict with a saved model");
  pr->add_option("--model", model_path)->required();
  pr->add_option("--data", data_path)->required();
  pr->add_option("--out", out)->required();

  auto* tu = app.add_subcommand("tune", "Theory-driven (l, j) selection");
  std::string regime = "noisy";
  tu->add_option("--model", model_path)->required();
  tu->add_option("--n", n)->required();
  tu->add_option("--regime", regime)->check(CLI::IsMember({"noisy", "noiseless", "wide"}));

  auto* ex = app.add_subcommand("experiment", "Run an experiment grid and write metrics CSV");
  ex->add_option("--config", config_path)->required();
  ex->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ci) return curve_info(kind, d, kappa, length, target, grid);
    if (*sy) return synth(model_path, n, seed, out);
    if (*fi) return fit_cmd(data_path, config_path, out);
    if (*pr) return predict_cmd(model_path, data_path, out);
    if (*tu) return tune(model_path, n, regime);
    if (*ex) return experiment(config_path, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
