#include "svr/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace svr {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelConfig read_model_config(const KeyValueConfig& kv) {
  ModelConfig c;
  c.curve.kind = parse_curve_kind(kv.get_string("curve.kind"));
  c.curve.d = static_cast<int>(kv.get_int("curve.d"));
  c.curve.kappa = kv.get_double("curve.kappa", c.curve.kappa);
  c.curve.length = kv.get_double("curve.length", c.curve.length);
  c.curve.delta = kv.get_double("curve.delta", c.curve.delta);
  c.curve.helix_a = kv.get_double("curve.helix_a", c.curve.helix_a);
  c.curve.helix_amplitude = kv.get_double("curve.helix_amplitude", c.curve.helix_amplitude);
  c.curve.decay = parse_helix_decay(kv.get_string("curve.decay", to_string(c.curve.decay)));
  c.curve.scale = kv.get_double("curve.scale", c.curve.scale);
  c.grid = kv.get_int("curve.grid", c.grid);
  if (kv.has("curve.normalize_reach")) c.normalize_reach = kv.get_double("curve.normalize_reach");

  c.link.kind = parse_link_kind(kv.get_string("link.kind", "identity"));
  c.link.s = kv.get_double("link.s", c.link.s);
  c.link.slope = kv.get_double("link.slope", c.link.slope);
  c.link.offset = kv.get_double("link.offset", c.link.offset);
  c.link.exponent = kv.get_double("link.exponent", c.link.exponent);
  if (kv.has("link.scale")) {
    c.link.scale = kv.get_double("link.scale");
    c.link_scale_is_length = false;
  }
  if (kv.has("link.table_t")) c.link.table_t = kv.get_doubles("link.table_t");
  if (kv.has("link.table_f")) c.link.table_f = kv.get_doubles("link.table_f");

  c.sigma_gamma = kv.get_double("sigma_gamma", c.sigma_gamma);
  c.sigma_zeta = kv.get_double("sigma_zeta", c.sigma_zeta);
  c.trunc_frac = kv.get_double("trunc_frac", c.trunc_frac);
  c.line_tube_sigmas = kv.get_double("line_tube_sigmas", c.line_tube_sigmas);
  c.curve.validate();
  return c;
}

DiscretizedCurve build_model_curve(const ModelConfig& cfg) {
  DiscretizedCurve curve = build_curve(cfg.curve, cfg.grid);
  if (cfg.normalize_reach) curve = normalize_to_reach(curve, *cfg.normalize_reach);
  return curve;
}

ModelSpec build_model(const ModelConfig& cfg) {
  DiscretizedCurve curve = build_model_curve(cfg);
  LinkSpec link = cfg.link;
  if (cfg.link_scale_is_length) link.scale = curve.length();
  return ModelSpec(std::move(curve), std::move(link), cfg.sigma_gamma, cfg.sigma_zeta, cfg.trunc_frac,
                   cfg.line_tube_sigmas);
}

FitConfig read_fit_config(const KeyValueConfig& kv, const std::string& prefix) {
  FitConfig c;
  c.l = static_cast<int>(kv.get_int(prefix + "l", c.l));
  c.j = static_cast<int>(kv.get_int(prefix + "j", c.j));
  c.m = static_cast<int>(kv.get_int(prefix + "m", c.m));
  if (kv.has(prefix + "M")) {
    const std::string v = kv.get_string(prefix + "M");
    c.M = (v == "inf" || v == "unbounded") ? Bound::unbounded() : Bound(parse_double(v, prefix + "M"));
  }
  c.partition = parse_partition_mode(kv.get_string(prefix + "partition", to_string(c.partition)));
  c.distance = parse_distance_mode(kv.get_string(prefix + "distance", to_string(c.distance)));
  c.heavy_threshold_factor = kv.get_double(prefix + "heavy_threshold_factor", c.heavy_threshold_factor);
  c.strict_zero_fallback = kv.get_bool(prefix + "strict_zero_fallback", c.strict_zero_fallback);
  c.validate();
  return c;
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const bool oracle = data.oracle_t && data.oracle_tangent;
  out << data.dim() << ',' << data.size() << ',' << (oracle ? 1 : 0) << '\n';
  std::string line;
  for (Index i = 0; i < data.size(); ++i) {
    line.clear();
    for (Index k = 0; k < data.X.cols(); ++k) line += format_double(data.X(i, k)) + ',';
    line += format_double(data.Y(i));
    if (oracle) {
      line += ',' + format_double((*data.oracle_t)(i));
      for (Index k = 0; k < data.X.cols(); ++k) line += ',' + format_double((*data.oracle_tangent)(i, k));
    }
    out << line << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

namespace {

std::vector<double> split_numbers(const std::string& line, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, where));
  return out;
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": missing header");
  const auto header = split_numbers(line, path + " header");
  if (header.size() != 3) throw Error(path + ": header must be 'd,n,has_oracle'");
  const auto d = static_cast<Index>(header[0]);
  const auto n = static_cast<Index>(header[1]);
  const bool oracle = header[2] != 0.0;
  if (d < 1 || n < 0) throw Error(path + ": invalid header values");
  const Index width = d + 1 + (oracle ? d + 1 : 0);

  Dataset ds;
  ds.X.resize(n, d);
  ds.Y.resize(n);
  if (oracle) {
    ds.oracle_t = Vector(n);
    ds.oracle_tangent = PointMatrix(n, d);
  }
  for (Index i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw Error(path + ": expected " + std::to_string(n) + " rows");
    const auto v = split_numbers(line, path + " row " + std::to_string(i + 1));
    if (static_cast<Index>(v.size()) != width) throw Error(path + ": row " + std::to_string(i + 1) + " has wrong width");
    for (Index k = 0; k < d; ++k) ds.X(i, k) = v[static_cast<std::size_t>(k)];
    ds.Y(i) = v[static_cast<std::size_t>(d)];
    if (oracle) {
      (*ds.oracle_t)(i) = v[static_cast<std::size_t>(d + 1)];
      for (Index k = 0; k < d; ++k) (*ds.oracle_tangent)(i, k) = v[static_cast<std::size_t>(d + 2 + k)];
    }
  }
  return ds;
}

}  // namespace svr
