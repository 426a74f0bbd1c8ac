#include "svr/model_io.hpp"

#include <fstream>

namespace svr {

using nlohmann::json;

namespace {

json vec(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector to_vec(const json& j, Index expected, const char* what) {
  const auto raw = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Index>(raw.size()) != expected)
    throw Error(std::string("model: field '") + what + "' has wrong length");
  Vector v(static_cast<Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) v(static_cast<Index>(i)) = raw[i];
  return v;
}

json config_json(const FitConfig& c) {
  json j;
  j["l"] = c.l;
  j["j"] = c.j;
  j["m"] = c.m;
  if (c.M.is_unbounded())
    j["M"] = "unbounded";
  else
    j["M"] = c.M.value();
  j["partition"] = to_string(c.partition);
  j["distance"] = to_string(c.distance);
  j["heavy_threshold_factor"] = c.heavy_threshold_factor;
  j["strict_zero_fallback"] = c.strict_zero_fallback;
  return j;
}

FitConfig config_from(const json& j) {
  FitConfig c;
  c.l = j.at("l").get<int>();
  c.j = j.at("j").get<int>();
  c.m = j.at("m").get<int>();
  const json& M = j.at("M");
  c.M = M.is_string() ? (M.get<std::string>() == "unbounded" ? Bound::unbounded()
                                                              : throw Error("model: bad M value"))
                      : Bound(M.get<double>());
  c.partition = parse_partition_mode(j.at("partition").get<std::string>());
  c.distance = parse_distance_mode(j.at("distance").get<std::string>());
  c.heavy_threshold_factor = j.at("heavy_threshold_factor").get<double>();
  c.strict_zero_fallback = j.at("strict_zero_fallback").get<bool>();
  c.validate();
  return c;
}

}  // namespace

json model_to_json(const SvrModel& model) {
  json doc;
  doc["version"] = kModelFormatVersion;
  doc["config"] = config_json(model.config);
  doc["d"] = model.d;
  doc["n_train"] = model.n_train;
  doc["partition_mode"] = to_string(model.partition.mode);
  doc["partition_degenerate"] = model.partition.degenerate;
  doc["range_knots"] = model.partition.knots;

  json slices = json::array();
  for (const SliceStats& s : model.slices) {
    json js;
    js["h"] = s.h;
    js["n"] = s.n;
    js["mean"] = vec(s.mean);
    js["eigvals"] = vec(s.eigvals);
    json cols = json::array();
    for (Index c = 0; c < s.eigvecs.cols(); ++c) cols.push_back(vec(s.eigvecs.col(c)));
    js["eigvecs"] = cols;
    js["sig_vec"] = vec(s.sig_vec);
    js["H"] = s.H;
    js["heavy"] = s.heavy;
    slices.push_back(std::move(js));
  }
  doc["slices"] = std::move(slices);

  json regs = json::array();
  for (const LocalRegressor& r : model.regressors) {
    json jr;
    jr["h"] = r.h;
    jr["lo"] = r.lo;
    jr["hi"] = r.hi;
    jr["fallback"] = r.fallback;
    json bins = json::array();
    for (const BinFit& b : r.bins) {
      bins.push_back({{"included", b.included},
                      {"count", b.count},
                      {"center", b.center},
                      {"half_width", b.half_width},
                      {"coeffs", vec(b.coeffs)}});
    }
    jr["bins"] = std::move(bins);
    regs.push_back(std::move(jr));
  }
  doc["regressors"] = std::move(regs);
  return doc;
}

SvrModel model_from_json(const json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("model: unsupported format version " + std::to_string(version));
    SvrModel m;
    m.config = config_from(doc.at("config"));
    m.d = doc.at("d").get<int>();
    if (m.d < 1) throw Error("model: d must be >= 1");
    m.n_train = doc.at("n_train").get<Index>();
    m.partition.mode = parse_partition_mode(doc.at("partition_mode").get<std::string>());
    m.partition.degenerate = doc.at("partition_degenerate").get<bool>();
    m.partition.knots = doc.at("range_knots").get<std::vector<double>>();
    if (m.partition.knots.size() < 2) throw Error("model: need at least two range knots");

    for (const json& js : doc.at("slices")) {
      SliceStats s;
      s.h = js.at("h").get<int>();
      s.n = js.at("n").get<Index>();
      s.mean = to_vec(js.at("mean"), m.d, "mean");
      s.eigvals = to_vec(js.at("eigvals"), m.d, "eigvals");
      const json& cols = js.at("eigvecs");
      if (static_cast<int>(cols.size()) != m.d) throw Error("model: eigvecs has wrong shape");
      s.eigvecs.resize(m.d, m.d);
      for (int c = 0; c < m.d; ++c) s.eigvecs.col(c) = to_vec(cols[static_cast<std::size_t>(c)], m.d, "eigvecs");
      s.sig_vec = to_vec(js.at("sig_vec"), m.d, "sig_vec");
      s.H = js.at("H").get<double>();
      s.heavy = js.at("heavy").get<bool>();
      if (s.h != static_cast<int>(m.slices.size())) throw Error("model: slices out of order");
      if (s.heavy) m.heavy.push_back(s.h);
      m.slices.push_back(std::move(s));
    }
    if (static_cast<int>(m.slices.size()) != m.partition.count())
      throw Error("model: slice count does not match range knots");

    for (const json& jr : doc.at("regressors")) {
      LocalRegressor r;
      r.h = jr.at("h").get<int>();
      r.lo = jr.at("lo").get<double>();
      r.hi = jr.at("hi").get<double>();
      r.fallback = jr.at("fallback").get<double>();
      for (const json& jb : jr.at("bins")) {
        BinFit b;
        b.included = jb.at("included").get<bool>();
        b.count = jb.at("count").get<Index>();
        b.center = jb.at("center").get<double>();
        b.half_width = jb.at("half_width").get<double>();
        b.coeffs = to_vec(jb.at("coeffs"), -1, "coeffs");
        r.bins.push_back(std::move(b));
      }
      m.regressors.push_back(std::move(r));
    }
    if (m.regressors.size() != m.heavy.size()) throw Error("model: regressor count does not match heavy slices");
    for (std::size_t k = 0; k < m.heavy.size(); ++k)
      if (m.regressors[k].h != m.heavy[k]) throw Error("model: regressors out of order");
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const SvrModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

SvrModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error("model '" + path + "': " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace svr
