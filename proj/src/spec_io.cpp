#include "fluidq/spec_io.hpp"

#include <fstream>
#include <json.hpp>

namespace fluidq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw SpecParseError("model spec: field '" + field + "': " + what);
}

const json& need(const json& j, const std::string& field) {
  if (!j.contains(field)) fail(field, "missing");
  return j.at(field);
}

double number(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

Mat matrix(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  if (rows > 0) {
    if (!j[0].is_array()) fail(field, "expected an array of rows");
    cols = j[0].size();
  }
  Mat m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) fail(field, "ragged matrix");
    for (size_t k = 0; k < cols; ++k) m(i, k) = number(j[i][k], field);
  }
  return m;
}

RowVec row_vector(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array");
  RowVec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], field);
  return v;
}

PHDist ph_dist(const json& j, const std::string& field) {
  PHDist d;
  d.alpha = row_vector(need(j, "alpha"), field + ".alpha");
  d.U = matrix(need(j, "U"), field + ".U");
  return d;
}

ClassicModel parse_classic(const json& j) {
  ClassicModel m;
  m.Tpp = matrix(need(j, "Tpp"), "Tpp");
  m.Tpm = matrix(need(j, "Tpm"), "Tpm");
  m.Tmp = matrix(need(j, "Tmp"), "Tmp");
  m.Tmm = matrix(need(j, "Tmm"), "Tmm");
  m.T0mm = matrix(need(j, "T0mm"), "T0mm");
  m.T0mp = matrix(need(j, "T0mp"), "T0mp");
  return m;
}

int color_count(const json& j) {
  const json& c = need(j, "C");
  if (!c.is_number_integer() || c.get<int>() < 1) fail("C", "expected a positive integer");
  return c.get<int>();
}

ColoredModel parse_colored(const json& j) {
  ColoredModel m;
  m.C = color_count(j);
  m.n_minus = static_cast<Eigen::Index>(number(need(j, "n_minus"), "n_minus"));
  m.n_plus.assign(m.C + 1, 0);
  m.Tmm.resize(m.C + 1);
  m.Tmp.resize(m.C + 1);
  m.Tpp.resize(m.C + 1);
  m.Tpm.resize(m.C + 1);
  m.T0mp.resize(m.C + 1);
  m.Tmp2.resize(m.C);
  m.Tpp2.resize(m.C);

  auto per_color = [&](const char* name, std::vector<Mat>& dst) {
    const json& arr = need(j, name);
    if (!arr.is_array() || static_cast<int>(arr.size()) != m.C)
      fail(name, "expected one matrix per color");
    for (int c = 1; c <= m.C; ++c)
      dst[c] = matrix(arr[c - 1], std::string(name) + "[" + std::to_string(c) + "]");
  };
  per_color("Tmm", m.Tmm);
  per_color("Tmp", m.Tmp);
  per_color("Tpp", m.Tpp);
  per_color("Tpm", m.Tpm);
  per_color("T0mp", m.T0mp);
  for (int c = 1; c <= m.C; ++c) m.n_plus[c] = m.Tpp[c].rows();
  m.T0mm = matrix(need(j, "T0mm"), "T0mm");

  auto table = [&](const char* name, ColorBlockTable& dst) {
    if (!j.contains(name)) return;
    const json& arr = j.at(name);
    if (!arr.is_array()) fail(name, "expected an array of {from,to,matrix} entries");
    for (const auto& e : arr) {
      const int from = static_cast<int>(number(need(e, "from"), std::string(name) + ".from"));
      const int to = static_cast<int>(number(need(e, "to"), std::string(name) + ".to"));
      if (from < 1 || to <= from || to > m.C) fail(name, "need 1 <= from < to <= C");
      dst.set(from, to, matrix(need(e, "matrix"), std::string(name) + ".matrix"));
    }
  };
  table("Tmp2", m.Tmp2);
  table("Tpp2", m.Tpp2);
  return m;
}

JumpModel parse_jumps(const json& j) {
  JumpModel m;
  m.C = color_count(j);
  m.n_minus = static_cast<Eigen::Index>(number(need(j, "n_minus"), "n_minus"));
  const json& tmm = need(j, "Tmm");
  if (!tmm.is_array() || static_cast<int>(tmm.size()) != m.C + 1)
    fail("Tmm", "expected C+1 matrices (boundary first)");
  m.Tmm.resize(m.C + 1);
  for (int c = 0; c <= m.C; ++c)
    m.Tmm[c] = matrix(tmm[c], "Tmm[" + std::to_string(c) + "]");

  m.ph.resize(m.C + 1);
  const json& ph = need(j, "ph");
  if (!ph.is_array()) fail("ph", "expected an array of {color,type,alpha,U}");
  for (const auto& e : ph) {
    const int color = static_cast<int>(number(need(e, "color"), "ph.color"));
    const int type = static_cast<int>(number(need(e, "type"), "ph.type"));
    if (color < 1 || color > m.C) fail("ph.color", "out of range");
    if (type != static_cast<int>(m.ph[color].size()) + 1)
      fail("ph.type", "types of each color must be listed in order starting from 1");
    m.ph[color].push_back(ph_dist(e, "ph"));
  }

  if (j.contains("rules")) {
    const json& rules = j.at("rules");
    if (!rules.is_array()) fail("rules", "expected an array of {from,to,type,matrix}");
    for (const auto& e : rules) {
      JumpModel::Rule r;
      r.from = static_cast<int>(number(need(e, "from"), "rules.from"));
      r.to = static_cast<int>(number(need(e, "to"), "rules.to"));
      r.type = static_cast<int>(number(need(e, "type"), "rules.type"));
      r.rate = matrix(need(e, "matrix"), "rules.matrix");
      m.rules.push_back(std::move(r));
    }
  }
  return m;
}

double threshold_value(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    fail("thresholds", "only the literal \"inf\" is accepted as a string");
  }
  return j.get<double>();
}

LCFSSpec parse_lcfs(const json& j) {
  LCFSSpec s;
  s.arrivals.D0 = matrix(need(j, "D0"), "D0");
  const json& d = need(j, "D");
  if (!d.is_array() || d.empty()) fail("D", "expected one matrix per job type");
  for (size_t l = 0; l < d.size(); ++l)
    s.arrivals.D.push_back(matrix(d[l], "D[" + std::to_string(l + 1) + "]"));
  const json& svc = need(j, "services");
  if (!svc.is_array() || svc.size() != d.size())
    fail("services", "expected one distribution per job type");
  for (const auto& e : svc) s.services.push_back(ph_dist(e, "services"));
  const json& thr = need(j, "thresholds");
  if (!thr.is_array() || thr.size() != d.size())
    fail("thresholds", "expected one threshold per job type");
  for (const auto& e : thr) s.thresholds.push_back(threshold_value(e));
  return s;
}

CascadeSpec parse_cascade(const json& j) {
  CascadeSpec s;
  s.arrivals.D0 = matrix(need(j, "D0"), "D0");
  s.arrivals.D.push_back(matrix(need(j, "D1"), "D1"));
  const json& lv = need(j, "levels");
  if (!lv.is_number_integer() || lv.get<int>() < 1) fail("levels", "expected a positive integer");
  s.levels = lv.get<int>();
  const json& ph = need(j, "ph");
  if (!ph.is_array() || static_cast<int>(ph.size()) < s.levels)
    fail("ph", "expected at least `levels` distributions");
  for (const auto& e : ph) s.ph.push_back(ph_dist(e, "ph"));
  if (j.contains("gamma")) {
    const json& g = need(j, "gamma");
    if (!g.is_array()) fail("gamma", "expected an array of spawn rates");
    for (const auto& e : g) s.gamma.push_back(number(e, "gamma"));
  }
  if (static_cast<int>(s.gamma.size()) < s.levels - 1)
    fail("gamma", "expected at least levels-1 spawn rates");
  const json& n = need(j, "N");
  if (!n.is_number_integer() || n.get<int>() < 1) fail("N", "expected a positive integer");
  s.N = n.get<int>();
  return s;
}

}  // namespace

ModelSpec parse_model_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecParseError(std::string("model spec: invalid JSON: ") + e.what());
  }
  ModelSpec spec;
  const json& kind = need(j, "kind");
  if (!kind.is_string()) fail("kind", "expected a string");
  spec.kind = kind.get<std::string>();
  if (spec.kind == "classic")
    spec.classic = parse_classic(j);
  else if (spec.kind == "colored")
    spec.colored = parse_colored(j);
  else if (spec.kind == "jumps")
    spec.jumps = parse_jumps(j);
  else if (spec.kind == "lcfs")
    spec.lcfs = parse_lcfs(j);
  else if (spec.kind == "cascade")
    spec.cascade = parse_cascade(j);
  else
    fail("kind", "must be one of classic, colored, jumps, lcfs, cascade");
  return spec;
}

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SpecParseError("model spec: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_model_spec_json(text);
}

JumpModel spec_jump_model(const ModelSpec& spec) {
  if (spec.jumps) return *spec.jumps;
  if (spec.lcfs) return build_lcfs(*spec.lcfs);
  if (spec.cascade) return build_cascade(*spec.cascade);
  throw SpecParseError("model spec: kind '" + spec.kind + "' has no jump semantics");
}

}  // namespace fluidq
