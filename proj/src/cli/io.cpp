#include "sysrisk/cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sysrisk::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where + ": missing \"" + key + "\"");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + ": expected a number");
  return j.get<double>();
}

Index integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + ": expected an integer");
  return j.get<Index>();
}

const json& array(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + ": expected an array");
  return j;
}

Eigen::VectorXd vector(const json& j, const std::string& where) {
  array(j, where);
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = number(j[k], where);
  return v;
}

Eigen::MatrixXd matrix(const json& j, const std::string& where) {
  array(j, where);
  if (j.empty()) fail(where + ": expected a nonempty array of rows");
  const std::size_t cols = array(j[0], where).size();
  Eigen::MatrixXd m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (array(j[r], where).size() != cols) fail(where + ": rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = number(j[r][c], where);
    }
  }
  return m;
}

std::string kind_of(const json& j, const std::string& where) {
  const json& k = field(j, "kind", where);
  if (!k.is_string()) fail(where + ": \"kind\" must be a string");
  return k.get<std::string>();
}

PiecewiseLinear piecewise(const json& j, const std::string& where) {
  PiecewiseLinear f;
  for (const json& p : array(field(j, "pieces", where), where + ".pieces")) {
    f.pieces.push_back({number(field(p, "slope", where), where), number(field(p, "intercept", where), where)});
  }
  return f;
}

Index scenario_ref(const json& j, const SpacePtr& space, const std::string& where) {
  if (j.is_string()) return space->index_of(j.get<std::string>());
  const Index w = integer(j, where);
  if (w < 0 || w >= space->size()) fail(where + ": scenario index out of range");
  return w;
}

MarketMode market_mode(const json& j, const std::string& where) {
  auto it = j.find("mode");
  if (it == j.end()) return MarketMode::Span;
  if (*it == "span") return MarketMode::Span;
  if (*it == "cone") return MarketMode::Cone;
  fail(where + ": mode must be \"span\" or \"cone\"");
}

void emit(std::string& out, const nlohmann::ordered_json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += std::string(",") + nl;
        first = false;
        out += pad + nlohmann::ordered_json(key).dump() + (indent > 0 ? ": " : ":");
        emit(out, value, indent, depth + 1);
      }
      out += nl + close + "}";
      return;
    }
    case nlohmann::ordered_json::value_t::array: {
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      if (!flat) out += nl;
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k > 0) out += flat ? ", " : std::string(",") + nl;
        if (!flat) out += pad;
        emit(out, j[k], indent, depth + 1);
      }
      if (!flat) out += nl + close;
      out += "]";
      return;
    }
    case nlohmann::ordered_json::value_t::number_float: {
      const double v = j.get<double>() + 0.0;  // folds -0 into 0
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
}

SpacePtr parse_space(const json& j) {
  std::vector<std::string> ids;
  std::vector<double> z;
  for (const json& s : array(field(j, "scenarios", "space"), "space.scenarios")) {
    const json& id = field(s, "id", "space.scenarios[]");
    if (!id.is_string()) fail("space.scenarios[]: id must be a string");
    ids.push_back(id.get<std::string>());
    z.push_back(s.contains("z") ? number(s["z"], "space.scenarios[].z") : 1.0);
  }
  return ScenarioSpace::build(std::move(ids), std::move(z));
}

RandomVector parse_random_vector(const json& j, const SpacePtr& space) {
  Eigen::MatrixXd values = matrix(field(j, "values", "random vector"), "random vector values");
  if (j.contains("agents") && integer(j["agents"], "random vector agents") != values.rows()) {
    fail("random vector: \"agents\" differs from the number of value rows");
  }
  return RandomVector(space, std::move(values));
}

Aggregation parse_aggregation(const json& j) {
  const std::string kind = kind_of(j, "aggregation");
  if (kind == "sum_utility") {
    SumUtility s;
    s.alpha = j.contains("alpha") ? number(j["alpha"], "sum_utility.alpha") : 0.0;
    if (j.contains("u")) s.u = piecewise(j["u"], "sum_utility.u");
    s.alpha_i = vector(field(j, "alpha_i", "sum_utility"), "sum_utility.alpha_i");
    for (const json& u : array(field(j, "u_i", "sum_utility"), "sum_utility.u_i")) {
      s.u_i.push_back(piecewise(u, "sum_utility.u_i[]"));
    }
    return Aggregation(std::move(s));
  }
  if (kind == "negative_part") {
    return Aggregation(NegativePart{vector(field(j, "alpha", "negative_part"), "negative_part.alpha")});
  }
  if (kind == "network") {
    Network n;
    n.pi = matrix(field(j, "pi", "network"), "network.pi");
    n.gamma_net = number(field(j, "gamma_net", "network"), "network.gamma_net");
    return Aggregation(std::move(n));
  }
  if (kind == "affine_max") {
    const json& pieces = array(field(j, "pieces", "affine_max"), "affine_max.pieces");
    if (pieces.empty()) fail("affine_max: needs at least one piece");
    const Index n = static_cast<Index>(array(field(pieces[0], "slope", "affine_max"), "affine_max.slope").size());
    AffineMax a{Eigen::MatrixXd(static_cast<Index>(pieces.size()), n), Eigen::VectorXd(pieces.size())};
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const Eigen::VectorXd slope = vector(field(pieces[k], "slope", "affine_max"), "affine_max.slope");
      if (slope.size() != n) fail("affine_max: slopes differ in length");
      a.slopes.row(static_cast<Index>(k)) = slope.transpose();
      a.intercepts(static_cast<Index>(k)) = number(field(pieces[k], "intercept", "affine_max"), "affine_max.intercept");
    }
    return Aggregation(std::move(a));
  }
  fail("aggregation: unknown kind \"" + kind + "\"");
}

Acceptance parse_acceptance(const json& j, const SpacePtr& space) {
  const std::string kind = kind_of(j, "acceptance");
  if (kind == "pointwise") {
    return Acceptance(Pointwise{j.contains("c") ? number(j["c"], "pointwise.c") : 0.0}, space);
  }
  if (kind == "expectation_family") {
    ExpectationFamily fam;
    for (const json& t : array(field(j, "tests", "expectation_family"), "expectation_family.tests")) {
      const Eigen::MatrixXd p = matrix(field(t, "P", "expectation test"), "expectation test P");
      fam.tests.push_back({validate_probability_vector(space, p),
                           number(field(t, "alpha", "expectation test"), "expectation test alpha")});
    }
    return Acceptance(std::move(fam), space);
  }
  fail("acceptance: unknown kind \"" + kind + "\"");
}

MarketSet parse_market(const json& j, const SpacePtr& space, Index agents) {
  const std::string kind = kind_of(j, "market");
  const MarketMode mode = market_mode(j, "market");
  if (kind == "basis") {
    std::vector<RandomVector> basis;
    if (j.contains("vectors")) {
      for (const json& v : array(j["vectors"], "market.vectors")) basis.push_back(parse_random_vector(v, space));
    }
    const bool per_agent = j.contains("per_agent") && j["per_agent"].get<bool>();
    return MarketSet(space, agents, mode, std::move(basis), per_agent);
  }
  if (kind == "tree") {
    PricePaths paths;
    paths.periods = integer(field(j, "T", "tree market"), "tree market T");
    paths.assets = integer(field(j, "assets", "tree market"), "tree market assets");
    for (const json& p : array(field(j, "paths", "tree market"), "tree market paths")) {
      paths.prices.push_back(matrix(p, "tree market path"));
    }
    std::vector<Partition> filtration;
    for (const json& part : array(field(j, "filtration", "tree market"), "tree market filtration")) {
      Partition cells;
      for (const json& cell : array(part, "filtration partition")) {
        std::vector<Index> ids;
        for (const json& w : array(cell, "filtration cell")) ids.push_back(scenario_ref(w, space, "filtration cell"));
        cells.push_back(std::move(ids));
      }
      filtration.push_back(std::move(cells));
    }
    std::vector<std::vector<Index>> assignment(static_cast<std::size_t>(std::max<Index>(paths.assets, 0)));
    const json& a = field(j, "agent_assignment", "tree market");
    for (Index asset = 1; asset <= paths.assets; ++asset) {
      const json* owners = nullptr;
      if (a.is_object() && a.contains(std::to_string(asset))) owners = &a[std::to_string(asset)];
      if (a.is_array() && static_cast<Index>(a.size()) >= asset) owners = &a[static_cast<std::size_t>(asset - 1)];
      if (!owners) fail("tree market: no agent assignment for asset " + std::to_string(asset));
      for (const json& o : array(*owners, "agent assignment")) {
        assignment[static_cast<std::size_t>(asset - 1)].push_back(integer(o, "agent assignment"));
      }
    }
    auto basis = build_gain_basis(space, agents, paths, assignment, filtration);
    return MarketSet(space, agents, mode, std::move(basis));
  }
  fail("market: unknown kind \"" + kind + "\"");
}

Instance parse_instance(const json& j) {
  try {
    SpacePtr space = parse_space(field(j, "space", "instance"));
    const Index n = integer(field(j, "N", "instance"), "instance N");
    if (n < 1) fail("instance: N must be >= 1");
    Aggregation lambda = parse_aggregation(field(j, "lambda", "instance"));
    Acceptance acceptance = parse_acceptance(field(j, "acceptance", "instance"), space);
    MarketSet market = j.contains("market") ? parse_market(j["market"], space, n) : MarketSet::trivial(space, n);
    std::optional<Aggregation> gamma;
    if (j.contains("gamma_agg")) gamma = parse_aggregation(j["gamma_agg"]);
    Instance inst{std::move(space), n, std::move(lambda), std::move(acceptance), std::move(market), std::move(gamma)};
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    fail(std::string("instance: ") + e.what());
  }
}

Instance load_instance(const std::string& path) { return parse_instance(read_json_file(path)); }

RandomVector load_random_vector(const std::string& path, const SpacePtr& space) {
  try {
    return parse_random_vector(read_json_file(path), space);
  } catch (const json::exception& e) {
    fail(path + ": " + e.what());
  }
}

std::string dump_stable(const nlohmann::ordered_json& j, int indent) {
  std::string out;
  emit(out, j, indent, 0);
  return out;
}

}  // namespace sysrisk::cli
