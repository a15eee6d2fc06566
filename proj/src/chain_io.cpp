#include "vjmstiff/chain_io.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <fstream>
#include <map>
#include <sstream>

namespace vjm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ChainParseError(what); }

[[noreturn]] void fail_element(size_t index, const json& e,
                               const std::string& what) {
  std::ostringstream os;
  os << "element " << index;
  if (e.contains("name") && e["name"].is_string())
    os << " ('" << e["name"].get<std::string>() << "')";
  os << ": " << what;
  fail(os.str());
}

void check_fields(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* name : allowed)
      if (item.key() == name) {
        known = true;
        break;
      }
    if (!known) fail(where + ": unknown field '" + item.key() + "'");
  }
}

template <int Rows>
Eigen::Matrix<double, Rows, Rows> parse_square(const json& value,
                                               const std::string& where) {
  if (!value.is_array() || value.size() != Rows)
    fail(where + ": expected a " + std::to_string(Rows) + "x" +
         std::to_string(Rows) + " row-major array");
  Eigen::Matrix<double, Rows, Rows> m;
  for (int r = 0; r < Rows; ++r) {
    const json& row = value[r];
    if (!row.is_array() || row.size() != Rows)
      fail(where + ": row " + std::to_string(r) + " must have " +
           std::to_string(Rows) + " entries");
    for (int c = 0; c < Rows; ++c) {
      if (!row[c].is_number())
        fail(where + ": entry (" + std::to_string(r) + "," +
             std::to_string(c) + ") is not a number");
      m(r, c) = row[c].get<double>();
      if (!std::isfinite(m(r, c)))
        fail(where + ": entry (" + std::to_string(r) + "," +
             std::to_string(c) + ") is not finite");
    }
  }
  return m;
}

Axis parse_axis(const json& e, size_t index) {
  if (!e.contains("axis") || !e["axis"].is_string())
    fail_element(index, e, "missing axis");
  const std::string a = e["axis"].get<std::string>();
  if (a == "Tx") return Axis::Tx;
  if (a == "Ty") return Axis::Ty;
  if (a == "Tz") return Axis::Tz;
  if (a == "Rx") return Axis::Rx;
  if (a == "Ry") return Axis::Ry;
  if (a == "Rz") return Axis::Rz;
  fail_element(index, e, "unknown axis '" + a + "'");
}

double parse_number(const json& e, size_t index, const char* field) {
  if (!e.contains(field) || !e[field].is_number())
    fail_element(index, e, std::string("missing numeric field '") + field + "'");
  const double v = e[field].get<double>();
  if (!std::isfinite(v))
    fail_element(index, e, std::string("field '") + field + "' is not finite");
  return v;
}

Matrix6 invert_compliance(const Matrix6& compliance, const std::string& label) {
  const Matrix6 sym = 0.5 * (compliance + compliance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(sym);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    fail("compliance matrix '" + label +
         "' is not positive definite (min eigenvalue " +
         std::to_string(eig.eigenvalues().minCoeff()) + ")");
  return sym.inverse();
}

ChainModel parse_document(const json& doc) {
  check_fields(doc, {"name", "compliance_matrices", "elements"}, "document");

  std::string name;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) fail("'name' must be a string");
    name = doc["name"].get<std::string>();
  }

  std::map<std::string, Matrix6> compliance;
  if (doc.contains("compliance_matrices")) {
    const json& table = doc["compliance_matrices"];
    if (!table.is_object()) fail("'compliance_matrices' must be an object");
    for (const auto& item : table.items())
      compliance[item.key()] =
          parse_square<6>(item.value(), "compliance matrix '" + item.key() + "'");
  }

  if (!doc.contains("elements") || !doc["elements"].is_array())
    fail("missing 'elements' array");

  std::vector<ChainElement> elements;
  const json& list = doc["elements"];
  for (size_t i = 0; i < list.size(); ++i) {
    const json& e = list[i];
    if (!e.is_object()) fail_element(i, e, "must be an object");
    if (!e.contains("kind") || !e["kind"].is_string())
      fail_element(i, e, "missing 'kind'");
    const std::string kind = e["kind"].get<std::string>();
    ChainElement element;
    if (e.contains("name")) element.name = e["name"].get<std::string>();
    const std::string where = "element " + std::to_string(i);

    if (kind == "rigid") {
      check_fields(e, {"kind", "name", "transform", "axis", "value"}, where);
      if (e.contains("transform")) {
        if (e.contains("axis") || e.contains("value"))
          fail_element(i, e, "'transform' excludes 'axis'/'value'");
        Transform t = parse_square<4>(e["transform"], where + " transform");
        // Raw rotation blocks are re-orthonormalized once, here.
        const Eigen::Matrix3d r = t.block<3, 3>(0, 0);
        if (!is_valid_transform(t, 1e-6))
          fail_element(i, e, "transform is not a rigid transform");
        t.block<3, 3>(0, 0) = orthonormalized<double>(r);
        t.row(3) << 0, 0, 0, 1;
        element = el::rigid(t, element.name);
      } else {
        element = el::rigid(parse_axis(e, i), parse_number(e, i, "value"),
                            element.name);
      }
    } else if (kind == "passive") {
      check_fields(e, {"kind", "name", "axis", "q_index"}, where);
      element = el::passive(parse_axis(e, i), element.name);
      if (e.contains("q_index")) element.q_index = e["q_index"].get<int>();
    } else if (kind == "actuated") {
      check_fields(e, {"kind", "name", "axis", "value"}, where);
      element = el::actuated(parse_axis(e, i), parse_number(e, i, "value"),
                             element.name);
    } else if (kind == "spring1") {
      check_fields(e, {"kind", "name", "axis", "k", "theta_index"}, where);
      const double k = parse_number(e, i, "k");
      if (!(k > 0.0)) fail_element(i, e, "'k' must be positive");
      element = el::spring(parse_axis(e, i), k, element.name);
      if (e.contains("theta_index"))
        element.theta_index = e["theta_index"].get<int>();
    } else if (kind == "spring6") {
      check_fields(e, {"kind", "name", "compliance", "stiffness", "scale",
                       "theta_index"},
                   where);
      if (e.contains("compliance") == e.contains("stiffness"))
        fail_element(i, e, "need exactly one of 'compliance' or 'stiffness'");
      double scale = 1.0;
      if (e.contains("scale")) {
        scale = parse_number(e, i, "scale");
        if (!(scale > 0.0)) fail_element(i, e, "'scale' must be positive");
      }
      Matrix6 stiffness;
      if (e.contains("compliance")) {
        const json& c = e["compliance"];
        if (c.is_string()) {
          const std::string ref = c.get<std::string>();
          auto it = compliance.find(ref);
          if (it == compliance.end())
            fail_element(i, e, "unknown compliance matrix '" + ref + "'");
          stiffness = invert_compliance(it->second, ref);
        } else {
          stiffness = invert_compliance(
              parse_square<6>(c, where + " compliance"), where);
        }
      } else {
        stiffness = parse_square<6>(e["stiffness"], where + " stiffness");
      }
      element = el::spring(Matrix6(scale * stiffness), element.name);
      if (e.contains("theta_index"))
        element.theta_index = e["theta_index"].get<int>();
    } else {
      fail_element(i, e, "unknown element kind '" + kind + "'");
    }
    elements.push_back(std::move(element));
  }

  try {
    return assemble_chain(std::move(name), std::move(elements));
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

}  // namespace

ChainModel parse_chain(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("document root must be an object");
  try {
    return parse_document(doc);
  } catch (const json::exception& e) {
    fail(std::string("malformed value: ") + e.what());
  }
}

ChainModel load_chain_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open chain file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_chain(buffer.str());
}

}  // namespace vjm
